#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dfd/audio.hpp"
#include "dfd/dsp.hpp"
#include "dfd/model.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SplitInfeasibleError : TrainError {
  using TrainError::TrainError;
};
struct DivergenceError : TrainError {
  using TrainError::TrainError;
};

struct Sample {
  std::shared_ptr<const Tensor> spec;  // {frames, mels}
  Label label = Label::Broken;
  std::string source_id;
};
using Dataset = std::vector<Sample>;

enum class SplitMode { Paper, Grouped };

struct SplitSpec {
  double test_fraction = 0.30;
  double val_fraction_of_train = 0.30;
  // Grouped mode splits over source_ids so augmented copies of one recording
  // never straddle partitions; paper mode splits over individual spectrograms.
  SplitMode mode = SplitMode::Grouped;
  std::uint64_t seed = 1;
};

struct Split {
  Dataset train, val, test;
};

// Stratified by class; per-class test count is ceil(fraction * class size).
Split split_dataset(const Dataset& corpus, const SplitSpec& spec);

struct TrainConfig {
  double lr = 0.001;
  std::size_t batch_size = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
};

// Decides when validation loss has stalled for `patience` epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
  // Returns true when training should stop after this epoch.
  bool observe(double val_loss);
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_loss_ = 0.0;
};

// Minibatch Adam with per-epoch shuffling, early stopping on validation loss,
// and best-weights restoration.
History train_model(Model& model, const Dataset& train_set, const Dataset& val_set,
                    const TrainConfig& cfg);

struct Metrics {
  std::vector<std::vector<std::size_t>> confusion;  // rows = truth, cols = pred
  std::vector<double> precision, recall, f1;
  std::vector<std::size_t> support;
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::size_t total = 0;

  static Metrics from_confusion(const std::vector<std::vector<std::size_t>>& confusion);
};

Metrics evaluate_model(Model& model, const Dataset& test_set);

// Argmax class predictions in infer mode, batched.
std::vector<int> predict_labels(Model& model, const Dataset& set);

struct AblationRow {
  ModelVariant variant;
  std::string name;
  std::vector<double> seed_accuracy;
  double mean_accuracy = 0.0;
  double reference_accuracy = 0.0;  // published value, attached as metadata
};

// Trains all four variants on identical splits per seed; rows are in the
// fixed comparison order with their published reference accuracies.
std::vector<AblationRow> ablate(const Dataset& corpus, const TrainConfig& cfg,
                                const SplitSpec& split_spec,
                                const std::vector<std::uint64_t>& seeds);

struct AugmentComparisonRow {
  std::string name;
  double accuracy = 0.0;
  double reference_accuracy = 0.0;
};

// Trains the proposed variant on the augmented and the original corpus;
// augmented row first.
std::vector<AugmentComparisonRow> compare_augmentation(const Dataset& original,
                                                       const Dataset& augmented,
                                                       const TrainConfig& cfg,
                                                       const SplitSpec& split_spec);

// Report emission. config_echo carries the fully resolved run configuration.
std::string history_to_csv(const History& h);
std::string metrics_to_json(const Metrics& m,
                            const std::map<std::string, std::string>& config_echo);
std::string ablation_to_csv(const std::vector<AblationRow>& rows);
std::string augment_comparison_to_csv(const std::vector<AugmentComparisonRow>& rows);

// Featurizes clips with the given frontend; labels/source_ids carry over.
Dataset featurize_corpus(const std::vector<AudioClip>& clips, const FrontendConfig& cfg);

}  // namespace dfd
