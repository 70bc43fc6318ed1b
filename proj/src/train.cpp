#include "dfd/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace dfd {

namespace {

const char* kComparisonNames[] = {"CNN - Leaky ReLU", "CNN - LSTM - Leaky ReLU",
                                  "CNN - LSTM - Attention - Leaky ReLU",
                                  "CNN - LSTM - Attention - ReLU"};
constexpr double kComparisonRefs[] = {69.95, 86.89, 92.35, 90.16};
constexpr ModelVariant kComparisonOrder[] = {
    ModelVariant::CnnLeaky, ModelVariant::CnnLstmLeaky,
    ModelVariant::CnnLstmAttnLeaky, ModelVariant::CnnLstmAttnRelu};

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Tensor make_batch(const Dataset& set, const std::vector<std::size_t>& idx,
                  std::size_t begin, std::size_t end) {
  const Tensor& first = *set[idx[begin]].spec;
  const std::size_t F = first.dim(0), M = first.dim(1);
  Tensor batch({end - begin, F, M, 1});
  for (std::size_t i = begin; i < end; ++i) {
    const Tensor& s = *set[idx[i]].spec;
    if (s.shape != first.shape) throw TrainError("inconsistent spectrogram shapes");
    std::copy_n(s.ptr(), s.size(), batch.ptr() + (i - begin) * F * M);
  }
  return batch;
}

// Forward a whole set in infer mode; returns mean loss and fills predictions.
double infer_pass(Model& model, const Dataset& set, std::vector<int>* preds,
                  double* accuracy) {
  constexpr std::size_t kBatch = 16;
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  if (preds) preds->assign(set.size(), -1);
  for (std::size_t b = 0; b < set.size(); b += kBatch) {
    const std::size_t e = std::min(set.size(), b + kBatch);
    Tensor batch = make_batch(set, idx, b, e);
    std::vector<int> targets;
    for (std::size_t i = b; i < e; ++i) targets.push_back(static_cast<int>(set[i].label));
    Tensor logits = model.forward_logits(batch, Mode::Infer);
    LossResult lr = softmax_cross_entropy(logits, targets);
    loss_sum += lr.loss * static_cast<double>(e - b);
    const std::size_t C = logits.dim(1);
    for (std::size_t i = b; i < e; ++i) {
      const double* row = logits.ptr() + (i - b) * C;
      int best = 0;
      for (std::size_t c = 1; c < C; ++c) {
        if (row[c] > row[best]) best = static_cast<int>(c);
      }
      if (preds) (*preds)[i] = best;
      if (best == targets[i - b]) ++correct;
    }
  }
  if (accuracy) {
    *accuracy = set.empty() ? 0.0 : static_cast<double>(correct) / set.size();
  }
  return set.empty() ? 0.0 : loss_sum / static_cast<double>(set.size());
}

}  // namespace

Split split_dataset(const Dataset& corpus, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
      !(spec.val_fraction_of_train > 0.0 && spec.val_fraction_of_train < 1.0)) {
    throw TrainError("split: fractions must lie in (0, 1)");
  }

  Split out;
  Rng rng(mix_seed(spec.seed, 0x517CC1B727220A95ull));
  for (int cls = 0; cls < kNumClasses; ++cls) {
    // A unit is a single item (paper mode) or all items of one source_id.
    std::vector<std::vector<std::size_t>> units;
    if (spec.mode == SplitMode::Paper) {
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (static_cast<int>(corpus[i].label) == cls) units.push_back({i});
      }
    } else {
      std::map<std::string, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (static_cast<int>(corpus[i].label) == cls) {
          groups[corpus[i].source_id].push_back(i);
        }
      }
      for (auto& [_, g] : groups) units.push_back(std::move(g));
    }
    if (units.empty()) continue;
    if (spec.mode == SplitMode::Grouped && units.size() < 3) {
      throw SplitInfeasibleError("split: class " +
                                 std::string(label_name(static_cast<Label>(cls))) +
                                 " has fewer than 3 source groups");
    }

    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_indices(order, rng);

    const std::size_t n = units.size();
    const std::size_t n_test = static_cast<std::size_t>(
        std::ceil(spec.test_fraction * static_cast<double>(n)));
    const std::size_t n_pool = n - n_test;
    const std::size_t n_val = static_cast<std::size_t>(
        std::ceil(spec.val_fraction_of_train * static_cast<double>(n_pool)));

    for (std::size_t u = 0; u < n; ++u) {
      Dataset* dest = u < n_test              ? &out.test
                      : u < n_test + n_val    ? &out.val
                                              : &out.train;
      for (std::size_t i : units[order[u]]) dest->push_back(corpus[i]);
    }
  }
  return out;
}

bool EarlyStopper::observe(double val_loss) {
  ++epoch_;
  if (epoch_ == 1 || val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

History train_model(Model& model, const Dataset& train_set, const Dataset& val_set,
                    const TrainConfig& cfg) {
  if (train_set.empty() || val_set.empty()) {
    throw TrainError("train: train and validation sets must be nonempty");
  }

  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  EarlyStopper stopper(cfg.patience);
  History history;
  std::vector<std::vector<double>> best_state;

  std::vector<std::size_t> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, epoch));
    shuffle_indices(idx, rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(idx.size(), b + cfg.batch_size);
      Tensor batch = make_batch(train_set, idx, b, e);
      std::vector<int> targets;
      for (std::size_t i = b; i < e; ++i) {
        targets.push_back(static_cast<int>(train_set[idx[i]].label));
      }

      Tensor logits = model.forward_logits(batch, Mode::Train);
      LossResult lr = softmax_cross_entropy(logits, targets);
      if (!std::isfinite(lr.loss)) {
        throw DivergenceError("train: loss diverged (NaN/Inf) at epoch " +
                              std::to_string(epoch));
      }
      loss_sum += lr.loss * static_cast<double>(e - b);

      const std::size_t C = logits.dim(1);
      for (std::size_t i = 0; i < e - b; ++i) {
        const double* row = logits.ptr() + i * C;
        std::size_t best = 0;
        for (std::size_t c = 1; c < C; ++c) {
          if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == targets[i]) ++correct;
      }

      model.backward(lr.dlogits);
      for (Parameter* p : model.parameters()) adam_step(*p, adam);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_acc = static_cast<double>(correct) / train_set.size();
    stats.val_loss = infer_pass(model, val_set, nullptr, &stats.val_acc);
    if (!std::isfinite(stats.val_loss)) {
      throw DivergenceError("train: validation loss diverged at epoch " +
                            std::to_string(epoch));
    }
    history.epochs.push_back(stats);

    const bool stop = stopper.observe(stats.val_loss);
    if (stopper.best_epoch() == epoch) {
      best_state.clear();
      for (Tensor* t : model.state_tensors()) best_state.push_back(t->data);
    }
    if (stop) break;
  }

  // restore the best-validation-loss weights
  if (!best_state.empty()) {
    std::size_t i = 0;
    for (Tensor* t : model.state_tensors()) t->data = best_state[i++];
  }
  history.best_epoch = stopper.best_epoch();
  history.best_val_loss = stopper.best_loss();
  return history;
}

Metrics Metrics::from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
  Metrics m;
  m.confusion = confusion;
  const std::size_t C = confusion.size();
  m.precision.assign(C, 0.0);
  m.recall.assign(C, 0.0);
  m.f1.assign(C, 0.0);
  m.support.assign(C, 0);

  std::size_t diag = 0;
  for (std::size_t t = 0; t < C; ++t) {
    for (std::size_t p = 0; p < C; ++p) {
      m.total += confusion[t][p];
      m.support[t] += confusion[t][p];
    }
    diag += confusion[t][t];
  }
  m.accuracy = m.total > 0 ? static_cast<double>(diag) / m.total : 0.0;

  for (std::size_t c = 0; c < C; ++c) {
    std::size_t pred_c = 0;
    for (std::size_t t = 0; t < C; ++t) pred_c += confusion[t][c];
    const double tp = static_cast<double>(confusion[c][c]);
    m.precision[c] = pred_c > 0 ? tp / pred_c : 0.0;
    m.recall[c] = m.support[c] > 0 ? tp / m.support[c] : 0.0;
    const double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;

    m.macro_precision += m.precision[c] / C;
    m.macro_recall += m.recall[c] / C;
    m.macro_f1 += m.f1[c] / C;
    if (m.total > 0) {
      const double wgt = static_cast<double>(m.support[c]) / m.total;
      m.weighted_precision += wgt * m.precision[c];
      m.weighted_recall += wgt * m.recall[c];
      m.weighted_f1 += wgt * m.f1[c];
    }
  }
  return m;
}

std::vector<int> predict_labels(Model& model, const Dataset& set) {
  std::vector<int> preds;
  infer_pass(model, set, &preds, nullptr);
  return preds;
}

Metrics evaluate_model(Model& model, const Dataset& test_set) {
  if (test_set.empty()) throw TrainError("evaluate: empty test set");
  std::vector<int> preds = predict_labels(model, test_set);
  std::vector<std::vector<std::size_t>> confusion(
      kNumClasses, std::vector<std::size_t>(kNumClasses, 0));
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    confusion[static_cast<int>(test_set[i].label)][preds[i]] += 1;
  }
  return Metrics::from_confusion(confusion);
}

std::vector<AblationRow> ablate(const Dataset& corpus, const TrainConfig& cfg,
                                const SplitSpec& split_spec,
                                const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw TrainError("ablate: need at least one seed");

  std::vector<AblationRow> rows(4);
  for (int v = 0; v < 4; ++v) {
    rows[v].variant = kComparisonOrder[v];
    rows[v].name = kComparisonNames[v];
    rows[v].reference_accuracy = kComparisonRefs[v];
  }

  for (std::uint64_t seed : seeds) {
    SplitSpec ss = split_spec;
    ss.seed = seed;
    const Split sp = split_dataset(corpus, ss);
    TrainConfig tc = cfg;
    tc.seed = seed;
    for (int v = 0; v < 4; ++v) {
      double acc = std::nan("");
      try {
        Model model(kComparisonOrder[v], kNumClasses, seed);
        train_model(model, sp.train, sp.val, tc);
        acc = evaluate_model(model, sp.test).accuracy;
      } catch (const std::exception&) {
        // leave the cell as NaN and keep going
      }
      rows[v].seed_accuracy.push_back(acc);
    }
  }

  for (AblationRow& row : rows) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double a : row.seed_accuracy) {
      if (std::isfinite(a)) {
        sum += a;
        ++n;
      }
    }
    row.mean_accuracy = n > 0 ? sum / n : std::nan("");
  }
  return rows;
}

std::vector<AugmentComparisonRow> compare_augmentation(const Dataset& original,
                                                       const Dataset& augmented,
                                                       const TrainConfig& cfg,
                                                       const SplitSpec& split_spec) {
  std::vector<AugmentComparisonRow> rows(2);
  rows[0].name = "Augmented dataset";
  rows[0].reference_accuracy = 92.35;
  rows[1].name = "Original dataset";
  rows[1].reference_accuracy = 84.13;

  const Dataset* sets[2] = {&augmented, &original};
  for (int i = 0; i < 2; ++i) {
    const Split sp = split_dataset(*sets[i], split_spec);
    Model model(ModelVariant::CnnLstmAttnLeaky, kNumClasses, cfg.seed);
    train_model(model, sp.train, sp.val, cfg);
    rows[i].accuracy = evaluate_model(model, sp.test).accuracy;
  }
  return rows;
}

std::string history_to_csv(const History& h) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const EpochStats& e = h.epochs[i];
    out << (i + 1) << ',' << fmt_double(e.train_loss) << ',' << fmt_double(e.train_acc)
        << ',' << fmt_double(e.val_loss) << ',' << fmt_double(e.val_acc) << '\n';
  }
  out << "# best_epoch=" << h.best_epoch << " best_val_loss=" << fmt_double(h.best_val_loss)
      << '\n';
  return out.str();
}

std::string metrics_to_json(const Metrics& m,
                            const std::map<std::string, std::string>& config_echo) {
  nlohmann::ordered_json j;
  j["classes"] = {"Broken", "Normal", "Other"};
  j["confusion"] = m.confusion;
  j["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < m.precision.size(); ++c) {
    j["per_class"].push_back({{"label", label_name(static_cast<Label>(c))},
                              {"precision", m.precision[c]},
                              {"recall", m.recall[c]},
                              {"f1", m.f1[c]},
                              {"support", m.support[c]}});
  }
  j["accuracy"] = m.accuracy;
  j["macro"] = {{"precision", m.macro_precision},
                {"recall", m.macro_recall},
                {"f1", m.macro_f1}};
  j["weighted"] = {{"precision", m.weighted_precision},
                   {"recall", m.weighted_recall},
                   {"f1", m.weighted_f1}};
  j["total"] = m.total;
  j["config"] = config_echo;
  return j.dump(2) + "\n";
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "model,mean_accuracy,reference_accuracy,per_seed\n";
  for (const AblationRow& r : rows) {
    out << '"' << r.name << "\"," << fmt_double(r.mean_accuracy) << ','
        << fmt_double(r.reference_accuracy) << ',';
    for (std::size_t i = 0; i < r.seed_accuracy.size(); ++i) {
      if (i) out << ';';
      out << fmt_double(r.seed_accuracy[i]);
    }
    out << '\n';
  }
  return out.str();
}

std::string augment_comparison_to_csv(const std::vector<AugmentComparisonRow>& rows) {
  std::ostringstream out;
  out << "dataset,accuracy,reference_accuracy\n";
  for (const AugmentComparisonRow& r : rows) {
    out << '"' << r.name << "\"," << fmt_double(r.accuracy) << ','
        << fmt_double(r.reference_accuracy) << '\n';
  }
  return out.str();
}

Dataset featurize_corpus(const std::vector<AudioClip>& clips, const FrontendConfig& cfg) {
  Dataset out;
  out.reserve(clips.size());
  for (const AudioClip& clip : clips) {
    Sample s;
    s.spec = std::make_shared<Tensor>(log_mel(clip, cfg).data);
    s.label = clip.label.value_or(Label::Other);
    s.source_id = clip.source_id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dfd
