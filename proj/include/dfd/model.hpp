#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfd/nn.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

enum class ModelVariant : std::uint8_t {
  CnnLeaky = 0,
  CnnLstmLeaky = 1,
  CnnLstmAttnLeaky = 2,  // the proposed architecture
  CnnLstmAttnRelu = 3,
};

const char* variant_name(ModelVariant v);
std::optional<ModelVariant> variant_from_name(std::string_view name);
inline constexpr ModelVariant kAllVariants[] = {
    ModelVariant::CnnLeaky, ModelVariant::CnnLstmLeaky,
    ModelVariant::CnnLstmAttnLeaky, ModelVariant::CnnLstmAttnRelu};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input geometry and layer widths shared by all variants.
struct ModelDims {
  std::size_t frames = 100;
  std::size_t mels = 96;
  std::size_t conv1_ch = 128, conv2_ch = 128, conv3_ch = 256;
  std::size_t lstm_hidden = 256;
  std::size_t fc1_units = 64;
};

// Conv feature extractor with LSTM/attention head, built by variant:
//   bn -> act -> conv1(128) -> bn -> act -> pool(2x4)
//   -> conv2(128) -> bn(x2 around) -> pool(2x4) -> conv3(256) -> ...
// then either flatten (CnnLeaky), last LSTM state, or attention context,
// followed by FC(64) -> act -> FC(n_classes).
class Model {
 public:
  Model(ModelVariant variant, int n_classes, std::uint64_t seed);

  // x: {B, frames, mels, 1}. Returns class probabilities {B, n_classes}.
  Tensor forward(const Tensor& x, Mode mode);
  // Same pass but returning raw logits (used by the training loss).
  Tensor forward_logits(const Tensor& x, Mode mode);
  // Backpropagates from dlogits; accumulates into parameter gradients.
  void backward(const Tensor& dlogits);

  std::vector<Parameter*> parameters();
  // Parameters plus BN running statistics; everything weight snapshots and
  // serialization must cover.
  std::vector<Tensor*> state_tensors();
  std::size_t parameter_count();
  void zero_grads();

  // Layer-name / output-shape pairs recorded by the latest forward pass.
  const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shape_trace() const {
    return trace_;
  }
  // Attention weights from the latest forward pass (empty for variants
  // without attention).
  const Tensor& attention_weights() const;

  ModelVariant variant() const { return variant_; }
  int n_classes() const { return n_classes_; }
  std::uint64_t seed() const { return seed_; }
  const ModelDims& dims() const { return dims_; }
  bool has_lstm() const;
  bool has_attention() const;

  // Model file: magic "DFDM", u32 version = 1, u8 variant, u32 n_classes,
  // u64 seed, then each state tensor as u32 ndim, u64 dims, float64 LE data.
  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  Tensor run_forward(const Tensor& x, Mode mode, bool want_probs);

  ModelVariant variant_;
  int n_classes_;
  std::uint64_t seed_;
  ModelDims dims_;
  double alpha_;

  BatchNorm bn1_, bn2_, bn3_, bn4_, bn5_, bn6_;
  std::vector<LeakyRelu> acts_;
  Conv2d conv1_, conv2_, conv3_;
  MaxPool2d pool1_, pool2_;
  std::unique_ptr<Lstm> lstm_;
  std::unique_ptr<Attention> attn_;
  Dense fc1_, fc2_;
  LeakyRelu fc1_act_;

  std::vector<std::pair<std::string, std::vector<std::size_t>>> trace_;
  std::vector<std::size_t> pre_head_shape_;
  std::size_t last_batch_ = 0;
};

}  // namespace dfd
