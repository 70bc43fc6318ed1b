#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dfd/tensor.hpp"

namespace dfd {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Train, Infer };

// 3x3 convolution, stride 1, zero padding 1, channels-last (B,H,W,Cin).
class Conv2d {
 public:
  Conv2d(std::size_t in_ch, std::size_t out_ch);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(Rng& rng);

  Parameter w;  // {out_ch, 3, 3, in_ch}
  Parameter b;  // {out_ch}

 private:
  std::size_t in_ch_, out_ch_;
  Tensor cols_;  // cached im2col patches, {B, 9*in_ch, H*W}
  std::vector<std::size_t> x_shape_;
};

// Max pooling with stride = pool size, channels-last.
class MaxPool2d {
 public:
  MaxPool2d(std::size_t pool_h, std::size_t pool_w);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  std::size_t ph_, pw_;
  std::vector<std::size_t> argmax_;  // flat input index per output element
  std::vector<std::size_t> x_shape_;
};

// Per-channel batch normalization over batch and spatial axes (channels-last).
class BatchNorm {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.99,
                     double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& dy);
  void init(Rng& rng);

  Parameter gamma;  // {C}
  Parameter beta;   // {C}
  Tensor running_mean;
  Tensor running_var;
  bool initialized = false;  // at least one train-mode pass has happened

 private:
  std::size_t channels_;
  double momentum_, eps_;
  Tensor xhat_;
  std::vector<double> inv_std_;
  std::size_t rows_ = 0;
};

// Elementwise x > 0 ? x : alpha * x. alpha = 0 gives plain ReLU.
class LeakyRelu {
 public:
  explicit LeakyRelu(double alpha = 0.3) : alpha_(alpha) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  std::vector<signed char> mask_;
};

// Unidirectional LSTM over a (B,T,F) sequence, returning all hidden states
// (B,T,H). Gate order in the fused parameters is f, i, o, g (candidate).
class Lstm {
 public:
  Lstm(std::size_t input_dim, std::size_t hidden_dim);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dh_all);
  void init(Rng& rng);

  std::size_t hidden_dim() const { return hidden_; }

  Parameter w_in;   // {4H, F}
  Parameter w_rec;  // {4H, H}
  Parameter bias;   // {4H}

 private:
  std::size_t input_, hidden_;
  Tensor x_;                  // cached input
  std::vector<Tensor> gates_;  // per step {B, 4H} post-activation (f,i,o,g)
  std::vector<Tensor> cells_;  // per step {B, H}
  std::vector<Tensor> hidden_states_;  // per step {B, H}
};

// Scalar-score softmax attention over time: score_t = w . h_t,
// alpha = softmax_t(score), context = sum_t alpha_t h_t.
class Attention {
 public:
  explicit Attention(std::size_t hidden_dim);

  Tensor forward(const Tensor& h);   // (B,T,H) -> (B,H)
  Tensor backward(const Tensor& dctx);
  void init(Rng& rng);

  const Tensor& alphas() const { return alphas_; }  // {B, T}

  Parameter w;  // {H}

 private:
  std::size_t hidden_;
  Tensor h_;
  Tensor alphas_;
};

// Fully connected layer, y = x W^T + b over a (B, in) batch.
class Dense {
 public:
  Dense(std::size_t in_dim, std::size_t out_dim);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(Rng& rng);

  Parameter w;  // {out, in}
  Parameter b;  // {out}

 private:
  std::size_t in_, out_;
  Tensor x_;
};

// Softmax over the class axis of (B, C) logits.
Tensor softmax(const Tensor& logits);

// Mean categorical cross-entropy over the batch; dlogits = (softmax - onehot)/B.
struct LossResult {
  double loss;
  Tensor dlogits;
};
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with bias correction; zeroes the gradient afterwards.
void adam_step(Parameter& p, const AdamConfig& cfg);

// Central finite differences on `values` against `analytic`, using the given
// scalar loss closure. Relative error uses max(|a|, |n|, floor) per element.
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};
GradCheckReport grad_check(const std::function<double()>& loss_fn, Tensor& values,
                           const Tensor& analytic, double step = 1e-5,
                           double denom_floor = 1e-3);

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace dfd
