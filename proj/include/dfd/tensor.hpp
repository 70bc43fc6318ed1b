#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfd {

// Dense n-dimensional double array, row-major.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  static std::size_t count(const std::vector<std::size_t>& s);

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t ndim() const { return shape.size(); }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
};

// Trainable tensor with gradient buffer and Adam moment state.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  explicit Parameter(std::vector<std::size_t> shape)
      : value(shape), grad(shape), adam_m(shape), adam_v(std::move(shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

// xorshift64* generator (Vigna 2014): state ^= state >> 12, ^= state << 25,
// ^= state >> 27; output = state * 0x2545F4914F6CDD1D. Portable and seedable,
// so generated corpora and weight initializations are reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller.
  double gaussian();
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 step, used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace dfd
