#include "dfd/augment.hpp"

#include <algorithm>
#include <cmath>

#include "dfd/tensor.hpp"

namespace dfd {

AudioClip time_shift(const AudioClip& clip, double shift_ms) {
  const std::size_t n = clip.samples.size();
  const std::size_t s =
      static_cast<std::size_t>(std::llround(shift_ms / 1000.0 * clip.sample_rate));
  if (s >= n) {
    throw InvalidShiftError("time_shift: shift of " + std::to_string(s) +
                            " samples >= clip length " + std::to_string(n));
  }
  AudioClip out = clip;
  std::fill(out.samples.begin(), out.samples.begin() + static_cast<std::ptrdiff_t>(s), 0.0);
  for (std::size_t k = s; k < n; ++k) out.samples[k] = clip.samples[k - s];
  return out;
}

AudioClip apply_gain(const AudioClip& clip, double gain_db) {
  const double g = std::pow(10.0, gain_db / 20.0);
  AudioClip out = clip;
  for (double& v : out.samples) v = std::clamp(v * g, -1.0, 1.0);
  return out;
}

std::vector<AudioClip> augment_dataset(const std::vector<AudioClip>& corpus,
                                       const AugmentPlan& plan) {
  std::vector<AudioClip> out;
  out.reserve(corpus.size() * 3);
  Rng rng(plan.seed);
  for (const AudioClip& clip : corpus) {
    double gain = plan.gain_db;
    if (plan.randomize_gain) gain = rng.uniform(0.0, plan.gain_db);
    out.push_back(clip);
    out.push_back(time_shift(clip, plan.shift_ms));
    out.push_back(apply_gain(clip, gain));
  }
  return out;
}

}  // namespace dfd
