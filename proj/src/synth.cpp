#include "dfd/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dfd/tensor.hpp"

namespace dfd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPeakTarget = 0.75;  // 2 dB of headroom before clipping

std::uint64_t clip_seed(Label label, std::size_t index, std::uint64_t seed) {
  return mix_seed(seed, static_cast<std::uint64_t>(label) * 1000003ull + index);
}

void synth_broken(std::vector<double>& x, int sr, Rng& rng) {
  const std::size_t n = x.size();
  // decaying click train
  const double click_period = rng.uniform(0.002, 0.004) * sr;
  const double ring_freq = rng.uniform(6000.0, 11000.0);
  double next_click = rng.uniform(0.0, click_period);
  std::vector<double> clicks(n, 0.0);
  while (next_click < static_cast<double>(n)) {
    const std::size_t start = static_cast<std::size_t>(next_click);
    const double amp = rng.uniform(0.5, 1.0);
    for (std::size_t k = start; k < std::min(n, start + static_cast<std::size_t>(0.001 * sr));
         ++k) {
      const double dt = static_cast<double>(k - start) / sr;
      clicks[k] += amp * std::exp(-dt * 6000.0) *
                   std::sin(2.0 * kPi * ring_freq * dt);
    }
    next_click += click_period * rng.uniform(0.8, 1.2);
  }
  // rising chirp
  const double f0 = rng.uniform(3000.0, 5000.0);
  const double f1 = rng.uniform(12000.0, 18000.0);
  const double dur = static_cast<double>(n) / sr;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sr;
    const double phase = 2.0 * kPi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t);
    x[k] = clicks[k] + 0.45 * std::sin(phase) + 0.05 * rng.gaussian();
  }
}

double normal_f0(Rng& rng) { return rng.uniform(900.0, 1400.0); }

void synth_normal(std::vector<double>& x, int sr, Rng& rng) {
  const std::size_t n = x.size();
  const double f0 = normal_f0(rng);
  double phases[6];
  for (double& p : phases) p = rng.uniform(0.0, 2.0 * kPi);
  const double am_freq = rng.uniform(20.0, 60.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sr;
    double s = 0.0;
    for (int h = 1; h <= 6; ++h) {
      s += (0.8 / h) * std::sin(2.0 * kPi * f0 * h * t + phases[h - 1]);
    }
    const double am = 1.0 + 0.15 * std::sin(2.0 * kPi * am_freq * t);
    x[k] = am * s + 0.02 * rng.gaussian();
  }
}

void synth_other(std::vector<double>& x, int sr, Rng& rng) {
  const std::size_t n = x.size();
  const double a = rng.uniform(0.55, 0.85);  // one-pole lowpass coefficient
  const double hum_freq = rng.uniform(100.0, 300.0);
  double y = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sr;
    y = a * y + (1.0 - a) * rng.gaussian();
    x[k] = 3.0 * y + 0.1 * std::sin(2.0 * kPi * hum_freq * t);
  }
}

}  // namespace

AudioClip generate_clip(Label label, std::size_t index, const SynthSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(
      std::llround(spec.duration_ms / 1000.0 * spec.sample_rate));
  Rng rng(clip_seed(label, index, spec.seed));

  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.label = label;
  clip.source_id = std::string(label_name(label)) + "_" + std::to_string(index);
  clip.samples.assign(n, 0.0);

  switch (label) {
    case Label::Broken: synth_broken(clip.samples, spec.sample_rate, rng); break;
    case Label::Normal: synth_normal(clip.samples, spec.sample_rate, rng); break;
    case Label::Other: synth_other(clip.samples, spec.sample_rate, rng); break;
  }

  double peak = 0.0;
  for (double v : clip.samples) peak = std::max(peak, std::abs(v));
  const double target = kPeakTarget * rng.uniform(0.85, 1.0);
  if (peak > 0.0) {
    const double scale = target / peak;
    for (double& v : clip.samples) v *= scale;
  }
  return clip;
}

std::vector<AudioClip> generate_corpus(const SynthSpec& spec) {
  std::vector<AudioClip> out;
  out.reserve(3 * spec.n_per_class);
  for (Label label : {Label::Broken, Label::Normal, Label::Other}) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      out.push_back(generate_clip(label, i, spec));
    }
  }
  return out;
}

}  // namespace dfd
