#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "dfd/dsp.hpp"
#include "dfd/tensor.hpp"
#include "doctest.h"

using namespace dfd;

namespace {

constexpr double kPi = 3.14159265358979323846;

AudioClip make_clip(std::vector<double> samples, int rate = 96000) {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = rate;
  return c;
}

// Brute-force O(n^2) DFT of a windowed frame, the oracle for the FFT path.
std::vector<std::complex<double>> naive_windowed_dft(const std::vector<double>& frame,
                                                     std::size_t n_fft) {
  const std::vector<double> w = hamming_window(frame.size());
  std::vector<std::complex<double>> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t m = 0; m < frame.size(); ++m) {
      const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(m) /
                         static_cast<double>(n_fft);
      acc += frame[m] * w[m] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("hamming window endpoints, peak and symmetry") {
  SUBCASE("w[0] = 0.08") {
    auto w = hamming_window(64);
    CHECK(w[0] == doctest::Approx(0.08).epsilon(1e-12));
  }
  SUBCASE("center of an odd window is 1") {
    auto w = hamming_window(65);
    CHECK(w[32] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("symmetric") {
    auto w = hamming_window(101);
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(w[k] == doctest::Approx(w[w.size() - 1 - k]).epsilon(1e-12));
    }
  }
  SUBCASE("too short") { CHECK_THROWS_AS(hamming_window(1), DspError); }
}

TEST_CASE("stft matches the naive DFT oracle on random frames") {
  Rng rng(17);
  StftParams p{2048, 2048, 2048};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> frame(2048);
    for (double& v : frame) v = rng.uniform(-1.0, 1.0);
    AudioClip c = make_clip(frame);
    StftResult s = stft(c, p);
    REQUIRE(s.frames == 1);
    auto oracle = naive_windowed_dft(frame, 2048);
    for (std::size_t k = 0; k < s.bins; ++k) {
      CHECK(std::abs(std::abs(s.at(0, k)) - std::abs(oracle[k])) < 1e-9);
    }
  }
}

TEST_CASE("stft of an all-zero clip is all zeros") {
  AudioClip c = make_clip(std::vector<double>(4096, 0.0));
  StftResult s = stft(c, {2048, 1024, 2048});
  for (const auto& v : s.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("pure bin-centered sine peaks at its bin in every frame") {
  const std::size_t k0 = 100;
  const double freq = static_cast<double>(k0) * 96000.0 / 2048.0;
  std::vector<double> x(6144);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * kPi * freq * static_cast<double>(i) / 96000.0);
  }
  StftResult s = stft(make_clip(x), {2048, 1024, 2048});
  for (std::size_t t = 0; t < s.frames; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.bins; ++k) {
      if (std::abs(s.at(t, k)) > std::abs(s.at(t, best))) best = k;
    }
    CHECK(best == k0);
  }
}

TEST_CASE("stft is linear in the input") {
  Rng rng(23);
  std::vector<double> x(4000);
  for (double& v : x) v = rng.uniform(-0.5, 0.5);
  AudioClip c = make_clip(x);
  AudioClip scaled = c;
  for (double& v : scaled.samples) v *= 3.25;

  StftParams p{2048, 512, 2048};
  StftResult a = stft(c, p);
  StftResult b = stft(scaled, p);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK(std::abs(b.data[i] - 3.25 * a.data[i]) <= 1e-12 * (1.0 + std::abs(b.data[i])));
  }
}

TEST_CASE("frame spectrum satisfies Parseval's identity") {
  Rng rng(29);
  std::vector<double> x(2048);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  StftResult s = stft(make_clip(x), {2048, 2048, 2048});

  const auto w = hamming_window(2048);
  double time_energy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    time_energy += x[i] * w[i] * x[i] * w[i];
  }
  // reconstruct the full-spectrum energy from the half spectrum of a real frame
  double spec_energy = std::norm(s.at(0, 0)) + std::norm(s.at(0, s.bins - 1));
  for (std::size_t k = 1; k + 1 < s.bins; ++k) spec_energy += 2.0 * std::norm(s.at(0, k));
  CHECK(spec_energy == doctest::Approx(time_energy * 2048.0).epsilon(1e-6));
}

TEST_CASE("mel scale formula values") {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  CHECK(mel(0.0) == 0.0);
  CHECK(mel(1000.0) == doctest::Approx(999.9855371396244).epsilon(1e-12));
}

TEST_CASE("mel filterbank rows are unimodal with positive sums") {
  Tensor fb = mel_filterbank(MelParams{}, 2048, 96000);
  REQUIRE(fb.dim(0) == 96);
  REQUIRE(fb.dim(1) == 1025);
  for (std::size_t m = 0; m < 96; ++m) {
    double sum = 0.0;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < 1025; ++k) {
      sum += fb.at2(m, k);
      CHECK(fb.at2(m, k) >= 0.0);
      if (fb.at2(m, k) > fb.at2(m, peak)) peak = k;
    }
    CHECK(sum > 0.0);
    for (std::size_t k = 1; k <= peak; ++k) CHECK(fb.at2(m, k) >= fb.at2(m, k - 1));
    for (std::size_t k = peak + 1; k < 1025; ++k) CHECK(fb.at2(m, k) <= fb.at2(m, k - 1));
  }
}

TEST_CASE("filterbank applied to an all-ones spectrum is strictly positive") {
  Tensor fb = mel_filterbank(MelParams{}, 2048, 96000);
  for (std::size_t m = 0; m < fb.dim(0); ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < fb.dim(1); ++k) acc += fb.at2(m, k);
    CHECK(acc > 0.0);
  }
}

TEST_CASE("too many mel filters for the FFT resolution fails") {
  MelParams mp;
  mp.n_mels = 2000;
  CHECK_THROWS_AS(mel_filterbank(mp, 256, 96000), ResolutionError);
}

TEST_CASE("log_mel output shape is exactly target_frames x n_mels") {
  Rng rng(31);
  std::vector<double> x(4000);
  for (double& v : x) v = rng.uniform(-0.5, 0.5);
  LogMelSpectrogram s = log_mel(make_clip(x), FrontendConfig{});
  CHECK(s.frames() == 100);
  CHECK(s.mels() == 96);
}

TEST_CASE("log_mel of an all-zero clip is all zeros") {
  LogMelSpectrogram s = log_mel(make_clip(std::vector<double>(4000, 0.0)), FrontendConfig{});
  for (double v : s.data.data) CHECK(v == 0.0);
}

TEST_CASE("standardization removes a constant gain offset") {
  // a 2 dB louder copy produces the same standardized spectrogram as long as
  // the tone stays far above the log floor
  std::vector<double> x(4000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.3 * std::sin(2.0 * kPi * 2000.0 * static_cast<double>(i) / 96000.0) +
           0.05 * std::sin(2.0 * kPi * 7000.0 * static_cast<double>(i) / 96000.0);
  }
  AudioClip c = make_clip(x);
  AudioClip louder = c;
  const double g = std::pow(10.0, 0.1);
  for (double& v : louder.samples) v *= g;

  LogMelSpectrogram a = log_mel(c, FrontendConfig{});
  LogMelSpectrogram b = log_mel(louder, FrontendConfig{});
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK(std::abs(a.data[i] - b.data[i]) < 1e-6);
  }
}

TEST_CASE("log_mel stays finite over random and extreme clips") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(500 + rng.below(6000));
    const double amp = trial == 0 ? 0.0 : (trial == 1 ? 1.0 : rng.uniform(0.0, 1.0));
    for (double& v : x) v = amp * rng.uniform(-1.0, 1.0);
    LogMelSpectrogram s = log_mel(make_clip(x), FrontendConfig{});
    CHECK(s.data.all_finite());
  }
}

TEST_CASE("paper-literal windows still produce the target shape") {
  std::vector<double> x(4000, 0.1);
  FrontendConfig cfg;
  cfg.literal_windows = true;
  LogMelSpectrogram s = log_mel(make_clip(x), cfg);
  CHECK(s.frames() == 100);
  CHECK(s.mels() == 96);
}

TEST_CASE("spectrogram file roundtrip and error paths") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dfd_spec.lmsp").string();
  Rng rng(41);
  LogMelSpectrogram s;
  s.data = Tensor({7, 5});
  for (double& v : s.data.data) v = rng.gaussian();

  write_lmsp(s, path);
  LogMelSpectrogram back = read_lmsp(path);
  REQUIRE(back.data.shape == s.data.shape);
  CHECK(back.data.data == s.data.data);  // float64 payload roundtrips exactly

  SUBCASE("wrong magic") {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << "NOPE1234567890123456";
    CHECK_THROWS_AS(read_lmsp(path), DspError);
  }
  SUBCASE("truncated payload") {
    write_lmsp(s, path);
    std::filesystem::resize_file(path, 40);
    CHECK_THROWS_AS(read_lmsp(path), DspError);
  }
}
