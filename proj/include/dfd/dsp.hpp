#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/audio.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

struct DspError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResolutionError : DspError {
  using DspError::DspError;
};

struct StftParams {
  std::size_t win_length = 2048;
  std::size_t hop_length = 1024;
  std::size_t n_fft = 2048;  // power of two, >= win_length
};

struct MelParams {
  std::size_t n_mels = 96;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
};

// Fixed-shape network input, time_frames x n_mels.
struct LogMelSpectrogram {
  Tensor data;  // shape {time_frames, n_mels}
  std::size_t frames() const { return data.dim(0); }
  std::size_t mels() const { return data.dim(1); }
};

struct FrontendConfig {
  std::size_t target_frames = 100;
  MelParams mel;
  std::size_t n_fft = 2048;
  // Literal mode uses fixed 100 ms windows / 50 ms hop; the default mode picks
  // win = min(n_fft, clip length) and a hop that lands near target_frames.
  bool literal_windows = false;
  double literal_win_ms = 100.0;
  double literal_hop_ms = 50.0;
};

// w[k] = 0.54 - 0.46 cos(2 pi k / (n - 1)).
std::vector<double> hamming_window(std::size_t n);

struct StftResult {
  std::size_t frames = 0;
  std::size_t bins = 0;  // n_fft/2 + 1
  std::vector<std::complex<double>> data;  // row-major frames x bins

  std::complex<double>& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
  std::complex<double> at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

// Hamming-windowed, hopped DFT. Clips shorter than win_length are zero-padded
// to win_length; frame count is 1 + floor((len - win) / hop).
StftResult stft(const AudioClip& clip, const StftParams& p);

// HTK-style triangular filters, mel(f) = 2595 log10(1 + f/700), peaks equally
// spaced on the mel axis, no area normalization. Shape {n_mels, n_fft/2 + 1}.
Tensor mel_filterbank(const MelParams& mp, std::size_t n_fft, int sample_rate);

StftParams resolve_stft_params(const FrontendConfig& cfg, std::size_t clip_len,
                               int sample_rate);

// |STFT|^2 -> mel projection -> ln(S + 1e-10) -> time axis fitted to exactly
// target_frames (repeat last frame / truncate tail) -> per-spectrogram
// standardization (zero-variance inputs map to all zeros).
LogMelSpectrogram log_mel(const AudioClip& clip, const StftParams& p,
                          const MelParams& mp, std::size_t target_frames);
LogMelSpectrogram log_mel(const AudioClip& clip, const FrontendConfig& cfg);

// Spectrogram file: magic "LMSP", u32 version = 1, u32 rows, u32 cols, then
// row-major float64 little-endian payload.
void write_lmsp(const LogMelSpectrogram& s, const std::string& path);
LogMelSpectrogram read_lmsp(const std::string& path);

}  // namespace dfd
