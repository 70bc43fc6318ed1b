#include "dfd/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dfd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

std::vector<double> hamming_window(std::size_t n) {
  if (n < 2) throw DspError("hamming_window: length must be >= 2");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(k) /
                                  static_cast<double>(n - 1));
  }
  return w;
}

StftResult stft(const AudioClip& clip, const StftParams& p) {
  if (p.hop_length < 1) throw DspError("stft: hop_length must be >= 1");
  if (p.n_fft < p.win_length) throw DspError("stft: n_fft < win_length");
  if (!is_pow2(p.n_fft)) throw DspError("stft: n_fft must be a power of two");
  if (clip.samples.empty()) throw EmptyAudioError("stft: empty clip");

  std::vector<double> x = clip.samples;
  if (x.size() < p.win_length) x.resize(p.win_length, 0.0);

  const std::size_t frames = 1 + (x.size() - p.win_length) / p.hop_length;
  const std::size_t bins = p.n_fft / 2 + 1;
  const std::vector<double> w = hamming_window(p.win_length);

  StftResult out;
  out.frames = frames;
  out.bins = bins;
  out.data.resize(frames * bins);

  std::vector<std::complex<double>> buf(p.n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* frame = x.data() + t * p.hop_length;
    for (std::size_t m = 0; m < p.win_length; ++m) buf[m] = frame[m] * w[m];
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(p.win_length), buf.end(),
              std::complex<double>(0.0, 0.0));
    fft(buf);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(bins),
              out.data.begin() + static_cast<std::ptrdiff_t>(t * bins));
  }
  return out;
}

Tensor mel_filterbank(const MelParams& mp, std::size_t n_fft, int sample_rate) {
  const double nyquist = sample_rate / 2.0;
  const double f_max = mp.f_max > 0.0 ? mp.f_max : nyquist;
  if (mp.n_mels < 1) throw DspError("mel_filterbank: n_mels must be >= 1");
  if (!(mp.f_min >= 0.0 && mp.f_min < f_max && f_max <= nyquist)) {
    throw DspError("mel_filterbank: need 0 <= f_min < f_max <= nyquist");
  }

  const std::size_t bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(mp.f_min);
  const double mel_hi = hz_to_mel(f_max);

  // n_mels + 2 edge frequencies, equally spaced on the mel axis.
  std::vector<double> edges(mp.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(mp.n_mels + 1));
  }

  Tensor fb({mp.n_mels, bins});
  for (std::size_t m = 0; m < mp.n_mels; ++m) {
    const double fl = edges[m], fc = edges[m + 1], fr = edges[m + 2];
    bool nonzero = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double v = 0.0;
      if (f > fl && f < fc) {
        v = (f - fl) / (fc - fl);
      } else if (f >= fc && f < fr) {
        v = (fr - f) / (fr - fc);
      }
      if (v > 0.0) nonzero = true;
      fb.at2(m, k) = v;
    }
    if (!nonzero) {
      throw ResolutionError("mel_filterbank: filter " + std::to_string(m) +
                            " covers no FFT bins; reduce n_mels or raise n_fft");
    }
  }
  return fb;
}

StftParams resolve_stft_params(const FrontendConfig& cfg, std::size_t clip_len,
                               int sample_rate) {
  StftParams p;
  p.n_fft = cfg.n_fft;
  if (cfg.literal_windows) {
    p.win_length = static_cast<std::size_t>(
        std::llround(cfg.literal_win_ms / 1000.0 * sample_rate));
    p.hop_length = static_cast<std::size_t>(
        std::llround(cfg.literal_hop_ms / 1000.0 * sample_rate));
    // Window may exceed the FFT size at high sample rates; grow n_fft to the
    // next power of two so the transform stays valid.
    while (p.n_fft < p.win_length) p.n_fft *= 2;
  } else {
    p.win_length = std::min(cfg.n_fft, std::max<std::size_t>(clip_len, 2));
    const std::size_t len = std::max(clip_len, p.win_length);
    const std::size_t span = len - p.win_length;
    const std::size_t denom = cfg.target_frames > 1 ? cfg.target_frames - 1 : 1;
    p.hop_length = std::max<std::size_t>(1, (span + denom - 1) / denom);
  }
  return p;
}

LogMelSpectrogram log_mel(const AudioClip& clip, const StftParams& p,
                          const MelParams& mp, std::size_t target_frames) {
  const StftResult spec = stft(clip, p);
  const Tensor fb = mel_filterbank(mp, p.n_fft, clip.sample_rate);
  const std::size_t n_mels = fb.dim(0);

  // Power spectrogram projected on the filterbank, then log with floor.
  Tensor full({spec.frames, n_mels});
  std::vector<double> power(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) power[k] = std::norm(spec.at(t, k));
    for (std::size_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      const double* row = fb.ptr() + m * spec.bins;
      for (std::size_t k = 0; k < spec.bins; ++k) acc += row[k] * power[k];
      full.at2(t, m) = std::log(acc + kLogFloor);
    }
  }

  // Fit the time axis: truncate the tail or repeat the last frame.
  LogMelSpectrogram out;
  out.data = Tensor({target_frames, n_mels});
  for (std::size_t t = 0; t < target_frames; ++t) {
    const std::size_t src = std::min(t, spec.frames - 1);
    std::copy_n(full.ptr() + src * n_mels, n_mels, out.data.ptr() + t * n_mels);
  }

  // Per-spectrogram standardization.
  const std::size_t n = out.data.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += out.data[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = out.data[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  if (var < 1e-24) {
    out.data.fill(0.0);
  } else {
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = (out.data[i] - mean) * inv;
  }
  return out;
}

LogMelSpectrogram log_mel(const AudioClip& clip, const FrontendConfig& cfg) {
  const StftParams p = resolve_stft_params(cfg, clip.samples.size(), clip.sample_rate);
  return log_mel(clip, p, cfg.mel, cfg.target_frames);
}

namespace {
constexpr char kLmspMagic[4] = {'L', 'M', 'S', 'P'};
constexpr std::uint32_t kLmspVersion = 1;
}  // namespace

void write_lmsp(const LogMelSpectrogram& s, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DspError("cannot write " + path);
  const std::uint32_t ver = kLmspVersion;
  const std::uint32_t rows = static_cast<std::uint32_t>(s.frames());
  const std::uint32_t cols = static_cast<std::uint32_t>(s.mels());
  f.write(kLmspMagic, 4);
  f.write(reinterpret_cast<const char*>(&ver), 4);
  f.write(reinterpret_cast<const char*>(&rows), 4);
  f.write(reinterpret_cast<const char*>(&cols), 4);
  f.write(reinterpret_cast<const char*>(s.data.ptr()),
          static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  if (!f) throw DspError("short write to " + path);
}

LogMelSpectrogram read_lmsp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DspError("cannot open " + path);
  char magic[4];
  std::uint32_t ver = 0, rows = 0, cols = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&ver), 4);
  f.read(reinterpret_cast<char*>(&rows), 4);
  f.read(reinterpret_cast<char*>(&cols), 4);
  if (!f || std::memcmp(magic, kLmspMagic, 4) != 0) {
    throw DspError("bad spectrogram magic in " + path);
  }
  if (ver != kLmspVersion) throw DspError("unsupported spectrogram version in " + path);
  LogMelSpectrogram s;
  s.data = Tensor({rows, cols});
  f.read(reinterpret_cast<char*>(s.data.ptr()),
         static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  if (!f) throw DspError("truncated spectrogram payload in " + path);
  return s;
}

}  // namespace dfd
