#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dfd {

enum class Label { Broken = 0, Normal = 1, Other = 2 };
inline constexpr int kNumClasses = 3;

const char* label_name(Label l);
std::optional<Label> label_from_name(std::string_view name);

// Mono clip with samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::optional<Label> label;
  std::string source_id;

  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate;
  }
};

struct AudioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WavFormatError : AudioError {
  using AudioError::AudioError;
};
struct UnsupportedCodecError : AudioError {
  using AudioError::AudioError;
};
struct EmptyAudioError : AudioError {
  using AudioError::AudioError;
};

// Accepts RIFF/WAVE with PCM16 or float32 samples; multi-channel input is
// averaged down to mono. Integer samples are scaled by 1/32768.
AudioClip read_wav(const std::string& path);

// Emits mono PCM16 little-endian; samples are clamped to [-1, 1] first.
void write_wav(const AudioClip& clip, const std::string& path);

// Zero-pads or truncates at the end to exactly target_len samples.
AudioClip pad_or_trim(const AudioClip& clip, std::size_t target_len);

}  // namespace dfd
