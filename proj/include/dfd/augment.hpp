#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dfd/audio.hpp"

namespace dfd {

struct InvalidShiftError : AudioError {
  using AudioError::AudioError;
};

struct AugmentPlan {
  double shift_ms = 5.0;
  double gain_db = 2.0;
  // When set, the gain applied per clip is drawn uniformly from [0, gain_db].
  bool randomize_gain = false;
  std::uint64_t seed = 1;
};

// Shifts the waveform right by round(shift_ms/1000 * sample_rate) samples and
// zero-pads the head, keeping the original length.
AudioClip time_shift(const AudioClip& clip, double shift_ms);

// Scales samples by 10^(gain_db/20), clamping to [-1, 1].
AudioClip apply_gain(const AudioClip& clip, double gain_db);

// Expands each clip into three: original, time-shifted, gained. Labels and
// source_ids are inherited; output order is orig/shift/gain per input clip.
std::vector<AudioClip> augment_dataset(const std::vector<AudioClip>& corpus,
                                       const AugmentPlan& plan);

}  // namespace dfd
