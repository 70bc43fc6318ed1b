#pragma once

#include <cstdint>
#include <vector>

#include "dfd/audio.hpp"

namespace dfd {

// Deterministic three-class short-clip corpus generator. Class recipes:
//   Broken: decaying click train plus a rising chirp
//   Normal: stable harmonic stack at a drill-like fundamental
//   Other : filtered broadband noise
struct SynthSpec {
  std::size_t n_per_class = 67;
  int sample_rate = 96000;
  double duration_ms = 41.67;
  std::uint64_t seed = 1;
};

// Pure function of (label, index, spec.seed); peak amplitude <= 0.75 so a
// 2 dB gain never clips.
AudioClip generate_clip(Label label, std::size_t index, const SynthSpec& spec);

// 3 * n_per_class labeled clips with unique source_ids ("<class>_<index>").
std::vector<AudioClip> generate_corpus(const SynthSpec& spec);

}  // namespace dfd
