#include "dfd/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dfd {

const char* label_name(Label l) {
  switch (l) {
    case Label::Broken: return "Broken";
    case Label::Normal: return "Normal";
    case Label::Other: return "Other";
  }
  return "?";
}

std::optional<Label> label_from_name(std::string_view name) {
  if (name == "Broken") return Label::Broken;
  if (name == "Normal") return Label::Normal;
  if (name == "Other") return Label::Other;
  return std::nullopt;
}

namespace {

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 24) & 0xFF);
}

void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());

  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    std::uint32_t chunk_len = read_u32le(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > buf.size()) throw WavFormatError("truncated chunk in " + path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw WavFormatError("fmt chunk too short in " + path);
      const unsigned char* f = buf.data() + body;
      audio_format = read_u16le(f);
      channels = read_u16le(f + 2);
      sample_rate = read_u32le(f + 4);
      bits = read_u16le(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0) throw WavFormatError("missing fmt or data chunk in " + path);
  if (channels == 0 || sample_rate == 0) throw WavFormatError("bad fmt chunk in " + path);

  const bool pcm16 = audio_format == 1 && bits == 16;
  const bool float32 = audio_format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedCodecError("unsupported encoding (format=" + std::to_string(audio_format) +
                                " bits=" + std::to_string(bits) + ") in " + path);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_len / (bytes_per_sample * channels);
  if (frames == 0) throw EmptyAudioError("zero audio frames in " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(frames);
  const unsigned char* d = buf.data() + data_off;
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = d + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(read_u16le(s));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += static_cast<double>(v);
      }
    }
    double m = acc / channels;
    clip.samples[i] = std::clamp(m, -1.0, 1.0);
  }
  return clip;
}

void write_wav(const AudioClip& clip, const std::string& path) {
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32le(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32le(out, 16);
  put_u16le(out, 1);  // PCM
  put_u16le(out, 1);  // mono
  put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16le(out, 2);   // block align
  put_u16le(out, 16);  // bits
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32le(out, data_bytes);
  for (double s : clip.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    long q = std::lround(c * 32768.0);
    q = std::clamp(q, -32768l, 32767l);
    put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw AudioError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw AudioError("short write to " + path);
}

AudioClip pad_or_trim(const AudioClip& clip, std::size_t target_len) {
  if (target_len < 1) throw AudioError("pad_or_trim: target_len must be >= 1");
  AudioClip out = clip;
  out.samples.resize(target_len, 0.0);
  return out;
}

}  // namespace dfd
