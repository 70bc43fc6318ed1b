#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dfd/audio.hpp"
#include "dfd/tensor.hpp"
#include "doctest.h"

using namespace dfd;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Hand-rolled PCM16 WAV writer, independent of write_wav.
void write_raw_pcm16(const std::string& path, const std::vector<std::int16_t>& pcm,
                     std::uint32_t rate, std::uint16_t channels) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
  f.write("RIFF", 4);
  u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(channels);
  u32(rate);
  u32(rate * 2 * channels);
  u16(static_cast<std::uint16_t>(2 * channels));
  u16(16);
  f.write("data", 4);
  u32(data_bytes);
  for (std::int16_t v : pcm) f.write(reinterpret_cast<char*>(&v), 2);
}

}  // namespace

TEST_CASE("read_wav scales PCM16 by 1/32768") {
  const std::string path = tmp_path("dfd_pcm16.wav");
  write_raw_pcm16(path, {16384, -32768}, 96000, 1);
  AudioClip c = read_wav(path);
  REQUIRE(c.samples.size() == 2);
  CHECK(c.samples[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.samples[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.sample_rate == 96000);
}

TEST_CASE("2000 frames at 96 kHz is a 20.83 ms clip") {
  const std::string path = tmp_path("dfd_2000.wav");
  write_raw_pcm16(path, std::vector<std::int16_t>(2000, 100), 96000, 1);
  AudioClip c = read_wav(path);
  CHECK(c.duration_ms() == doctest::Approx(20.83).epsilon(1e-3));
}

TEST_CASE("multi-channel input is averaged to mono") {
  const std::string path = tmp_path("dfd_stereo.wav");
  write_raw_pcm16(path, {16384, 0, -16384, 16384}, 48000, 2);
  AudioClip c = read_wav(path);
  REQUIRE(c.samples.size() == 2);
  CHECK(c.samples[0] == doctest::Approx(0.25));
  CHECK(c.samples[1] == doctest::Approx(0.0));
}

TEST_CASE("write_wav clamps out-of-range samples") {
  const std::string path = tmp_path("dfd_clamp.wav");
  AudioClip c;
  c.sample_rate = 96000;
  c.samples = {1.5};
  write_wav(c, path);
  std::ifstream f(path, std::ios::binary);
  f.seekg(44);
  std::int16_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 2);
  CHECK(v == 32767);
}

TEST_CASE("write_wav stores zero as zero") {
  const std::string path = tmp_path("dfd_zero.wav");
  AudioClip c;
  c.sample_rate = 96000;
  c.samples = {0.0};
  write_wav(c, path);
  std::ifstream f(path, std::ios::binary);
  f.seekg(44);
  std::int16_t v = 99;
  f.read(reinterpret_cast<char*>(&v), 2);
  CHECK(v == 0);
}

TEST_CASE("roundtrip is within one quantization step") {
  const std::string path = tmp_path("dfd_roundtrip.wav");
  Rng rng(7);
  AudioClip c;
  c.sample_rate = 96000;
  for (int i = 0; i < 500; ++i) c.samples.push_back(rng.uniform(-1.0, 1.0));
  write_wav(c, path);
  AudioClip back = read_wav(path);
  REQUIRE(back.samples.size() == c.samples.size());
  CHECK(back.sample_rate == c.sample_rate);
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - c.samples[i]) <= 1.0 / 32768.0);
  }
}

TEST_CASE("error paths") {
  SUBCASE("malformed header") {
    const std::string path = tmp_path("dfd_bad.wav");
    std::ofstream(path) << "this is not audio at all";
    CHECK_THROWS_AS(read_wav(path), WavFormatError);
  }
  SUBCASE("unsupported encoding") {
    const std::string path = tmp_path("dfd_ulaw.wav");
    std::ofstream f(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
    f.write("RIFF", 4);
    u32(40);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    u32(16);
    u16(7);  // mu-law
    u16(1);
    u32(8000);
    u32(8000);
    u16(1);
    u16(8);
    f.write("data", 4);
    u32(4);
    u32(0);
    f.close();
    CHECK_THROWS_AS(read_wav(path), UnsupportedCodecError);
  }
  SUBCASE("zero frames") {
    const std::string path = tmp_path("dfd_empty.wav");
    write_raw_pcm16(path, {}, 96000, 1);
    CHECK_THROWS_AS(read_wav(path), EmptyAudioError);
  }
}

TEST_CASE("pad_or_trim") {
  AudioClip c;
  c.sample_rate = 96000;
  for (int i = 0; i < 2000; ++i) c.samples.push_back(0.001 * i);

  SUBCASE("identity at same length") {
    AudioClip out = pad_or_trim(c, 2000);
    CHECK(out.samples == c.samples);
  }
  SUBCASE("zero padding at the end") {
    AudioClip out = pad_or_trim(c, 4000);
    REQUIRE(out.samples.size() == 4000);
    for (int i = 0; i < 2000; ++i) CHECK(out.samples[i] == c.samples[i]);
    for (int i = 2000; i < 4000; ++i) CHECK(out.samples[i] == 0.0);
  }
  SUBCASE("truncation at the end") {
    AudioClip out = pad_or_trim(c, 1000);
    REQUIRE(out.samples.size() == 1000);
    for (int i = 0; i < 1000; ++i) CHECK(out.samples[i] == c.samples[i]);
  }
  SUBCASE("idempotent and exact length over random targets") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t target = 1 + rng.below(5000);
      AudioClip once = pad_or_trim(c, target);
      CHECK(once.samples.size() == target);
      CHECK(pad_or_trim(once, target).samples == once.samples);
    }
  }
}
