#include <cmath>

#include "dfd/augment.hpp"
#include "dfd/tensor.hpp"
#include "doctest.h"

using namespace dfd;

namespace {

AudioClip make_clip(std::vector<double> samples, int rate = 96000,
                    Label label = Label::Normal, std::string source = "src") {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = rate;
  c.label = label;
  c.source_id = std::move(source);
  return c;
}

}  // namespace

TEST_CASE("time_shift offset at 96 kHz and 5 ms is 480 samples") {
  AudioClip c = make_clip(std::vector<double>(2000, 0.0));
  c.samples[0] = 0.5;
  AudioClip out = time_shift(c, 5.0);
  REQUIRE(out.samples.size() == 2000);
  CHECK(out.samples[479] == 0.0);
  CHECK(out.samples[480] == 0.5);
}

TEST_CASE("time_shift by zero is the identity") {
  AudioClip c = make_clip({0.1, -0.2, 0.3});
  CHECK(time_shift(c, 0.0).samples == c.samples);
}

TEST_CASE("time_shift by one sample") {
  AudioClip c = make_clip({1.0, 2.0, 3.0, 4.0}, 1000);
  AudioClip out = time_shift(c, 1.0);  // 1 ms at 1 kHz = 1 sample
  CHECK(out.samples == std::vector<double>{0.0, 1.0, 2.0, 3.0});
}

TEST_CASE("time_shift past the clip length fails") {
  AudioClip c = make_clip({0.1, 0.2}, 1000);
  CHECK_THROWS_AS(time_shift(c, 2.0), InvalidShiftError);
}

TEST_CASE("apply_gain uses the dB factor") {
  AudioClip c = make_clip({0.5});
  AudioClip out = apply_gain(c, 2.0);
  CHECK(out.samples[0] == doctest::Approx(0.5 * std::pow(10.0, 0.1)).epsilon(1e-12));
  CHECK(std::pow(10.0, 2.0 / 20.0) == doctest::Approx(1.2589254117941673).epsilon(1e-14));
}

TEST_CASE("apply_gain at 0 dB is the identity") {
  AudioClip c = make_clip({0.3, -0.7});
  CHECK(apply_gain(c, 0.0).samples == c.samples);
}

TEST_CASE("apply_gain clamps to [-1, 1]") {
  AudioClip c = make_clip({0.99, -0.99});
  AudioClip out = apply_gain(c, 6.0);
  CHECK(out.samples[0] == 1.0);
  CHECK(out.samples[1] == -1.0);
}

TEST_CASE("gains add in dB for non-clipping inputs") {
  Rng rng(11);
  AudioClip c = make_clip({});
  for (int i = 0; i < 200; ++i) c.samples.push_back(rng.uniform(-0.1, 0.1));
  AudioClip two_steps = apply_gain(apply_gain(c, 1.3), 2.4);
  AudioClip one_step = apply_gain(c, 3.7);
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    CHECK(two_steps.samples[i] == doctest::Approx(one_step.samples[i]).epsilon(1e-12));
  }
}

TEST_CASE("augment_dataset triples the corpus and keeps identity/labels") {
  std::vector<AudioClip> corpus;
  for (int i = 0; i < 5; ++i) {
    AudioClip c = make_clip(std::vector<double>(1000, 0.0), 96000,
                            static_cast<Label>(i % 3), "clip" + std::to_string(i));
    c.samples[10 + i] = 0.4;
    corpus.push_back(c);
  }

  auto out = augment_dataset(corpus, AugmentPlan{});
  REQUIRE(out.size() == 15);
  for (int i = 0; i < 5; ++i) {
    // original is bit-identical, and the whole triple shares one source_id
    CHECK(out[3 * i].samples == corpus[i].samples);
    for (int k = 0; k < 3; ++k) {
      CHECK(out[3 * i + k].source_id == corpus[i].source_id);
      CHECK(out[3 * i + k].label == corpus[i].label);
      CHECK(out[3 * i + k].samples.size() == corpus[i].samples.size());
    }
  }
}

TEST_CASE("augment_dataset propagates invalid shifts") {
  std::vector<AudioClip> corpus = {make_clip({0.1, 0.2}, 1000, Label::Broken)};
  AugmentPlan plan;
  plan.shift_ms = 10.0;
  CHECK_THROWS_AS(augment_dataset(corpus, plan), InvalidShiftError);
}
