#include <doctest.h>

#include <set>

#include "analogy/video.hpp"
#include "support/synthetic_bundle.hpp"

using namespace analogy;
using analogy::testing::pattern_image;
using analogy::testing::small_config;
using analogy::testing::synthetic_bundle;

namespace {

std::set<std::array<double, 3>> colors_of(const Image& img) {
  std::set<std::array<double, 3>> out;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.insert({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)});
  return out;
}

}  // namespace

TEST_CASE("translating the same frame twice is pixel-identical") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 1);
  const Image frame = pattern_image({24, 20});
  for (bool frozen : {true, false}) {
    const VideoJob job = make_video_job(m, frame, 4, std::nullopt, frozen);
    CHECK(job.norms.has_value() == frozen);
    const Image a = translate_frame(m, frame, job);
    const Image b = translate_frame(m, frame, job);
    CHECK(a.size() == m.sched.finest());
    CHECK(max_abs_diff(a, b) == 0.0);
  }
  // The job, not the call, owns the noise.
  CHECK(max_abs_diff(make_video_job(m, frame, 4).z_N, make_video_job(m, frame, 4).z_N) == 0.0);
  CHECK(max_abs_diff(make_video_job(m, frame, 4).z_N, make_video_job(m, frame, 5).z_N) > 0.0);
}

TEST_CASE("frozen statistics make frame edits local") {
  TrainConfig cfg = small_config(40, 28);
  const ModelBundle m = synthetic_bundle({40, 40}, cfg, 2);
  REQUIRE(m.N() == 1);
  const Image frame = pattern_image({40, 40});
  Image edited = frame;
  edited.at(0, 0, 0) = -frame.at(0, 0, 0) + 0.5;
  const VideoJob job = make_video_job(m, frame, 3);
  const Image a = translate_frame(m, frame, job);
  const Image b = translate_frame(m, edited, job);
  CHECK(max_abs_diff(a, b) > 0.0);
  // Far corner: outside every receptive field on the way.
  for (int c = 0; c < 3; ++c)
    for (int y = 30; y < 40; ++y)
      for (int x = 30; x < 40; ++x) CHECK(a.at(c, y, x) == b.at(c, y, x));
}

TEST_CASE("video jobs reject unsupported models") {
  TrainConfig cfg = small_config();
  cfg.ablations.condition_on_prev_translation = true;
  const Image frame = pattern_image({24, 20});
  CHECK_THROWS_AS(make_video_job(synthetic_bundle({24, 20}, cfg, 3), frame, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_video_job(synthetic_bundle({24, 20}, small_config(), 3, true), frame, 1),
                  std::invalid_argument);
  ModelBundle partial = synthetic_bundle({24, 20}, small_config(), 3);
  partial.trained_up_to = 0;
  CHECK_THROWS_AS(make_video_job(partial, frame, 1), std::invalid_argument);
}

TEST_CASE("quantize keeps at most the palette size of colors") {
  const Image img = pattern_image({16, 16});
  for (int k : {1, 2, 5, 8}) {
    CAPTURE(k);
    const Image q = quantize(img, k, 3);
    CHECK(q.size() == img.size());
    CHECK(static_cast<int>(colors_of(q).size()) <= k);
    CHECK(max_abs_diff(q, quantize(img, k, 3)) == 0.0);
  }
  CHECK_THROWS_AS(quantize(img, 0), std::invalid_argument);
}

TEST_CASE("quantize is the identity when the image already fits the palette") {
  Image img({6, 5}, 0.0);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 5; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = (x + y) % 3 == 0 ? 0.5 : -0.25 * c;
  CHECK(max_abs_diff(quantize(img, 2), img) == 0.0);
  CHECK(max_abs_diff(quantize(img, 7), img) == 0.0);
}

TEST_CASE("quantize recovers well separated clusters") {
  Rng rng(4);
  Image img({10, 10});
  const std::array<std::array<double, 3>, 3> centers{{{-0.8, 0.1, 0.6}, {0.7, -0.5, 0.0},
                                                      {0.0, 0.8, -0.7}}};
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      const auto& ctr = centers[(y * 10 + x) % 3];
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = ctr[c] + 0.01 * rng.normal();
    }
  const Image q = quantize(img, 3, 1);
  CHECK(colors_of(q).size() == 3);
  CHECK(max_abs_diff(q, img) < 0.05);
}
