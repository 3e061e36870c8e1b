#include <doctest.h>

#include <cmath>

#include "analogy/backend/rng.hpp"
#include "analogy/pyramid.hpp"

using namespace analogy;

namespace {

// Independent oracle: enumerate N = 1..20 and keep the largest whose coarsest
// shorter side still rounds to >= min_size.
int oracle_num_steps(int shorter_side, double r, int min_size) {
  int best = 0;
  for (int n = 1; n <= 20; ++n) {
    const double side = shorter_side * std::pow(r, n);
    if (static_cast<int>(side + 0.5) >= min_size) best = n;
  }
  return best;
}

Image random_image(Size s, std::uint64_t seed, double amplitude = 0.9) {
  Rng rng(seed);
  Image img(s);
  for (double& v : img.data()) v = amplitude * (2 * rng.uniform() - 1);
  return img;
}

// Smooth, band-limited test pattern.
Image smooth_image(Size s) {
  Image img(s);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        img.at(c, y, x) = 0.6 * std::sin(2 * M_PI * (x + 0.5) / s.width + c) *
                          std::cos(2 * M_PI * (y + 0.5) / s.height);
  return img;
}

}  // namespace

TEST_CASE("schedule for a 220 px square source with r=0.75, min 18") {
  const auto s = build_schedule({220, 220}, 0.75, 18, 220, 1);
  CHECK(s.N == 8);
  CHECK(s.N == oracle_num_steps(220, 0.75, 18));
  CHECK(s.K == 7);
  CHECK(s.sizes.front() == Size{22, 22});
  CHECK(s.finest() == Size{220, 220});
  for (int n = 0; n < s.N; ++n) {
    CHECK(s.sizes[n].height < s.sizes[n + 1].height);
    CHECK(s.sizes[n].width < s.sizes[n + 1].width);
    CHECK(s.sizes[n].height == static_cast<int>(std::floor(220 * std::pow(0.75, 8 - n) + 0.5)));
  }
}

TEST_CASE("schedule agrees with the enumeration oracle over many sources") {
  for (int side = 30; side <= 260; side += 7) {
    for (double r : {0.6, 0.75, 0.8}) {
      CAPTURE(side);
      CAPTURE(r);
      const auto s = build_schedule({side, side + 13}, r, 18, 250, 1);
      const Size top = finest_size({side, side + 13}, 250);
      CHECK(s.N == oracle_num_steps(top.shorter(), r, 18));
      CHECK(s.sizes.front().shorter() >= 18);
      CHECK(s.finest() == top);
    }
  }
}

TEST_CASE("large sources are shrunk so their longer side equals max_size") {
  const auto s = build_schedule({300, 600}, 0.75, 18, 220, 1);
  CHECK(s.finest() == Size{110, 220});
  // Aspect ratio is preserved at every scale within rounding.
  for (const auto& sz : s.sizes) CHECK(std::abs(sz.width - 2 * sz.height) <= 1);
}

TEST_CASE("schedule errors") {
  CHECK_THROWS_AS(build_schedule({64, 64}, 1.2, 18, 220, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({64, 64}, 0.0, 18, 220, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({64, 64}, 0.75, 48, 48, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({20, 20}, 0.75, 18, 220, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({64, 64}, 0.75, 2, 220, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({64, 64}, 0.75, 18, 220, -5), std::invalid_argument);
  CHECK_NOTHROW(build_schedule({64, 64}, 0.75, 18, 220, -1));  // K = N+1
}

TEST_CASE("schedule is deterministic") {
  CHECK(build_schedule({97, 131}, 0.75, 18, 120, 2) == build_schedule({97, 131}, 0.75, 18, 120, 2));
}

TEST_CASE("identity resize is bit-identical") {
  const Image x = random_image({9, 13}, 1);
  CHECK(resize(x, x.size()) == x);
}

TEST_CASE("resizing a constant image keeps it constant") {
  Image c({7, 5}, 0.3125);
  for (Size t : {Size{3, 2}, Size{17, 23}, Size{7, 11}}) {
    const Image r = resize(c, t);
    for (double v : r.data()) CHECK(v == 0.3125);
  }
}

TEST_CASE("2x2 checkerboard upsampled to 4x4 keeps zero mean and hand-computed weights") {
  Image cb({2, 2});
  for (int c = 0; c < 3; ++c) {
    cb.at(c, 0, 0) = -1;
    cb.at(c, 0, 1) = 1;
    cb.at(c, 1, 0) = 1;
    cb.at(c, 1, 1) = -1;
  }
  const Image up = resize(cb, {4, 4});
  // Half-pixel taps for 2 -> 4: output rows/cols map to source positions
  // {-0.25 -> 0, 0.25, 0.75, 1.25 -> 1}, i.e. weights on (v0, v1):
  const double w1[4] = {0.0, 0.25, 0.75, 1.0};
  double total = 0;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double top = -1 + 2 * w1[x];  // row 0: -1 -> 1
      const double bottom = 1 - 2 * w1[x];
      const double expected = top + w1[y] * (bottom - top);
      CHECK(up.at(0, y, x) == doctest::Approx(expected).epsilon(1e-15));
      total += up.at(0, y, x);
    }
  }
  CHECK(std::abs(total / 16) < 1e-15);
}

TEST_CASE("resize output is clamped to [-1, 1]") {
  Image big({4, 4}, 1.7);
  const Image r = resize(big, {6, 6});
  for (double v : r.data()) CHECK(v == 1.0);
}

TEST_CASE("downsample then upsample of a smooth image stays within 0.05") {
  const Image x = smooth_image({64, 64});
  for (Size mid : {Size{48, 48}, Size{36, 36}}) {
    const Image back = resize(resize(x, mid), x.size());
    CHECK(max_abs_diff(back, x) < 0.05 * 2.0);
    CHECK(rmse(back, x) < 0.05);
  }
}

TEST_CASE("pyramid levels follow the schedule") {
  const auto sched = build_schedule({40, 52}, 0.75, 12, 52, 1);
  const Image x = random_image(sched.finest(), 5);
  const auto pyr = build_pyramid(x, sched);
  REQUIRE(pyr.size() == sched.sizes.size());
  CHECK(pyr.back() == x);
  for (int n = 0; n <= sched.N; ++n) CHECK(pyr[n].size() == sched.sizes[n]);
  CHECK_THROWS_AS(build_pyramid(random_image({10, 10}, 1), sched), std::invalid_argument);

  const Image c(sched.finest(), -0.5);
  for (const auto& level : build_pyramid(c, sched))
    for (double v : level.data()) CHECK(v == -0.5);
}
