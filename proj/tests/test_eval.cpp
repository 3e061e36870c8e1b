#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "analogy/eval.hpp"
#include "analogy/io.hpp"
#include "support/synthetic_bundle.hpp"

using namespace analogy;
using analogy::testing::pattern_image;

namespace {

FeatureStats make_stats(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
  FeatureStats s;
  s.d = static_cast<int>(mu.size());
  s.mu = std::move(mu);
  s.sigma = std::move(sigma);
  s.count = 100;
  return s;
}

Eigen::MatrixXd random_spd(int d, Rng& rng) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

Image noise(Size s, std::uint64_t seed) {
  Rng rng(seed);
  Image img(s);
  for (double& v : img.data()) v = 2 * rng.uniform() - 1;
  return img;
}

}  // namespace

TEST_CASE("frechet distance of a pure mean shift is the squared shift") {
  Rng rng(1);
  for (int d : {1, 3, 8}) {
    const Eigen::MatrixXd s = random_spd(d, rng);
    Eigen::VectorXd mu(d), v(d);
    for (int i = 0; i < d; ++i) {
      mu(i) = rng.normal();
      v(i) = rng.normal();
    }
    const double fd = frechet_distance(make_stats(mu, s), make_stats(mu + v, s));
    CHECK(std::abs(fd - v.squaredNorm()) < 1e-8);
  }
}

TEST_CASE("frechet distance between diagonal covariances") {
  Rng rng(2);
  const int d = 6;
  Eigen::VectorXd a(d), b(d), mu1(d), mu2(d);
  for (int i = 0; i < d; ++i) {
    a(i) = 0.1 + rng.uniform();
    b(i) = 0.1 + 3 * rng.uniform();
    mu1(i) = rng.normal();
    mu2(i) = rng.normal();
  }
  double expected = (mu1 - mu2).squaredNorm();
  for (int i = 0; i < d; ++i) expected += std::pow(std::sqrt(a(i)) - std::sqrt(b(i)), 2);
  const double fd = frechet_distance(make_stats(mu1, a.asDiagonal().toDenseMatrix()),
                                     make_stats(mu2, b.asDiagonal().toDenseMatrix()));
  CHECK(std::abs(fd - expected) < 1e-8);
}

TEST_CASE("frechet distance is symmetric and zero on identical statistics") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 4 + trial;
    Eigen::VectorXd m1 = Eigen::VectorXd::Random(d), m2 = Eigen::VectorXd::Random(d);
    const auto s1 = make_stats(m1, random_spd(d, rng));
    const auto s2 = make_stats(m2, random_spd(d, rng));
    CHECK(std::abs(frechet_distance(s1, s2) - frechet_distance(s2, s1)) < 1e-8);
    CHECK(std::abs(frechet_distance(s1, s1)) < 1e-8);
    CHECK(frechet_distance(s1, s2) >= 0.0);
  }
}

TEST_CASE("rank-deficient covariances stay finite") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  s(0, 0) = 1.0;
  std::vector<std::string> warnings;
  const double fd = frechet_distance(make_stats(Eigen::VectorXd::Zero(3), s),
                                     make_stats(Eigen::VectorXd::Zero(3), s), &warnings);
  CHECK(std::isfinite(fd));
  CHECK(fd == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("feature statistics use the population covariance") {
  Eigen::MatrixXd f(4, 2);
  f << 1, 0, 3, 0, 1, 2, 3, 2;
  const FeatureStats s = feature_stats(f);
  CHECK(s.count == 4);
  CHECK(s.mu(0) == doctest::Approx(2.0));
  CHECK(s.mu(1) == doctest::Approx(1.0));
  CHECK(s.sigma(0, 0) == doctest::Approx(1.0));
  CHECK(s.sigma(1, 1) == doctest::Approx(1.0));
  CHECK(s.sigma(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("sifid is zero on identical images and positive against noise") {
  const Image x = pattern_image({20, 18});
  for (const char* spec : {"random-conv", "patch"}) {
    CAPTURE(spec);
    const auto ex = make_extractor(spec, 1);
    CHECK(std::abs(sifid(x, x, *ex)) < 1e-10);
    CHECK(sifid(x, noise(x.size(), 2), *ex) > 0.0);
    CHECK(std::abs(sifid(x, noise(x.size(), 2), *ex) - sifid(noise(x.size(), 2), x, *ex)) < 1e-8);
  }
}

TEST_CASE("extractors are deterministic and report their dimension") {
  const Image x = pattern_image({12, 10});
  const ConvFeatureExtractor a(5), b(5), c(6);
  CHECK(a.extract(x).isApprox(b.extract(x), 0.0));
  CHECK_FALSE(a.extract(x).isApprox(c.extract(x), 1e-6));
  CHECK(a.extract(x).rows() == 120);
  CHECK(a.extract(x).cols() == a.dim());
  const PatchFeatureExtractor p(3);
  const Eigen::MatrixXd pf = p.extract(x);
  CHECK(pf.cols() == 27);
  // Centre tap of the first channel is the pixel itself.
  CHECK(pf(3 * 10 + 4, 4) == x.at(0, 3, 4));
  CHECK_THROWS_AS(make_extractor("nonsense"), std::invalid_argument);
}

TEST_CASE("batch evaluation scores every image in a directory") {
  const auto dir = std::filesystem::temp_directory_path() / "analogy_eval_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Image ref = pattern_image({16, 16});
  save_image(dir / "b.png", noise({16, 16}, 4));
  save_image(dir / "a.png", ref);
  const auto ex = make_extractor("patch");
  const EvalSummary s = eval_batch(load_image(dir / "a.png"), dir, *ex);
  REQUIRE(s.scores.size() == 2);
  CHECK(s.scores[0].first.filename() == "a.png");
  CHECK(s.scores[0].second == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(s.scores[1].second > 0.0);
  CHECK(s.mean == doctest::Approx((s.scores[0].second + s.scores[1].second) / 2));
  std::ostringstream csv;
  write_eval_csv(csv, s);
  CHECK(csv.str().find("a.png,") != std::string::npos);
  CHECK(csv.str().find("mean,") != std::string::npos);

  const auto empty = dir / "empty";
  std::filesystem::create_directories(empty);
  CHECK_THROWS(eval_batch(ref, empty, *ex));
  std::filesystem::remove_all(dir);
}
