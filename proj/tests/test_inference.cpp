#include <doctest.h>

#include "analogy/inference.hpp"
#include "support/synthetic_bundle.hpp"

using namespace analogy;
using analogy::testing::pattern_image;
using analogy::testing::small_config;
using analogy::testing::synthetic_bundle;

TEST_CASE("resolve_scale counts negative scales back from N") {
  CHECK(resolve_scale(0, 5) == 0);
  CHECK(resolve_scale(5, 5) == 5);
  CHECK(resolve_scale(-2, 5) == 3);
  CHECK(resolve_scale(-5, 5) == 0);
  CHECK_THROWS_AS(resolve_scale(6, 5), std::out_of_range);
  CHECK_THROWS_AS(resolve_scale(-6, 5), std::out_of_range);
}

TEST_CASE("injecting at N is a single conditional map") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 1);
  const Image src = pattern_image({24, 20});
  for (Domain from : {Domain::A, Domain::B}) {
    InferenceRequest req;
    req.from = from;
    req.inject = m.N();
    req.seed = 3;
    const Image direct = translate_at(m, from, resize(src, m.sched.finest()), m.N()).clamped();
    CHECK(max_abs_diff(translate(m, src, req), direct) == 0.0);
  }
}

TEST_CASE("early mapping at N reproduces translate for every injection scale") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 2);
  const Image src = pattern_image({24, 20}, 0.4);
  for (bool noise : {true, false}) {
    for (int S = 0; S < m.N(); ++S) {
      InferenceRequest req;
      req.inject = S;
      req.noise = noise;
      req.seed = 21;
      CHECK(max_abs_diff(translate_early(m, src, m.N(), req), translate(m, src, req)) == 0.0);
    }
  }
  InferenceRequest req;
  req.inject = 1;
  CHECK_THROWS_AS(translate_early(m, src, 1, req), std::invalid_argument);
}

TEST_CASE("translation is deterministic in its seed and stays in range") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 3);
  const Image src = pattern_image({30, 25});
  InferenceRequest req;
  req.inject = 0;
  req.seed = 5;
  const Image a = translate(m, src, req);
  CHECK(a.size() == m.sched.finest());
  CHECK(max_abs_diff(a, translate(m, src, req)) == 0.0);
  req.seed = 6;
  CHECK(max_abs_diff(a, translate(m, src, req)) > 0.0);
  for (double v : a.data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  req.noise = false;
  const Image quiet1 = translate(m, src, req);
  req.seed = 99;
  CHECK(max_abs_diff(quiet1, translate(m, src, req)) == 0.0);
}

TEST_CASE("injection sweep covers every scale in order") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 4);
  const Image src = pattern_image({24, 20});
  InferenceRequest req;
  req.seed = 8;
  const auto sweep = injection_sweep(m, src, req);
  REQUIRE(sweep.size() == static_cast<std::size_t>(m.N()) + 1);
  for (int S = 0; S <= m.N(); ++S) {
    req.inject = S;
    CHECK(max_abs_diff(sweep[S], translate(m, src, req)) == 0.0);
  }
}

TEST_CASE("inference refuses partially trained models") {
  ModelBundle m = synthetic_bundle({24, 20}, small_config(), 5);
  m.trained_up_to = m.N() - 1;
  CHECK_THROWS_AS(translate(m, pattern_image({24, 20}), {}), std::invalid_argument);
  CHECK_THROWS_AS(random_analogy(m, {}), std::invalid_argument);
}

TEST_CASE("random analogy maps its own sample") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 6);
  InferenceRequest req;
  req.seed = 12;
  const AnalogyPair p = random_analogy(m, req);
  CHECK(p.sample.size() == m.sched.finest());
  CHECK(max_abs_diff(p.mapped, translate_at(m, Domain::A, p.sample, m.N()).clamped()) < 1e-15);
  const AnalogyPair q = random_analogy(m, req);
  CHECK(max_abs_diff(p.mapped, q.mapped) == 0.0);
}

TEST_CASE("refinement inserts the image and climbs to the finest scale") {
  const ModelBundle r = synthetic_bundle({24, 20}, small_config(), 7, true);
  CHECK(r.at(0).layout.single_domain);
  const Image img = pattern_image({24, 20});
  const Image out = refine(r, img);
  CHECK(out.size() == r.sched.finest());
  const int s = r.N() - 1;
  const Image manual =
      uncond_continue(r, Domain::A,
                      uncond_step(r.at(s).g_a, resize(img, r.sched.at(s)),
                                  Image(r.sched.at(s), 0.0), s, r.K()),
                      s, r.N(), nullptr)
          .clamped();
  CHECK(max_abs_diff(out, manual) == 0.0);
  const Image at0 = refine(r, img, 0);
  const Image manual0 =
      uncond_continue(r, Domain::A,
                      uncond_step(r.at(0).g_a, std::nullopt, resize(img, r.sched.at(0)), 0, r.K()),
                      0, r.N(), nullptr)
          .clamped();
  CHECK(max_abs_diff(at0, manual0) == 0.0);
}
