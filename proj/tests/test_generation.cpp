#include <doctest.h>

#include "analogy/generation.hpp"
#include "support/synthetic_bundle.hpp"

using namespace analogy;
using analogy::testing::pattern_image;
using analogy::testing::perturbed_network;
using analogy::testing::small_config;
using analogy::testing::synthetic_bundle;

namespace {

bool equal(const ad::Tensor& a, const ad::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (a.values()[i] != b.values()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("unconditional step forms by scale") {
  Rng rng(1);
  const Network g = perturbed_network(NetSpec::generator(4), rng, 0.3);
  const ad::Tensor z = rng.normal_tensor({3, 9, 7}, 0.3);
  const ad::Tensor prev = rng.normal_tensor({3, 9, 7}, 0.5);
  const int K = 3;
  ad::NoGradGuard off;
  branch_counters() = {};

  CHECK(equal(uncond_step(g, {}, z, 0, K), g.forward(z)));
  CHECK(equal(uncond_step(g, prev, z, 1, K), ad::add(g.forward(ad::add(z, prev)), prev)));
  CHECK(equal(uncond_step(g, prev, z, 3, K), g.forward(ad::add(z, prev))));
  CHECK(equal(uncond_step(g, prev, z, 5, K), g.forward(ad::add(z, prev))));
  CHECK(branch_counters() == BranchCounters{1, 1, 2, 0, 0});

  CHECK(equal(cond_map(g, prev, 2, K), ad::add(g.forward(prev), prev)));
  CHECK(equal(cond_map(g, prev, 3, K), g.forward(prev)));
  CHECK(branch_counters().cond_residual == 1);
  CHECK(branch_counters().cond_plain == 1);

  CHECK_THROWS_AS(uncond_step(g, prev, z, 0, K), std::invalid_argument);
  CHECK_THROWS_AS(uncond_step(g, {}, z, 1, K), std::invalid_argument);
  CHECK_THROWS_AS(uncond_step(g, rng.normal_tensor({3, 8, 7}, 1.0), z, 1, K),
                  std::invalid_argument);
}

TEST_CASE("zero-initialized generators make residual maps identities") {
  const auto nets = make_scale_nets(NetSpec::generator(4), 1, 3);
  const Image x = pattern_image({13, 11});
  for (int n = 0; n < 3; ++n) {
    const CyclePair p = cycle_chain(nets.g_a, nets.g_b, x, n, 3);
    CHECK(max_abs_diff(p.ab, x) == 0.0);
    CHECK(max_abs_diff(p.aba, x) == 0.0);
  }
  // Above K the zero map is the output itself.
  CHECK(max_abs_diff(cond_map(nets.g_a, x, 3, 3), Image(x.size(), 0.0)) == 0.0);
  CHECK_THROWS_AS(cycle_chain(nets.g_a, nets.g_b, x, 3, 3), std::invalid_argument);
}

TEST_CASE("noise plan is deterministic and sigma is only known once set") {
  const auto sched = build_schedule({30, 40}, 0.75, 10, 40, 1);
  const NoisePlan p = make_noise_plan(sched, 5);
  CHECK(p == make_noise_plan(sched, 5));
  CHECK_FALSE(p == make_noise_plan(sched, 6));
  CHECK(p.z_star_a.size() == sched.at(0));
  CHECK(max_abs_diff(p.z_star_a, p.z_star_b) > 0.0);

  NoisePlan q = p;
  CHECK_FALSE(q.has_sigma(0));
  CHECK_THROWS_AS(q.sigma(Domain::A, 0), std::logic_error);
  CHECK_THROWS_AS(q.set_sigma(Domain::A, 1, 0.5), std::logic_error);
  q.set_sigma(Domain::A, 0, 0.5);
  q.set_sigma(Domain::B, 0, 0.25);
  CHECK(q.has_sigma(0));
  CHECK(q.sigma(Domain::A, 0) == 0.5);
  CHECK(q.sigma(Domain::B, 0) == 0.25);
  CHECK_THROWS_AS(q.sigma(Domain::A, 1), std::logic_error);
}

TEST_CASE("effective K under the residual policies") {
  const auto sched = build_schedule({48, 48}, 0.75, 25, 48, 1);
  CHECK(effective_K(sched, ResidualPolicy::standard) == sched.K);
  CHECK(effective_K(sched, ResidualPolicy::all) == sched.N + 1);
  CHECK(effective_K(sched, ResidualPolicy::none) == 0);
}

TEST_CASE("reconstruction chain is deterministic and random chains follow the seed") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 4);
  const auto rec1 = uncond_chain(m, Domain::A, m.N(), ChainMode::reconstruction, nullptr);
  const auto rec2 = uncond_chain(m, Domain::A, m.N(), ChainMode::reconstruction, nullptr);
  REQUIRE(rec1.size() == static_cast<std::size_t>(m.N()) + 1);
  for (int n = 0; n <= m.N(); ++n) {
    CHECK(rec1[n].size() == m.sched.at(n));
    CHECK(max_abs_diff(rec1[n], rec2[n]) == 0.0);
  }
  Rng r1(9), r2(9), r3(10);
  const auto a = uncond_chain(m, Domain::B, m.N(), ChainMode::random, &r1);
  const auto b = uncond_chain(m, Domain::B, m.N(), ChainMode::random, &r2);
  const auto c = uncond_chain(m, Domain::B, m.N(), ChainMode::random, &r3);
  CHECK(max_abs_diff(a.back(), b.back()) == 0.0);
  CHECK(max_abs_diff(a.back(), c.back()) > 0.0);
  CHECK_THROWS_AS(uncond_chain(m, Domain::A, m.N(), ChainMode::random, nullptr),
                  std::invalid_argument);
  CHECK_THROWS_AS(uncond_chain(m, Domain::A, m.N() + 1, ChainMode::reconstruction, nullptr),
                  std::out_of_range);
}

TEST_CASE("continuing a chain from an intermediate scale matches the full chain") {
  const ModelBundle m = synthetic_bundle({24, 20}, small_config(), 4);
  const auto rec = uncond_chain(m, Domain::A, m.N(), ChainMode::reconstruction, nullptr);
  for (int s = 0; s <= m.N(); ++s) {
    const Image top = uncond_continue(m, Domain::A, rec[s], s, m.N(), nullptr);
    CHECK(max_abs_diff(top, rec.back()) == 0.0);
  }
}

TEST_CASE("translate_at uses the conditional generator of the target domain") {
  TrainConfig cfg = small_config();
  cfg.ablations.shared_cond_uncond = false;
  const ModelBundle m = synthetic_bundle({24, 20}, cfg, 6);
  const int n = m.N();
  const Image x = resize(pattern_image({24, 20}), m.sched.at(n));
  CHECK(max_abs_diff(translate_at(m, Domain::A, x, n), cond_map(m.at(n).gc_b, x, n, m.K())) ==
        0.0);
  CHECK(max_abs_diff(translate_at(m, Domain::B, x, n), cond_map(m.at(n).gc_a, x, n, m.K())) ==
        0.0);
  CHECK(max_abs_diff(translate_at(m, Domain::A, x, n), cond_map(m.at(n).g_b, x, n, m.K())) > 0.0);
  CHECK_THROWS_AS(translate_at(m, Domain::A, resize(x, m.sched.at(0)), n), std::invalid_argument);
}

TEST_CASE("the previous-translation ablation feeds the upsampled translation in") {
  TrainConfig cfg = small_config();
  cfg.ablations.condition_on_prev_translation = true;
  const ModelBundle m = synthetic_bundle({24, 20}, cfg, 7);
  const int n = m.N();
  const Image x = resize(pattern_image({24, 20}), m.sched.at(n));
  const Image prev = resize(pattern_image({24, 20}, 1.0), m.sched.at(n - 1));
  ad::NoGradGuard off;
  const ad::Tensor expected = cond_map_with_prev(
      m.at(n).g_b, x.to_tensor(), resize(prev, x.size()).to_tensor(), n, m.K());
  CHECK(max_abs_diff(translate_at(m, Domain::A, x, n, prev), Image::from_tensor(expected)) == 0.0);
  // B -> A is not conditioned.
  CHECK(max_abs_diff(translate_at(m, Domain::B, x, n, prev), cond_map(m.at(n).g_a, x, n, m.K())) ==
        0.0);
}

TEST_CASE("bundle fingerprint tracks every scale") {
  ModelBundle m = synthetic_bundle({24, 20}, small_config(), 8);
  const auto before = m.fingerprint();
  auto v = m.nets[0].d_b.params().entries().front().value;
  v.mutable_values()[0] += 1e-9;
  CHECK(m.fingerprint() != before);
  CHECK_THROWS_AS(m.at(m.N() + 1), std::out_of_range);
}
