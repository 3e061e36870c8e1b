#include <doctest.h>

#include <cmath>

#include "analogy/losses.hpp"
#include "support/loss_gradients.hpp"

using namespace analogy;
using analogy::testing::relative_error;

namespace {

// D(x) = <w, x>, whose input gradient is w everywhere.
Critic linear_critic(const ad::Tensor& w) {
  return [w](const ad::Tensor& x) { return ad::sum(ad::mul(x, w)); };
}

ad::Tensor with_norm(ad::Tensor t, double norm) {
  double s = 0;
  for (double v : t.values()) s += v * v;
  const double f = norm / std::sqrt(s);
  for (double& v : t.mutable_values()) v *= f;
  return t;
}

}  // namespace

TEST_CASE("penalty of a linear critic is lambda * (||w|| - 1)^2") {
  Rng rng(3);
  const ad::Tensor real = rng.normal_tensor({3, 8, 8}, 0.5);
  const ad::Tensor fake = rng.normal_tensor({3, 8, 8}, 0.5);
  for (double lambda : {0.1, 1.0, 10.0}) {
    for (double eps : {0.0, 0.37, 1.0}) {
      const ad::Tensor w1 = with_norm(rng.normal_tensor({3, 8, 8}, 1.0), 1.0);
      const ad::Tensor w2 = with_norm(rng.normal_tensor({3, 8, 8}, 1.0), 2.0);
      CHECK(std::abs(gradient_penalty(linear_critic(w1), real, fake, eps, lambda).item()) < 1e-6);
      CHECK(gradient_penalty(linear_critic(w2), real, fake, eps, lambda).item() ==
            doctest::Approx(lambda).epsilon(1e-6));
      const ad::Tensor w3 = with_norm(rng.normal_tensor({3, 8, 8}, 1.0), 3.5);
      CHECK(gradient_penalty(linear_critic(w3), real, fake, eps, lambda).item() ==
            doctest::Approx(lambda * 2.5 * 2.5).epsilon(1e-9));
    }
  }
}

TEST_CASE("penalty of a constant critic is lambda") {
  Rng rng(4);
  const ad::Tensor real = rng.normal_tensor({3, 5, 6}, 0.5);
  const ad::Tensor fake = rng.normal_tensor({3, 5, 6}, 0.5);
  const ad::Tensor bias = ad::Tensor::scalar(0.7);
  const Critic constant = [&](const ad::Tensor& x) {
    return ad::add(ad::scale(ad::sum(x), 0.0), bias);
  };
  CHECK(gradient_penalty(constant, real, fake, 0.5, 0.1).item() == doctest::Approx(0.1));
  const auto fd = gradient_penalty_fd(constant, {}, real, fake, 0.5, 0.1, 1e-4);
  CHECK(fd.value == doctest::Approx(0.1));
}

TEST_CASE("penalty rejects mismatched shapes") {
  Rng rng(5);
  const Critic c = linear_critic(rng.normal_tensor({3, 4, 4}, 1.0));
  CHECK_THROWS_AS(gradient_penalty(c, rng.normal_tensor({3, 4, 4}, 1.0),
                                   rng.normal_tensor({3, 4, 5}, 1.0), 0.5, 0.1),
                  std::invalid_argument);
}

TEST_CASE("finite-difference penalty gradient agrees with double differentiation") {
  Rng rng(6);
  const Network d = analogy::testing::perturbed_network(NetSpec::discriminator(4), rng, 0.3);
  const ad::Tensor real = rng.normal_tensor({3, 8, 8}, 0.5);
  const ad::Tensor fake = rng.normal_tensor({3, 8, 8}, 0.5);
  const auto params = d.params().tensors();
  const ad::Tensor exact = gradient_penalty(as_critic(d), real, fake, 0.3, 0.1);
  const auto exact_grads = ad::grad(exact, params, false, true);
  const auto fd = gradient_penalty_fd(as_critic(d), params, real, fake, 0.3, 0.1, 1e-5);
  CHECK(fd.value == doctest::Approx(exact.item()).epsilon(1e-12));
  double scale = 0, worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].numel(); ++i) {
      scale = std::max(scale, std::abs(exact_grads[k].values()[i]));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].numel(); ++i) {
      worst = std::max(worst, std::abs(exact_grads[k].values()[i] - fd.grads[k].values()[i]));
    }
  }
  CHECK(scale > 0);
  CHECK(worst / scale < 1e-4);
}

TEST_CASE("every loss term's parameter gradient matches central differences") {
  for (std::uint64_t seed : {1u, 2u}) {
    CAPTURE(seed);
    for (const auto& t : analogy::testing::loss_gradient_suite(seed)) {
      CAPTURE(t.term);
      CHECK(t.entries > 0);
      CHECK(t.worst_relative < 1e-3);
    }
  }
}

TEST_CASE("rmse loss value and symmetry") {
  const ad::Tensor a = ad::Tensor::from_values({4}, {1, 2, 3, 4});
  const ad::Tensor b = ad::Tensor::from_values({4}, {1, 0, 3, 8});
  CHECK(rmse_loss(a, b).item() == doctest::Approx(std::sqrt((4.0 + 16.0) / 4.0)));
  CHECK(rmse_loss(a, b).item() == rmse_loss(b, a).item());
  CHECK(rmse_loss(a, a).item() == 0.0);
  CHECK(cycle_loss(a, b, b, a).item() == doctest::Approx(2 * std::sqrt(5.0)));
}

TEST_CASE("critic loss is the negated Wasserstein estimate plus the penalty") {
  Rng rng(8);
  const ad::Tensor w = with_norm(rng.normal_tensor({3, 4, 4}, 1.0), 2.0);
  const ad::Tensor real = rng.normal_tensor({3, 4, 4}, 0.5);
  const ad::Tensor fake = rng.normal_tensor({3, 4, 4}, 0.5);
  const Critic c = linear_critic(w);
  const double expected = c(fake).item() - c(real).item() + 0.1;
  CHECK(critic_loss(c, real, fake, 0.4, 0.1).item() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(generator_adv_loss(c, fake).item() == doctest::Approx(-c(fake).item()));
}

TEST_CASE("totals combine the weighted parts") {
  LossReport r;
  r.adv_A1 = 1;
  r.adv_B1 = 2;
  r.adv_A2 = 3;
  r.adv_B2 = 4;
  r.gp_A = 0.5;
  r.gp_B = 0.25;
  r.recon_A = 0.1;
  r.recon_B = 0.2;
  r.cycle = 0.3;
  const LossWeights w;
  const Totals on = total_losses(r, -1.5, w, true);
  CHECK(on.total_D == doctest::Approx(-10 + 0.75));
  CHECK(on.total_G == doctest::Approx(-1.5 + w.lambda_recon * 0.3 + w.lambda_cycle * 0.3));
  const Totals off = total_losses(r, -1.5, w, false);
  CHECK(off.total_G == doctest::Approx(-1.5 + w.lambda_recon * 0.3));
  CHECK(off.total_D == on.total_D);
  const Totals l2 = total_losses(r, -1.5, w, true, 6.0);
  CHECK(l2.total_G == doctest::Approx(-1.5 + 6.0 * (w.lambda_recon * 0.3 + w.lambda_cycle * 0.3)));
  CHECK(l2.total_D == on.total_D);
}

TEST_CASE("l2 distance scale turns an rmse into the euclidean norm") {
  CHECK(distance_scale(ObjectiveNorm::rmse, {5, 7}) == 1.0);
  CHECK(distance_scale(ObjectiveNorm::l2, {4, 3}) == doctest::Approx(6.0));
  const ad::Tensor a = ad::Tensor::full({3, 4, 3}, 0.5);
  const ad::Tensor b = ad::Tensor::zeros({3, 4, 3});
  // ||a - b||_2 = 0.5 * 6
  CHECK(rmse_loss(a, b).item() * distance_scale(ObjectiveNorm::l2, {4, 3}) == doctest::Approx(3.0));
}

TEST_CASE("cycle scope selects scales") {
  const int K = 4;
  for (int n = 0; n < 7; ++n) {
    CHECK(cycle_applies(CycleScope::all, n, K) == (n < K));
    CHECK(cycle_applies(CycleScope::last_only, n, K) == (n == K - 1));
    CHECK_FALSE(cycle_applies(CycleScope::none, n, K));
  }
  CHECK_FALSE(cycle_applies(CycleScope::last_only, 0, 0));
}

TEST_CASE("loss rows round-trip through csv exactly") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    LossReport r;
    for (double* f : {&r.adv_A1, &r.adv_B1, &r.adv_A2, &r.adv_B2, &r.gp_A, &r.gp_B, &r.recon_A,
                      &r.recon_B, &r.cycle, &r.total_G, &r.total_D}) {
      *f = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(20)) - 10);
    }
    r.iteration = static_cast<int>(rng.below(100000));
    r.scale = static_cast<int>(rng.below(10));
    CHECK(parse_csv_row(to_csv_row(r)) == r);
  }
  CHECK(loss_csv_header().find("adv_A1,adv_B1,adv_A2,adv_B2,gp_A,gp_B") == 0);
  CHECK_THROWS_AS(parse_csv_row("1,2,3"), std::invalid_argument);
}

TEST_CASE("all_finite flags nan and inf") {
  LossReport r;
  CHECK(r.all_finite());
  r.cycle = std::nan("");
  CHECK_FALSE(r.all_finite());
  r.cycle = 0;
  r.total_D = INFINITY;
  CHECK_FALSE(r.all_finite());
}
