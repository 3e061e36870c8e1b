#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "analogy/config.hpp"
#include "analogy/networks.hpp"

namespace analogy {

/// Raised when a loss or gradient turns non-finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar breakdown of one training iteration. Adversarial entries are the
/// Wasserstein estimates E D(real) - E D(fake) seen by the critic:
/// A1 = D_A on the A sample, B1 = D_B on the B sample, A2 = D_A on the B->A
/// translation, B2 = D_B on the A->B translation.
struct LossReport {
  double adv_A1 = 0, adv_B1 = 0, adv_A2 = 0, adv_B2 = 0;
  double gp_A = 0, gp_B = 0;
  double recon_A = 0, recon_B = 0;
  double cycle = 0;
  double total_G = 0, total_D = 0;
  int iteration = 0;
  int scale = 0;

  bool all_finite() const;
  bool operator==(const LossReport&) const = default;
};

std::string loss_csv_header();
std::string to_csv_row(const LossReport& r);
LossReport parse_csv_row(const std::string& line);

/// Any map from a [3,H,W] image to a score tensor; the penalty differentiates
/// the mean score.
using Critic = std::function<ad::Tensor(const ad::Tensor&)>;

Critic as_critic(const Network& d);

/// lambda * (||grad_c mean D(c)|| - 1)^2 with c = eps*real + (1-eps)*fake.
/// The result stays differentiable with respect to the critic's parameters.
ad::Tensor gradient_penalty(const Critic& d, const ad::Tensor& real, const ad::Tensor& fake,
                            double eps, double lambda);

/// Penalty value plus its gradient with respect to `params`, the latter from a
/// central difference of first-order critic gradients along the unit input
/// gradient direction. For backends without double differentiation.
struct PenaltyGrad {
  double value = 0.0;
  std::vector<ad::Tensor> grads;
};
PenaltyGrad gradient_penalty_fd(const Critic& d, const std::vector<ad::Tensor>& params,
                                const ad::Tensor& real, const ad::Tensor& fake, double eps,
                                double lambda, double step);

/// mean D(fake) - mean D(real) + penalty: the critic minimizes this.
ad::Tensor critic_loss(const Critic& d, const ad::Tensor& real, const ad::Tensor& fake, double eps,
                       double lambda);

/// -mean D(fake).
ad::Tensor generator_adv_loss(const Critic& d, const ad::Tensor& fake);

/// RMSE between output and target.
ad::Tensor rmse_loss(const ad::Tensor& output, const ad::Tensor& target);

/// rmse(output_a, target_a) + rmse(output_b, target_b).
ad::Tensor reconstruction_loss(const ad::Tensor& output_a, const ad::Tensor& target_a,
                               const ad::Tensor& output_b, const ad::Tensor& target_b);

/// rmse(a, aba) + rmse(b, bab).
ad::Tensor cycle_loss(const ad::Tensor& a, const ad::Tensor& aba, const ad::Tensor& b,
                      const ad::Tensor& bab);

/// Generator and critic totals from the report's parts. `gen_adv` is the sum
/// of the four generator adversarial terms (-E D(fake)). The cycle term is
/// dropped when `cycle_active` is false. `distance_scale` converts the
/// reported RMSE distances to the objective's norm (sqrt(3HW) for l2, 1 for rmse).
struct Totals {
  double total_G = 0.0;
  double total_D = 0.0;
};
Totals total_losses(const LossReport& parts, double gen_adv, const LossWeights& w,
                    bool cycle_active, double distance_scale = 1.0);

/// sqrt(3HW) under l2, 1 under rmse.
double distance_scale(ObjectiveNorm norm, Size size);

/// Whether the cycle term is applied at scale n.
bool cycle_applies(CycleScope scope, int n, int K);

}  // namespace analogy
