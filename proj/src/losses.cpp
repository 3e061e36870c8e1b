#include "analogy/losses.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "analogy/backend/ops.hpp"

namespace analogy {

namespace {

void require_finite(const ad::Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite ") + what);
  }
}

ad::Tensor interpolate(const ad::Tensor& real, const ad::Tensor& fake, double eps) {
  if (real.shape() != fake.shape()) {
    throw std::invalid_argument("gradient penalty: real " + ad::to_string(real.shape()) +
                                " and fake " + ad::to_string(fake.shape()) + " differ in shape");
  }
  auto r = real.values();
  auto f = fake.values();
  std::vector<double> c(r.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = eps * r[i] + (1.0 - eps) * f[i];
  return ad::Tensor::from_values(real.shape(), std::move(c), true);
}

}  // namespace

bool LossReport::all_finite() const {
  for (double v : {adv_A1, adv_B1, adv_A2, adv_B2, gp_A, gp_B, recon_A, recon_B, cycle, total_G,
                   total_D}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string loss_csv_header() {
  return "adv_A1,adv_B1,adv_A2,adv_B2,gp_A,gp_B,recon_A,recon_B,cycle,total_G,total_D,iteration,"
         "scale";
}

std::string to_csv_row(const LossReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d", r.adv_A1,
                r.adv_B1, r.adv_A2, r.adv_B2, r.gp_A, r.gp_B, r.recon_A, r.recon_B, r.cycle,
                r.total_G, r.total_D, r.iteration, r.scale);
  return buf;
}

LossReport parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  if (cells.size() != 13) {
    throw std::invalid_argument("loss row must have 13 columns, got " +
                                std::to_string(cells.size()));
  }
  LossReport r;
  double* fields[] = {&r.adv_A1, &r.adv_B1, &r.adv_A2, &r.adv_B2, &r.gp_A,    &r.gp_B,
                      &r.recon_A, &r.recon_B, &r.cycle,  &r.total_G, &r.total_D};
  for (std::size_t i = 0; i < 11; ++i) *fields[i] = std::stod(cells[i]);
  r.iteration = std::stoi(cells[11]);
  r.scale = std::stoi(cells[12]);
  return r;
}

Critic as_critic(const Network& d) {
  return [&d](const ad::Tensor& x) { return d.forward(x); };
}

ad::Tensor gradient_penalty(const Critic& d, const ad::Tensor& real, const ad::Tensor& fake,
                            double eps, double lambda) {
  const ad::Tensor c = interpolate(real, fake, eps);
  ad::GradModeGuard record(true);
  const ad::Tensor g = ad::grad(ad::mean(d(c)), {c}, /*create_graph=*/true)[0];
  require_finite(g, "critic input gradient in the gradient penalty");
  const ad::Tensor dev = ad::add_scalar(ad::l2_norm(g), -1.0);
  return ad::scale(ad::mul(dev, dev), lambda);
}

PenaltyGrad gradient_penalty_fd(const Critic& d, const std::vector<ad::Tensor>& params,
                                const ad::Tensor& real, const ad::Tensor& fake, double eps,
                                double lambda, double step) {
  const ad::Tensor c = interpolate(real, fake, eps);
  ad::GradModeGuard record(true);
  const ad::Tensor g = ad::grad(ad::mean(d(c)), {c})[0];
  require_finite(g, "critic input gradient in the gradient penalty");
  double norm = 0.0;
  for (double v : g.values()) norm += v * v;
  norm = std::sqrt(norm);

  PenaltyGrad out;
  out.value = lambda * (norm - 1.0) * (norm - 1.0);
  if (norm == 0.0) {
    // Zero subgradient of the norm at the origin.
    for (const auto& p : params) out.grads.push_back(ad::Tensor::zeros(p.shape()));
    return out;
  }
  auto shifted = [&](double sign) {
    auto cv = c.values();
    auto gv = g.values();
    std::vector<double> v(cv.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = cv[i] + sign * step * gv[i] / norm;
    const ad::Tensor x = ad::Tensor::from_values(c.shape(), std::move(v));
    return ad::grad(ad::mean(d(x)), params, false, true);
  };
  const auto plus = shifted(1.0);
  const auto minus = shifted(-1.0);
  const double coeff = 2.0 * lambda * (norm - 1.0) / (2.0 * step);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto a = plus[k].values();
    auto b = minus[k].values();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = coeff * (a[i] - b[i]);
    out.grads.push_back(ad::Tensor::from_values(params[k].shape(), std::move(v)));
  }
  return out;
}

ad::Tensor critic_loss(const Critic& d, const ad::Tensor& real, const ad::Tensor& fake, double eps,
                       double lambda) {
  const ad::Tensor w = ad::sub(ad::mean(d(fake)), ad::mean(d(real)));
  return ad::add(w, gradient_penalty(d, real, fake, eps, lambda));
}

ad::Tensor generator_adv_loss(const Critic& d, const ad::Tensor& fake) {
  return ad::neg(ad::mean(d(fake)));
}

ad::Tensor rmse_loss(const ad::Tensor& output, const ad::Tensor& target) {
  return ad::rms(ad::sub(output, target));
}

ad::Tensor reconstruction_loss(const ad::Tensor& output_a, const ad::Tensor& target_a,
                               const ad::Tensor& output_b, const ad::Tensor& target_b) {
  return ad::add(rmse_loss(output_a, target_a), rmse_loss(output_b, target_b));
}

ad::Tensor cycle_loss(const ad::Tensor& a, const ad::Tensor& aba, const ad::Tensor& b,
                      const ad::Tensor& bab) {
  return ad::add(rmse_loss(a, aba), rmse_loss(b, bab));
}

Totals total_losses(const LossReport& parts, double gen_adv, const LossWeights& w,
                    bool cycle_active, double distance_scale) {
  Totals t;
  t.total_G = gen_adv + distance_scale * (w.lambda_recon * (parts.recon_A + parts.recon_B) +
                                          (cycle_active ? w.lambda_cycle * parts.cycle : 0.0));
  t.total_D = -(parts.adv_A1 + parts.adv_B1 + parts.adv_A2 + parts.adv_B2) + parts.gp_A +
              parts.gp_B;
  return t;
}

double distance_scale(ObjectiveNorm norm, Size size) {
  if (norm == ObjectiveNorm::rmse) return 1.0;
  return std::sqrt(static_cast<double>(Image::kChannels) * size.height * size.width);
}

bool cycle_applies(CycleScope scope, int n, int K) {
  switch (scope) {
    case CycleScope::all: return n < K;
    case CycleScope::last_only: return n == K - 1;
    case CycleScope::none: return false;
  }
  return false;
}

}  // namespace analogy
