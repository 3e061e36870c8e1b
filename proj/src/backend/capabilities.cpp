#include "analogy/backend/capabilities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "analogy/backend/ops.hpp"
#include "analogy/backend/rng.hpp"

namespace analogy::ad {

namespace {

using ScalarFn = std::function<Tensor(const Tensor&)>;

double max_rel_error(const ScalarFn& f, const Tensor& x0, bool second_order) {
  // Optionally probe the second-order path through g(x) = ||df/dx||^2.
  ScalarFn objective = f;
  if (second_order) {
    objective = [f](const Tensor& x) {
      const Tensor gx = grad(f(x), {x}, true)[0];
      return sum(mul(gx, gx));
    };
  }
  Tensor x = x0.clone();
  x.set_requires_grad(true);
  const Tensor analytic = grad(objective(x), {x})[0];

  constexpr double h = 1e-5;
  double worst = 0.0;
  std::vector<double> base(x0.values().begin(), x0.values().end());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto eval = [&](double delta) {
      std::vector<double> v = base;
      v[i] += delta;
      Tensor xp = Tensor::from_values(x0.shape(), std::move(v), true);
      return objective(xp).item();
    };
    const double numeric = (eval(h) - eval(-h)) / (2 * h);
    const double a = analytic.values()[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace

std::vector<Capability> required_ops() {
  return {
      {"conv2d_3x3_same", true},   {"batch_norm_spatial", true}, {"leaky_relu", true},
      {"tanh", true},              {"add", true},                {"scale", true},
      {"resize_bilinear", true},   {"l2_norm", true},            {"mean", true},
      {"gaussian_seeded", false},
  };
}

std::vector<ProbeResult> probe_capabilities(bool throw_on_failure) {
  Rng rng(0xC0FFEE);
  const Tensor img = rng.normal_tensor({2, 5, 6}, 0.7);
  const Tensor weights = rng.normal_tensor({3, 2, 3, 3}, 0.4);
  const Tensor readout3 = rng.normal_tensor({3, 5, 6}, 1.0);
  const Tensor readout2 = rng.normal_tensor({2, 5, 6}, 1.0);
  const Tensor readout_small = rng.normal_tensor({2, 3, 4}, 1.0);
  const Tensor gamma = Tensor::from_values({2}, {1.3, 0.6});
  const Tensor beta = Tensor::from_values({2}, {0.1, -0.2});

  struct Case {
    std::string name;
    ScalarFn fn;
    bool second_order;
  };
  std::vector<Case> cases = {
      {"conv2d_3x3_same",
       [&](const Tensor& x) { return sum(mul(tanh(conv2d(x, weights)), readout3)); }, true},
      {"batch_norm_spatial",
       [&](const Tensor& x) {
         return sum(mul(tanh(batch_norm(x, gamma, beta, 1e-5)), readout2));
       },
       true},
      {"leaky_relu",
       [&](const Tensor& x) { return sum(mul(mul(leaky_relu(x, 0.2), x), readout2)); }, true},
      {"tanh", [&](const Tensor& x) { return sum(mul(tanh(x), readout2)); }, true},
      {"add", [&](const Tensor& x) { return sum(mul(add(x, mul(x, x)), readout2)); }, true},
      {"scale", [&](const Tensor& x) { return sum(mul(scale(mul(x, x), -1.7), readout2)); }, true},
      {"resize_bilinear",
       [&](const Tensor& x) {
         return sum(mul(tanh(resize_bilinear(x, 3, 4)), readout_small));
       },
       true},
      {"l2_norm", [&](const Tensor& x) { return l2_norm(x); }, true},
      {"mean", [&](const Tensor& x) { return mean(mul(x, tanh(x))); }, true},
  };

  std::vector<ProbeResult> results;
  for (const auto& c : cases) {
    ProbeResult r{c.name, 0.0, true};
    r.max_relative_error = max_rel_error(c.fn, img, false);
    if (c.second_order) {
      r.max_relative_error = std::max(r.max_relative_error, max_rel_error(c.fn, img, true));
    }
    r.ok = r.max_relative_error < 1e-3;
    results.push_back(r);
  }

  {
    Rng a(42), b(42);
    const Tensor s1 = a.normal_tensor({64}, 1.0);
    const Tensor s2 = b.normal_tensor({64}, 1.0);
    const bool same = std::equal(s1.values().begin(), s1.values().end(), s2.values().begin());
    results.push_back({"gaussian_seeded", 0.0, same});
  }

  if (throw_on_failure) {
    for (const auto& r : results) {
      if (!r.ok) {
        throw std::runtime_error("backend capability probe failed for " + r.name +
                                 " (max relative error " + std::to_string(r.max_relative_error) +
                                 ")");
      }
    }
  }
  return results;
}

}  // namespace analogy::ad
