#include "analogy/backend/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace analogy::ad {

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    if (!p.is_leaf()) throw std::invalid_argument("Adam: parameters must be leaf tensors");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != params_.size()) {
    throw std::invalid_argument("Adam: expected " + std::to_string(params_.size()) +
                                " gradients, got " + std::to_string(grads.size()));
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (grads[k].shape() != params_[k].shape()) {
      throw std::invalid_argument("Adam: gradient shape mismatch");
    }
    auto p = params_[k].mutable_values();
    auto g = grads[k].values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

}  // namespace analogy::ad
