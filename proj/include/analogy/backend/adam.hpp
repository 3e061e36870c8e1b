#pragma once

#include <vector>

#include "analogy/backend/tensor.hpp"

namespace analogy::ad {

/// Adam over a fixed list of leaf tensors, updated in place.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps = 1e-8);

  /// `grads[i]` matches `params[i]` in shape.
  void step(const std::vector<Tensor>& grads);
  int steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

}  // namespace analogy::ad
