// SGD with momentum over named parameter tensors.

#pragma once

#include <vector>

#include "kg2text/tensor.hpp"

namespace kg2text {

/// v <- momentum * v - lr * g;  p <- p + v.
/// momentum must lie in [0,1); shapes of the three buffers must agree.
void sgd_momentum_step(Tensor& param, const std::vector<double>& grad,
                       std::vector<double>& velocity, double lr,
                       double momentum);

/// Applies one step to every registered parameter using its accumulated
/// gradient, then leaves gradients untouched (call zero_grads() between
/// optimization steps).
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Tensor> params, double momentum);

  void step(double lr);
  void zero_grads();
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> velocity_;
  double momentum_;
};

}  // namespace kg2text
