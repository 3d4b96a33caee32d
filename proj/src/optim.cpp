#include "kg2text/optim.hpp"

#include <stdexcept>
#include <string>

namespace kg2text {

void sgd_momentum_step(Tensor& param, const std::vector<double>& grad,
                       std::vector<double>& velocity, double lr,
                       double momentum) {
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("momentum must be in [0,1), got " +
                                std::to_string(momentum));
  }
  if (grad.size() != param.size() || velocity.size() != param.size()) {
    throw ShapeError("sgd step size mismatch for param " + param.shape_str());
  }
  for (size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grad[i];
    param.data()[i] += velocity[i];
  }
}

SgdMomentum::SgdMomentum(std::vector<Tensor> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("momentum must be in [0,1)");
  }
  velocity_.reserve(params_.size());
  for (const Tensor& p : params_)
    velocity_.emplace_back(p.size(), 0.0);
}

void SgdMomentum::step(double lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;  // unused this step
    sgd_momentum_step(params_[i], params_[i].grad(), velocity_[i], lr,
                      momentum_);
  }
}

void SgdMomentum::zero_grads() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace kg2text
