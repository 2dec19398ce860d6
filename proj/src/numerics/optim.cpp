#include "eraselab/numerics/optim.hpp"

#include <cmath>

#include "eraselab/errors.hpp"

namespace eraselab::numerics {

GradientDescent::GradientDescent(std::vector<Tensor> params, double learning_rate)
    : params_(std::move(params)), lr_(learning_rate) {
  require(lr_ >= 0.0, ErrorKind::Parameter, "GradientDescent: negative learning rate");
  for (const auto& p : params_)
    require(p.is_leaf() && p.requires_grad(), ErrorKind::Usage,
            "GradientDescent: parameters must be trainable leaves");
}

void GradientDescent::step() {
  if (lr_ == 0.0) return;
  for (auto& p : params_) {
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr_ * g[j];
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  require(config_.learning_rate >= 0.0, ErrorKind::Parameter, "Adam: negative learning rate");
  for (const auto& p : params_) {
    require(p.is_leaf() && p.requires_grad(), ErrorKind::Usage,
            "Adam: parameters must be trainable leaves");
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double lr = config_.learning_rate;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      if (lr != 0.0) w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
    }
  }
}

}  // namespace eraselab::numerics
