#pragma once

#include <cstddef>
#include <vector>

#include "eraselab/numerics/tensor.hpp"

namespace eraselab::numerics {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Optimizers update a fixed list of leaf parameters from the grads left by
// the last backward pass.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step() = 0;
};

// w -= lr * grad
class GradientDescent final : public Optimizer {
 public:
  GradientDescent(std::vector<Tensor> params, double learning_rate);

  void step() override;
  double learning_rate() const noexcept { return lr_; }

 private:
  std::vector<Tensor> params_;
  double lr_;
};

class Adam final : public Optimizer {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step() override;
  void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }
  const AdamConfig& config() const noexcept { return config_; }
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace eraselab::numerics
