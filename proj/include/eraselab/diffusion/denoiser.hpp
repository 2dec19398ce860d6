#pragma once

// Epsilon-prediction MLP: [x_t | sinusoidal(t) | concept embedding] ->
// hidden SiLU layers -> epsilon estimate with the shape of x_t.

#include <cstdint>
#include <span>
#include <vector>

#include "eraselab/diffusion/schedule.hpp"
#include "eraselab/numerics/tensor.hpp"

namespace eraselab::diffusion {

struct DenoiserArch {
  std::size_t data_dim = 2;
  std::size_t embed_dim = 16;
  std::size_t time_features = 16;  // even
  std::vector<std::size_t> hidden = {128, 128, 128};

  std::size_t input_dim() const noexcept { return data_dim + time_features + embed_dim; }
  bool operator==(const DenoiserArch&) const = default;
};

std::vector<double> timestep_features(std::size_t t, std::size_t count);

class DenoiserModel {
 public:
  struct Layer {
    numerics::Tensor weight;  // [in x out]
    numerics::Tensor bias;    // [out]
  };

  DenoiserModel() = default;
  // Copies are deep: parameters are never shared between models.
  DenoiserModel(const DenoiserModel& other);
  DenoiserModel& operator=(const DenoiserModel& other);
  DenoiserModel(DenoiserModel&&) noexcept = default;
  DenoiserModel& operator=(DenoiserModel&&) noexcept = default;

  // Same values with untracked weights: forward passes through the copy
  // still carry gradients to tracked inputs (x_t, embedding) but never to
  // the weights. Copying the result yields trainable weights again.
  DenoiserModel constant_copy() const;

  // Scaled-uniform initialization, deterministic in seed.
  static DenoiserModel initialize(const DenoiserArch& arch, NoiseSchedule schedule, std::uint64_t seed);
  static DenoiserModel zeros(const DenoiserArch& arch, NoiseSchedule schedule);

  const DenoiserArch& arch() const noexcept { return arch_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  // Differentiable forward pass. x_t is [B x data_dim]; timesteps has B
  // entries; embedding is [embed_dim] (shared by the batch) or
  // [B x embed_dim].
  numerics::Tensor forward(numerics::Tape& tape, const numerics::Tensor& x_t,
                           std::span<const std::size_t> timesteps,
                           const numerics::Tensor& embedding) const;

  // Untracked forward for a batch sharing one timestep and embedding.
  // x_t is row-major [rows x data_dim].
  std::vector<double> predict(std::span<const double> x_t, std::size_t rows, std::size_t t,
                              std::span<const double> embedding) const;

  // Trainable leaves in layer order (weight, bias, weight, bias, ...).
  std::vector<numerics::Tensor> parameters() const;
  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);
  std::vector<numerics::Shape> parameter_shapes() const;

  bool parameters_equal(const DenoiserModel& other) const;

 private:
  DenoiserArch arch_;
  NoiseSchedule schedule_;
  std::vector<Layer> layers_;
};

// Single-sample convenience wrapper around DenoiserModel::forward.
numerics::Tensor denoise_predict(numerics::Tape& tape, const DenoiserModel& model,
                                 const numerics::Tensor& x_t, std::size_t t,
                                 const numerics::Tensor& concept_embedding);

}  // namespace eraselab::diffusion
