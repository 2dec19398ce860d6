#include "eraselab/diffusion/denoiser.hpp"

#include <cmath>
#include <random>

#include "eraselab/errors.hpp"
#include "eraselab/numerics/kernels.hpp"
#include "eraselab/numerics/random.hpp"

namespace eraselab::diffusion {

using numerics::Tape;
using numerics::Tensor;

std::vector<double> timestep_features(std::size_t t, std::size_t count) {
  require(count % 2 == 0, ErrorKind::Parameter, "time feature count must be even");
  const std::size_t half = count / 2;
  std::vector<double> f(count);
  for (std::size_t j = 0; j < half; ++j) {
    const double freq = std::exp(-std::log(1000.0) * static_cast<double>(j) / static_cast<double>(half));
    const double angle = static_cast<double>(t) * freq;
    f[j] = std::sin(angle);
    f[half + j] = std::cos(angle);
  }
  return f;
}

namespace {

void validate(const DenoiserArch& arch) {
  require(arch.data_dim >= 1 && arch.embed_dim >= 1, ErrorKind::Parameter,
          "denoiser dimensions must be positive");
  require(arch.time_features >= 2 && arch.time_features % 2 == 0, ErrorKind::Parameter,
          "time_features must be a positive even number");
  require(!arch.hidden.empty(), ErrorKind::Parameter, "denoiser needs at least one hidden layer");
  for (auto h : arch.hidden) require(h >= 1, ErrorKind::Parameter, "hidden widths must be positive");
}

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const DenoiserArch& arch) {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  std::size_t in = arch.input_dim();
  for (auto h : arch.hidden) {
    dims.emplace_back(in, h);
    in = h;
  }
  dims.emplace_back(in, arch.data_dim);
  return dims;
}

std::vector<DenoiserModel::Layer> clone_layers(const std::vector<DenoiserModel::Layer>& src,
                                               bool trainable = true) {
  const auto make = trainable ? &Tensor::parameter : &Tensor::constant;
  std::vector<DenoiserModel::Layer> out;
  out.reserve(src.size());
  for (const auto& l : src) {
    out.push_back({make(l.weight.shape(), {l.weight.values().begin(), l.weight.values().end()}),
                   make(l.bias.shape(), {l.bias.values().begin(), l.bias.values().end()})});
  }
  return out;
}

}  // namespace

DenoiserModel::DenoiserModel(const DenoiserModel& other)
    : arch_(other.arch_), schedule_(other.schedule_), layers_(clone_layers(other.layers_)) {}

DenoiserModel& DenoiserModel::operator=(const DenoiserModel& other) {
  if (this != &other) {
    arch_ = other.arch_;
    schedule_ = other.schedule_;
    layers_ = clone_layers(other.layers_);
  }
  return *this;
}

DenoiserModel DenoiserModel::constant_copy() const {
  DenoiserModel m;
  m.arch_ = arch_;
  m.schedule_ = schedule_;
  m.layers_ = clone_layers(layers_, false);
  return m;
}

DenoiserModel DenoiserModel::initialize(const DenoiserArch& arch, NoiseSchedule schedule,
                                        std::uint64_t seed) {
  validate(arch);
  DenoiserModel m;
  m.arch_ = arch;
  m.schedule_ = std::move(schedule);
  numerics::Rng rng(seed);
  for (const auto& [in, out] : layer_dims(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(in * out), b(out);
    for (double& x : w) x = dist(rng.engine());
    for (double& x : b) x = dist(rng.engine());
    m.layers_.push_back({Tensor::parameter({in, out}, std::move(w)), Tensor::parameter({out}, std::move(b))});
  }
  return m;
}

DenoiserModel DenoiserModel::zeros(const DenoiserArch& arch, NoiseSchedule schedule) {
  validate(arch);
  DenoiserModel m;
  m.arch_ = arch;
  m.schedule_ = std::move(schedule);
  for (const auto& [in, out] : layer_dims(arch))
    m.layers_.push_back({Tensor::zeros({in, out}, true), Tensor::zeros({out}, true)});
  return m;
}

Tensor DenoiserModel::forward(Tape& tape, const Tensor& x_t, std::span<const std::size_t> timesteps,
                              const Tensor& embedding) const {
  require(x_t.rank() == 2 && x_t.dim(1) == arch_.data_dim, ErrorKind::Input,
          "denoiser: x_t must be [batch x " + std::to_string(arch_.data_dim) + "], got " +
              numerics::shape_string(x_t.shape()));
  const std::size_t rows = x_t.dim(0);
  require(timesteps.size() == rows, ErrorKind::Input, "denoiser: one timestep per row required");
  std::vector<double> feats;
  feats.reserve(rows * arch_.time_features);
  for (auto t : timesteps) {
    require(t < schedule_.steps(), ErrorKind::Parameter, "denoiser: timestep outside the schedule");
    const auto f = timestep_features(t, arch_.time_features);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  const auto time = Tensor::constant({rows, arch_.time_features}, std::move(feats));
  Tensor emb;
  if (embedding.rank() == 1) {
    require(embedding.dim(0) == arch_.embed_dim, ErrorKind::Input,
            "denoiser: embedding length " + std::to_string(embedding.dim(0)) + " != embed_dim " +
                std::to_string(arch_.embed_dim));
    emb = numerics::repeat_rows(tape, embedding, rows);
  } else {
    require(embedding.rank() == 2 && embedding.dim(0) == rows && embedding.dim(1) == arch_.embed_dim,
            ErrorKind::Input, "denoiser: embedding must be [embed_dim] or [batch x embed_dim]");
    emb = embedding;
  }
  Tensor h = numerics::concat_cols(tape, {x_t, time, emb});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = numerics::add(tape, numerics::matmul(tape, h, layers_[i].weight), layers_[i].bias);
    if (i + 1 < layers_.size()) h = numerics::silu(tape, h);
  }
  return h;
}

std::vector<double> DenoiserModel::predict(std::span<const double> x_t, std::size_t rows, std::size_t t,
                                           std::span<const double> embedding) const {
  require(x_t.size() == rows * arch_.data_dim, ErrorKind::Input, "predict: x_t size mismatch");
  require(embedding.size() == arch_.embed_dim, ErrorKind::Input, "predict: embedding length mismatch");
  require(t < schedule_.steps(), ErrorKind::Parameter, "predict: timestep outside the schedule");
  const auto& K = kernels::active();

  // First layer: the time and embedding columns are shared by every row, so
  // fold them into the bias once.
  const auto& first = layers_.front();
  const std::size_t width0 = first.weight.dim(1);
  const double* w0 = first.weight.values().data();
  std::vector<double> shared(first.bias.values().begin(), first.bias.values().end());
  const auto feats = timestep_features(t, arch_.time_features);
  for (std::size_t j = 0; j < arch_.time_features; ++j)
    K.axpy(feats[j], w0 + (arch_.data_dim + j) * width0, shared.data(), width0);
  for (std::size_t j = 0; j < arch_.embed_dim; ++j)
    K.axpy(embedding[j], w0 + (arch_.data_dim + arch_.time_features + j) * width0, shared.data(), width0);

  std::vector<double> h(rows * width0);
  K.gemm_nn(rows, width0, arch_.data_dim, x_t.data(), w0, h.data(), false);
  for (std::size_t r = 0; r < rows; ++r) K.axpy(1.0, shared.data(), h.data() + r * width0, width0);

  auto activate = [](std::vector<double>& v) {
    for (double& x : v) x = x / (1.0 + std::exp(-x));
  };
  std::size_t width = width0;
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    activate(h);
    const auto& layer = layers_[i];
    const std::size_t out = layer.weight.dim(1);
    std::vector<double> next(rows * out);
    K.gemm_nn(rows, out, width, h.data(), layer.weight.values().data(), next.data(), false);
    const double* b = layer.bias.values().data();
    for (std::size_t r = 0; r < rows; ++r) K.axpy(1.0, b, next.data() + r * out, out);
    h = std::move(next);
    width = out;
  }
  return h;
}

std::vector<Tensor> DenoiserModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.size();
  return n;
}

std::vector<double> DenoiserModel::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& p : parameters()) flat.insert(flat.end(), p.values().begin(), p.values().end());
  return flat;
}

void DenoiserModel::set_flat_parameters(std::span<const double> flat) {
  require(flat.size() == parameter_count(), ErrorKind::Input,
          "parameter vector has " + std::to_string(flat.size()) + " entries, model needs " +
              std::to_string(parameter_count()));
  std::size_t off = 0;
  for (auto p : parameters()) {
    auto dst = p.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      require(std::isfinite(flat[off + i]), ErrorKind::Input, "non-finite parameter value");
      dst[i] = flat[off + i];
    }
    off += dst.size();
  }
}

std::vector<numerics::Shape> DenoiserModel::parameter_shapes() const {
  std::vector<numerics::Shape> shapes;
  for (const auto& p : parameters()) shapes.push_back(p.shape());
  return shapes;
}

bool DenoiserModel::parameters_equal(const DenoiserModel& other) const {
  if (!(arch_ == other.arch_)) return false;
  const auto a = parameters();
  const auto b = other.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto av = a[i].values();
    const auto bv = b[i].values();
    if (!std::equal(av.begin(), av.end(), bv.begin(), bv.end())) return false;
  }
  return true;
}

Tensor denoise_predict(Tape& tape, const DenoiserModel& model, const Tensor& x_t, std::size_t t,
                       const Tensor& concept_embedding) {
  const std::vector<std::size_t> steps(x_t.rank() == 2 ? x_t.dim(0) : 1, t);
  return model.forward(tape, x_t, steps, concept_embedding);
}

}  // namespace eraselab::diffusion
