#include "eraselab/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "eraselab/errors.hpp"
#include "eraselab/numerics/kernels.hpp"

namespace eraselab::numerics {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::shared_ptr<detail::TensorData> make_data(Shape shape, std::vector<double> values,
                                              bool requires_grad) {
  require(!shape.empty(), ErrorKind::Input, "tensor shape must have at least one axis");
  for (std::size_t d : shape) require(d > 0, ErrorKind::Input, "tensor dimensions must be positive");
  require(element_count(shape) == values.size(), ErrorKind::Input,
          "tensor shape " + shape_string(shape) + " does not match " +
              std::to_string(values.size()) + " values");
  require(all_finite(values), ErrorKind::Input, "tensor values must be finite");
  auto data = std::make_shared<detail::TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return data;
}

}  // namespace

// --- Tensor ---------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return wrap(make_data(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return wrap(make_data(std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return wrap(make_data(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return constant({n}, std::move(values));
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorData> data) {
  Tensor t;
  t.data_ = std::move(data);
  return t;
}

detail::TensorData& Tensor::data() const {
  require(data_ != nullptr, ErrorKind::Usage, "use of an undefined tensor");
  return *data_;
}

const Shape& Tensor::shape() const { return data().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  require(axis < rank(), ErrorKind::Input, "axis out of range");
  return shape()[axis];
}

std::size_t Tensor::size() const { return data().values.size(); }

std::span<const double> Tensor::values() const { return data().values; }

double Tensor::item() const {
  require(size() == 1, ErrorKind::Usage, "item() needs a single-element tensor");
  return data().values[0];
}

bool Tensor::requires_grad() const { return data().requires_grad; }
bool Tensor::is_leaf() const { return data().leaf; }
bool Tensor::has_grad() const { return !data().grad.empty(); }
std::span<const double> Tensor::grad() const { return data().grad; }

std::span<double> Tensor::mutable_values() {
  require(is_leaf(), ErrorKind::Usage, "only leaf tensors may be edited in place");
  return data().values;
}

Tensor Tensor::detach() const { return constant(shape(), data().values); }

void accumulate_grad(const Tensor& t, std::span<const double> g) {
  auto& d = t.data();
  if (!d.requires_grad) return;
  if (d.grad.empty()) d.grad.assign(d.values.size(), 0.0);
  kernels::active().axpy(1.0, g.data(), d.grad.data(), g.size());
}

// --- Tape -----------------------------------------------------------------

Tensor Tape::record(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                    BackwardRule rule) {
  require(all_finite(values), ErrorKind::Numeric,
          "non-finite value produced by op with output shape " + shape_string(shape));
  const bool tracked = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
  auto data = make_data(std::move(shape), std::move(values), tracked);
  if (!tracked) return Tensor::wrap(std::move(data));
  data->leaf = false;
  data->producer = this;
  nodes_.push_back(Node{data, std::move(inputs), std::move(rule)});
  return Tensor::wrap(std::move(data));
}

void Tape::backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, ErrorKind::Usage, "backward needs a scalar loss");
  auto& ld = loss.data();
  require(ld.producer == this, ErrorKind::Usage, "loss was not produced on this tape");
  const auto it = std::find_if(nodes_.begin(), nodes_.end(),
                               [&](const Node& n) { return n.output.get() == &ld; });
  require(it != nodes_.end(), ErrorKind::Usage, "loss is not recorded on this tape");

  // Reset every gradient the pass can write so leaves used across earlier
  // passes start from zero, and unreachable leaves report zero.
  for (auto& node : nodes_) {
    node.output->grad.assign(node.output->values.size(), 0.0);
    for (auto& in : node.inputs) {
      auto& d = in.data();
      if (d.requires_grad) d.grad.assign(d.values.size(), 0.0);
    }
  }
  ld.grad[0] = 1.0;

  const auto last = static_cast<std::size_t>(it - nodes_.begin());
  for (std::size_t i = last + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    const auto& g = node.output->grad;
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
    node.rule(*node.output);
  }
  for (auto& node : nodes_) {
    for (auto& in : node.inputs) {
      const auto& d = in.data();
      require(all_finite(d.grad), ErrorKind::Numeric, "non-finite gradient in backward pass");
    }
  }
}

// --- ops ------------------------------------------------------------------

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require(t.rank() == rank, ErrorKind::Input,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
              shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::Input,
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, ErrorKind::Input,
          "matmul: inner dimensions differ " + shape_string(a.shape()) + " * " +
              shape_string(b.shape()));
  std::vector<double> out(m * n);
  kernels::active().gemm_nn(m, n, k, a.values().data(), b.values().data(), out.data(), false);
  return tape.record({m, n}, std::move(out), {a, b}, [a, b, m, n, k](const detail::TensorData& o) {
    const auto& K = kernels::active();
    if (a.requires_grad()) {
      auto& ga = a.data().grad;
      K.gemm_nt(m, n, k, o.grad.data(), b.values().data(), ga.data(), true);
    }
    if (b.requires_grad()) {
      auto& gb = b.data().grad;
      K.gemm_tn(m, n, k, a.values().data(), o.grad.data(), gb.data(), true);
    }
  });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.begin(), av.end());
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return tape.record(a.shape(), std::move(out), {a, b}, [a, b](const detail::TensorData& o) {
      accumulate_grad(a, o.grad);
      accumulate_grad(b, o.grad);
    });
  }
  require(b.rank() == 1 && a.rank() == 2 && b.dim(0) == a.dim(1), ErrorKind::Input,
          "add: cannot broadcast " + shape_string(b.shape()) + " onto " + shape_string(a.shape()));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return tape.record(a.shape(), std::move(out), {a, b},
                     [a, b, rows, cols](const detail::TensorData& o) {
                       accumulate_grad(a, o.grad);
                       if (b.requires_grad()) {
                         auto& gb = b.data().grad;
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) gb[c] += o.grad[r * cols + c];
                       }
                     });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return add(tape, a, scale(tape, b, -1.0)); }

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return tape.record(a.shape(), std::move(out), {a, b}, [a, b](const detail::TensorData& o) {
    const std::size_t n = o.grad.size();
    if (a.requires_grad()) {
      auto& ga = a.data().grad;
      const auto bv = b.values();
      for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto& gb = b.data().grad;
      const auto av = a.values();
      for (std::size_t i = 0; i < n; ++i) gb[i] += o.grad[i] * av[i];
    }
  });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& x : out) x *= factor;
  return tape.record(a.shape(), std::move(out), {a}, [a, factor](const detail::TensorData& o) {
    if (a.requires_grad()) kernels::active().axpy(factor, o.grad.data(), a.data().grad.data(), o.grad.size());
  });
}

Tensor silu(Tape& tape, const Tensor& a) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / (1.0 + std::exp(-av[i]));
  return tape.record(a.shape(), std::move(out), {a}, [a](const detail::TensorData& o) {
    if (!a.requires_grad()) return;
    auto& ga = a.data().grad;
    const auto av = a.values();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-av[i]));
      ga[i] += o.grad[i] * s * (1.0 + av[i] * (1.0 - s));
    }
  });
}

Tensor softmax(Tape& tape, const Tensor& a) {
  require(a.rank() == 1 || a.rank() == 2, ErrorKind::Input, "softmax: rank must be 1 or 2");
  const std::size_t cols = last_dim(a);
  const std::size_t rows = a.size() / cols;
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (y[c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return tape.record(a.shape(), std::move(out), {a}, [a, rows, cols](const detail::TensorData& o) {
    if (!a.requires_grad()) return;
    auto& ga = a.data().grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.values.data() + r * cols;
      const double* gy = o.grad.data() + r * cols;
      double inner = 0.0;
      for (std::size_t c = 0; c < cols; ++c) inner += y[c] * gy[c];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += y[c] * (gy[c] - inner);
    }
  });
}

Tensor mse(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  const double rows = a.rank() == 1 ? 1.0 : static_cast<double>(a.dim(0));
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  return tape.record({1}, {s / rows}, {a, b}, [a, b, rows](const detail::TensorData& o) {
    const double g = 2.0 * o.grad[0] / rows;
    const auto av = a.values();
    const auto bv = b.values();
    if (a.requires_grad()) {
      auto& ga = a.data().grad;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * (av[i] - bv[i]);
    }
    if (b.requires_grad()) {
      auto& gb = b.data().grad;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g * (av[i] - bv[i]);
    }
  });
}

Tensor sum(Tape& tape, const Tensor& a) {
  const auto av = a.values();
  const double s = std::accumulate(av.begin(), av.end(), 0.0);
  return tape.record({1}, {s}, {a}, [a](const detail::TensorData& o) {
    if (!a.requires_grad()) return;
    for (double& g : a.data().grad) g += o.grad[0];
  });
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::Input, "concat_cols: no inputs");
  const std::size_t rows = parts.front().dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    require(p.dim(0) == rows, ErrorKind::Input, "concat_cols: row counts differ");
    total += p.dim(1);
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    const auto pv = p.values();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  return tape.record({rows, total}, std::move(out), parts,
                     [parts, rows, total](const detail::TensorData& o) {
                       std::size_t off = 0;
                       for (const auto& p : parts) {
                         const std::size_t w = p.dim(1);
                         if (p.requires_grad()) {
                           auto& gp = p.data().grad;
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < w; ++c)
                               gp[r * w + c] += o.grad[r * total + off + c];
                         }
                         off += w;
                       }
                     });
}

Tensor repeat_rows(Tape& tape, const Tensor& v, std::size_t rows) {
  require_rank(v, 1, "repeat_rows");
  require(rows > 0, ErrorKind::Input, "repeat_rows: rows must be positive");
  const std::size_t d = v.dim(0);
  std::vector<double> out(rows * d);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.values().data(), d, out.data() + r * d);
  return tape.record({rows, d}, std::move(out), {v}, [v, rows, d](const detail::TensorData& o) {
    if (!v.requires_grad()) return;
    auto& gv = v.data().grad;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < d; ++c) gv[c] += o.grad[r * d + c];
  });
}

Tensor weighted_sum(Tape& tape, const Tensor& weights, const Tensor& table) {
  require_rank(weights, 1, "weighted_sum");
  require_rank(table, 2, "weighted_sum");
  const std::size_t k = weights.dim(0), d = table.dim(1);
  require(table.dim(0) == k, ErrorKind::Input,
          "weighted_sum: " + std::to_string(k) + " weights for " + std::to_string(table.dim(0)) +
              " rows");
  std::vector<double> out(d, 0.0);
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < k; ++i) K.axpy(weights[i], table.values().data() + i * d, out.data(), d);
  return tape.record({d}, std::move(out), {weights, table},
                     [weights, table, k, d](const detail::TensorData& o) {
                       const auto& K = kernels::active();
                       if (weights.requires_grad()) {
                         auto& gw = weights.data().grad;
                         for (std::size_t i = 0; i < k; ++i)
                           gw[i] += K.dot(o.grad.data(), table.values().data() + i * d, d);
                       }
                       if (table.requires_grad()) {
                         auto& gt = table.data().grad;
                         for (std::size_t i = 0; i < k; ++i)
                           K.axpy(weights[i], o.grad.data(), gt.data() + i * d, d);
                       }
                     });
}

namespace {
void check_gumbel_inputs(std::size_t m, double temperature, std::span<const double> noise) {
  require(m >= 1, ErrorKind::Input, "gumbel_softmax: empty logits");
  require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::Parameter,
          "gumbel_softmax: temperature must be positive");
  require(noise.size() == m, ErrorKind::Input, "gumbel_softmax: noise length differs from logits");
  require(all_finite(noise), ErrorKind::Input, "gumbel_softmax: non-finite noise");
}
}  // namespace

Tensor gumbel_softmax(Tape& tape, const Tensor& logits, double temperature,
                      std::span<const double> gumbel_noise) {
  require_rank(logits, 1, "gumbel_softmax");
  check_gumbel_inputs(logits.size(), temperature, gumbel_noise);
  const auto noise = Tensor::constant(logits.shape(), {gumbel_noise.begin(), gumbel_noise.end()});
  return softmax(tape, scale(tape, add(tape, logits, noise), 1.0 / temperature));
}

std::vector<double> gumbel_softmax(std::span<const double> logits, double temperature,
                                   std::span<const double> gumbel_noise) {
  check_gumbel_inputs(logits.size(), temperature, gumbel_noise);
  require(all_finite(logits), ErrorKind::Input, "gumbel_softmax: non-finite logits");
  Tape tape;
  const auto out = gumbel_softmax(tape, Tensor::vector({logits.begin(), logits.end()}),
                                  temperature, gumbel_noise);
  return {out.values().begin(), out.values().end()};
}

}  // namespace eraselab::numerics
