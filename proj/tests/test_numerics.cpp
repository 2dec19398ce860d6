#include "doctest.h"

#include <cmath>
#include <numeric>

#include "eraselab/errors.hpp"
#include "eraselab/numerics/gradcheck.hpp"
#include "eraselab/numerics/kernels.hpp"
#include "eraselab/numerics/optim.hpp"
#include "eraselab/numerics/random.hpp"
#include "eraselab/numerics/tensor.hpp"

using namespace eraselab;
using namespace eraselab::numerics;

namespace {

std::vector<double> randn(Rng& rng, std::size_t n) { return rng.normal_vector(n); }

// Gradient of a scalar built by `build` from one parameter leaf.
ValueAndGradient eval_leaf(const Shape& shape, std::span<const double> x,
                           const std::function<Tensor(Tape&, const Tensor&)>& build) {
  auto p = Tensor::parameter(shape, {x.begin(), x.end()});
  Tape tape;
  auto loss = build(tape, p);
  tape.backward(loss);
  return {loss.item(), {p.grad().begin(), p.grad().end()}};
}

double check_leaf(const Shape& shape, const std::vector<double>& x,
                  const std::function<Tensor(Tape&, const Tensor&)>& build) {
  return finite_difference_check([&](std::span<const double> v) { return eval_leaf(shape, v, build); }, x, 1e-5);
}

long double entropy(const std::vector<double>& p) {
  long double h = 0;
  for (double v : p) h -= v * std::log(static_cast<long double>(v));
  return h;
}

}  // namespace

TEST_CASE("kernels: avx2 table agrees with the scalar reference") {
  const auto* avx = kernels::avx2_table();
  if (!avx || !kernels::cpu_supports(kernels::Backend::Avx2)) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u}) {
    auto a = randn(rng, n), b = randn(rng, n);
    CHECK(avx->dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));
    auto y1 = randn(rng, n);
    auto y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    avx->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-13));
  }
  const std::size_t dims[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 4, 16}, {13, 130, 34}, {64, 128, 128}, {2, 9, 3}};
  for (const auto& d : dims) {
    const std::size_t m = d[0], n = d[1], k = d[2];
    for (bool acc : {false, true}) {
      // nn: A[m x k] B[k x n]
      auto A = randn(rng, m * k), B = randn(rng, k * n), C0 = randn(rng, m * n);
      auto C1 = C0, C2 = C0;
      ref.gemm_nn(m, n, k, A.data(), B.data(), C1.data(), acc);
      avx->gemm_nn(m, n, k, A.data(), B.data(), C2.data(), acc);
      for (std::size_t i = 0; i < C1.size(); ++i) CHECK(C2[i] == doctest::Approx(C1[i]).epsilon(1e-11));
      // tn: A[m x k]^T B[m x n]
      auto At = randn(rng, m * k), Bt = randn(rng, m * n), D0 = randn(rng, k * n);
      auto D1 = D0, D2 = D0;
      ref.gemm_tn(m, n, k, At.data(), Bt.data(), D1.data(), acc);
      avx->gemm_tn(m, n, k, At.data(), Bt.data(), D2.data(), acc);
      for (std::size_t i = 0; i < D1.size(); ++i) CHECK(D2[i] == doctest::Approx(D1[i]).epsilon(1e-11));
      // nt: A[m x n] B[k x n]^T
      auto An = randn(rng, m * n), Bn = randn(rng, k * n), E0 = randn(rng, m * k);
      auto E1 = E0, E2 = E0;
      ref.gemm_nt(m, n, k, An.data(), Bn.data(), E1.data(), acc);
      avx->gemm_nt(m, n, k, An.data(), Bn.data(), E2.data(), acc);
      for (std::size_t i = 0; i < E1.size(); ++i) CHECK(E2[i] == doctest::Approx(E1[i]).epsilon(1e-11));
    }
  }
}

TEST_CASE("kernels: gemm matches a naive triple loop") {
  const auto& K = kernels::active();
  Rng rng(5);
  const std::size_t m = 5, n = 7, k = 3;
  auto A = randn(rng, m * k), B = randn(rng, k * n);
  std::vector<double> C(m * n, 0.0);
  K.gemm_nn(m, n, k, A.data(), B.data(), C.data(), false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(A[i * k + p]) * B[p * n + j];
      CHECK(C[i * n + j] == doctest::Approx(static_cast<double>(s)).epsilon(1e-13));
    }
}

TEST_CASE("kernels: backend selection round-trips") {
  const auto before = kernels::active_backend();
  kernels::select_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  CHECK(std::string(kernels::active().name) == std::string(kernels::scalar_table().name));
  kernels::select_backend(before);
  CHECK(kernels::active_backend() == before);
}

TEST_CASE("gumbel_softmax: symmetric input gives a uniform output") {
  const std::vector<double> l = {0, 0}, g = {0, 0};
  auto p = gumbel_softmax(l, 1.0, g);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gumbel_softmax: low temperature concentrates on the argmax") {
  auto p = gumbel_softmax(std::vector<double>{5, 0, 0}, 0.01, std::vector<double>{0, 0, 0});
  CHECK(p[0] > 0.999);
}

TEST_CASE("gumbel_softmax: matches a direct long-double evaluation") {
  const std::vector<double> l = {1, 2, 3}, g = {0.1, -0.2, 0.05};
  const double gamma = 0.1;
  long double z[3], mx = -1e300L, s = 0;
  for (int i = 0; i < 3; ++i) mx = std::max(mx, z[i] = (static_cast<long double>(l[i]) + g[i]) / gamma);
  for (auto& v : z) s += (v = std::exp(v - mx));
  auto p = gumbel_softmax(l, gamma, g);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(static_cast<double>(z[i] / s)).epsilon(1e-13));
}

TEST_CASE("gumbel_softmax: simplex and temperature-entropy properties") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(9);
    auto l = randn(rng, m);
    auto g = rng.gumbel_vector(m);
    double prev = -1;
    for (double gamma : {0.05, 0.1, 0.5, 1.0, 5.0}) {
      auto p = gumbel_softmax(l, gamma, g);
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (double v : p) CHECK(v > 0.0);
      const double h = static_cast<double>(entropy(p));
      CHECK(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("gumbel_softmax: rejects bad temperature and non-finite input") {
  CHECK_THROWS_AS(gumbel_softmax(std::vector<double>{0, 1}, 0.0, std::vector<double>{0, 0}), Error);
  CHECK_THROWS_AS(gumbel_softmax(std::vector<double>{0, NAN}, 1.0, std::vector<double>{0, 0}), Error);
}

TEST_CASE("backward: linear map and zero gradient at a minimum") {
  auto x = Tensor::parameter({4}, {1, -2, 3, 0.5});
  Tape tape;
  auto s = sum(tape, x);
  tape.backward(s);
  for (double g : x.grad()) CHECK(g == 1.0);

  auto a = Tensor::parameter({2, 3}, {1, 2, 3, 4, 5, 6});
  Tape t2;
  auto l = mse(t2, a, a.detach());
  t2.backward(l);
  for (double g : a.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward: a leaf used twice accumulates both paths") {
  auto x = Tensor::parameter({3}, {1, 2, 3});
  Tape tape;
  auto y = sum(tape, mul(tape, x, x));  // sum x^2
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("backward: unreachable leaves get zero gradient") {
  auto x = Tensor::parameter({2}, {1, 2});
  auto unused = Tensor::parameter({2}, {3, 4});
  Tape tape;
  auto seed = sum(tape, add(tape, unused, unused));
  tape.backward(seed);
  Tape t2;
  auto y = sum(t2, x);
  t2.backward(y);
  CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("backward: loss from another tape is a usage error") {
  auto x = Tensor::parameter({2}, {1, 2});
  Tape a, b;
  auto y = sum(a, x);
  CHECK_THROWS_AS(b.backward(y), Error);
}

TEST_CASE("finite_difference_check: trivial functions") {
  auto sq = [](std::span<const double> v) { return ValueAndGradient{v[0] * v[0], {2 * v[0]}}; };
  CHECK(finite_difference_check(sq, std::vector<double>{3.0}, 1e-5) < 1e-6);
  auto flat = [](std::span<const double> v) { return ValueAndGradient{4.0, std::vector<double>(v.size(), 0.0)}; };
  CHECK(finite_difference_check(flat, std::vector<double>{1, 2, 3}, 1e-5) == 0.0);
  auto bad = [](std::span<const double>) { return ValueAndGradient{NAN, {0.0}}; };
  CHECK_THROWS_AS(finite_difference_check(bad, std::vector<double>{1}, 1e-5), Error);
}

TEST_CASE("primitives: analytic gradients match central differences") {
  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(4), k = 1 + rng.uniform_index(4), n = 1 + rng.uniform_index(4);
    const auto B = Tensor::constant({k, n}, randn(rng, k * n));
    const auto C = Tensor::constant({m, n}, randn(rng, m * n));
    const auto w = Tensor::constant({m, n}, randn(rng, m * n));
    const auto bias = Tensor::constant({n}, randn(rng, n));
    const auto table = Tensor::constant({m, n}, randn(rng, m * n));
    const auto noise = rng.gumbel_vector(m);
    auto X = randn(rng, m * k);
    auto Y = randn(rng, m * n);
    auto v = randn(rng, m);
    auto r = randn(rng, n);
    // Weighted sums keep each output coordinate in play.
    auto weigh = [&](Tape& t, const Tensor& out) { return sum(t, mul(t, out, w)); };
    worst = std::max(worst, check_leaf({m, k}, X, [&](Tape& t, const Tensor& p) { return weigh(t, matmul(t, p, B)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, add(t, p, C)); }));
    worst = std::max(worst, check_leaf({n}, r, [&](Tape& t, const Tensor& p) { return weigh(t, add(t, C, p)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, sub(t, C, p)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, mul(t, p, p)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, scale(t, p, -1.7)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, silu(t, p)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return weigh(t, softmax(t, p)); }));
    worst = std::max(worst, check_leaf({m, n}, Y, [&](Tape& t, const Tensor& p) { return mse(t, p, C); }));
    const auto wide = Tensor::constant({m, k + n}, randn(rng, m * (k + n)));
    worst = std::max(worst, check_leaf({m, k}, X, [&](Tape& t, const Tensor& p) {
      return sum(t, mul(t, concat_cols(t, {p, C}), wide));
    }));
    worst = std::max(worst, check_leaf({n}, r, [&](Tape& t, const Tensor& p) { return weigh(t, repeat_rows(t, p, m)); }));
    worst = std::max(worst, check_leaf({m}, v, [&](Tape& t, const Tensor& p) {
      return sum(t, mul(t, weighted_sum(t, p, table), bias));
    }));
    worst = std::max(worst, check_leaf({m}, v, [&](Tape& t, const Tensor& p) {
      return sum(t, mul(t, weighted_sum(t, gumbel_softmax(t, p, 0.7, noise), table), bias));
    }));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("optimizers: gradient descent and Adam move against the gradient") {
  auto w = Tensor::parameter({2}, {1.0, -1.0});
  GradientDescent gd({w}, 0.1);
  Tape tape;
  tape.backward(sum(tape, mul(tape, w, w)));
  gd.step();
  CHECK(w[0] == doctest::Approx(0.8));
  CHECK(w[1] == doctest::Approx(-0.8));

  auto still = Tensor::parameter({1}, {2.0});
  GradientDescent zero({still}, 0.0);
  Tape t0;
  t0.backward(sum(t0, mul(t0, still, still)));
  zero.step();
  CHECK(still[0] == 2.0);

  auto a = Tensor::parameter({1}, {3.0});
  Adam adam({a}, AdamConfig{0.1});
  for (int i = 0; i < 200; ++i) {
    Tape t;
    t.backward(sum(t, mul(t, a, a)));
    adam.step();
  }
  CHECK(std::abs(a[0]) < 0.1);
  CHECK(adam.steps_taken() == 200);
}

TEST_CASE("rng: substreams are reproducible and distinct") {
  auto a = Rng::substream(7, 1), b = Rng::substream(7, 1), c = Rng::substream(7, 2);
  auto x = a.normal_vector(8), y = b.normal_vector(8), z = c.normal_vector(8);
  CHECK(x == y);
  CHECK(x != z);
  Rng g(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = g.uniform_open();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
