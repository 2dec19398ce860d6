#pragma once

// Dense double-precision kernels behind the tensor ops and the inference
// path. Every kernel has a portable scalar reference and, on x86-64, an
// AVX2+FMA variant; the active table is chosen once at startup from CPUID
// and can be pinned with ERASELAB_KERNELS=scalar|avx2 or select_backend().
//
// All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>

namespace eraselab::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] (+)= A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  // C[k x n] (+)= A[m x k]^T * B[m x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  // C[m x k] (+)= A[m x n] * B[k x n]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
};

const KernelTable& scalar_table() noexcept;
// Null when the build has no AVX2 translation unit.
const KernelTable* avx2_table() noexcept;

bool cpu_supports(Backend backend) noexcept;

// The table used by every op. Thread-safe after first use.
const KernelTable& active() noexcept;

// Pins the active backend. Throws Error(Parameter) if unsupported on this
// CPU. Intended for tests and benchmarks, not for concurrent use.
void select_backend(Backend backend);

Backend active_backend() noexcept;
std::string_view backend_name(Backend backend) noexcept;

}  // namespace eraselab::kernels
