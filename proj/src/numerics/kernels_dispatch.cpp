#include "eraselab/errors.hpp"
#include "eraselab/numerics/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace eraselab::kernels {

#if !defined(ERASELAB_HAVE_AVX2)
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

namespace {

Backend detect() noexcept {
  if (const char* env = std::getenv("ERASELAB_KERNELS")) {
    const std::string_view choice(env);
    if (choice == "scalar") return Backend::Scalar;
    if (choice == "avx2" && cpu_supports(Backend::Avx2)) return Backend::Avx2;
  }
  return cpu_supports(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

const KernelTable* table_for(Backend backend) noexcept {
  return backend == Backend::Avx2 ? avx2_table() : &scalar_table();
}

struct State {
  std::atomic<Backend> backend{detect()};
  std::atomic<const KernelTable*> table{table_for(backend.load())};
};

State& state() noexcept {
  static State s;
  return s;
}

}  // namespace

bool cpu_supports(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(ERASELAB_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& active() noexcept { return *state().table.load(std::memory_order_acquire); }

void select_backend(Backend backend) {
  require(cpu_supports(backend), ErrorKind::Parameter,
          "kernel backend '" + std::string(backend_name(backend)) + "' is not supported on this CPU");
  state().backend.store(backend);
  state().table.store(table_for(backend), std::memory_order_release);
}

Backend active_backend() noexcept { return state().backend.load(); }

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace eraselab::kernels
