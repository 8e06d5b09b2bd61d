#include <atomic>
#include <cstdlib>
#include <string_view>

#include "loadfc/errors.hpp"
#include "loadfc/kernels.hpp"

namespace loadfc::kernels {

#if defined(LOADFC_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& c);
}  // namespace avx2
#endif
#if defined(LOADFC_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& c);
}  // namespace neon
#endif

namespace {

constexpr KernelTable kScalar{Isa::Scalar, &scalar::dot, &scalar::axpy, &scalar::adam_update};
#if defined(LOADFC_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &avx2::dot, &avx2::axpy, &avx2::adam_update};
#endif
#if defined(LOADFC_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, &neon::dot, &neon::axpy, &neon::adam_update};
#endif

const KernelTable* initial_table() {
  if (const char* env = std::getenv("LOADFC_SIMD")) {
    const std::string_view v(env);
    if (v == "scalar") return &kScalar;
    if (v == "avx2" && available(Isa::Avx2)) return &table(Isa::Avx2);
    if (v == "neon" && available(Isa::Neon)) return &table(Isa::Neon);
  }
  if (available(Isa::Avx2)) return &table(Isa::Avx2);
  if (available(Isa::Neon)) return &table(Isa::Neon);
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(LOADFC_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(LOADFC_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw ConfigError(std::string("kernel variant '") + isa_name(isa) + "' is not available");
  switch (isa) {
#if defined(LOADFC_HAVE_AVX2)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(LOADFC_HAVE_NEON)
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace loadfc::kernels
