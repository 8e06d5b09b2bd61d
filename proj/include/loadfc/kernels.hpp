#pragma once

#include <cstddef>
#include <string>

// Inner loops of the residual network. Every instruction-set variant has the
// same contract as the scalar reference; the dispatcher picks one per process.

namespace loadfc::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

/// Bias-corrected Adam constants for one step.
struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double correction1;  // 1 - beta1^t
  double correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*adam_update)(double* params, const double* grads, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& c);
}  // namespace scalar

/// True when the variant was compiled in and the CPU supports it.
bool available(Isa isa);
/// Kernel table for a specific variant; throws ConfigError if unavailable.
const KernelTable& table(Isa isa);

/// Process-wide selection. Defaults to the best available variant; the
/// LOADFC_SIMD environment variable (scalar|avx2|neon) overrides it.
const KernelTable& active();
/// Forces a variant (tests, benchmarking). Throws ConfigError if unavailable.
void select(Isa isa);

}  // namespace loadfc::kernels
