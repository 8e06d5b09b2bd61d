#include <cmath>

#include "loadfc/kernels.hpp"

namespace loadfc::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double mhat = m[i] / c.correction1;
    const double vhat = v[i] / c.correction2;
    params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace loadfc::kernels::scalar
