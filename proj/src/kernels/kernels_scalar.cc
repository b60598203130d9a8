#include "probekit/kernels.h"

namespace probekit::kernels {
namespace {

double DotScalar(const double* x, const double* y, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void AxpyScalar(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void WidenScalar(const float* in, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<double>(in[i]);
}

void AxpbyScalar(double a, const double* x, double b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a * x[i] + y[i] * b;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable = {DotScalar, AxpyScalar, WidenScalar,
                                  AxpbyScalar};
}  // namespace detail

}  // namespace probekit::kernels
