#include <arm_neon.h>

#include "probekit/kernels.h"

namespace probekit::kernels {
namespace {

double DotNeon(const double* x, const double* y, size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void AxpyNeon(double a, const double* x, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void WidenNeon(const float* in, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t v = vld1q_f32(in + i);
    vst1q_f64(out + i, vcvt_f64_f32(vget_low_f32(v)));
    vst1q_f64(out + i + 2, vcvt_high_f64_f32(v));
  }
  for (; i < n; ++i) out[i] = static_cast<double>(in[i]);
}

void AxpbyNeon(double a, const double* x, double b, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t vb = vdupq_n_f64(b);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vmulq_f64(vld1q_f64(y + i), vb);
    vst1q_f64(y + i, vfmaq_f64(vy, va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] = a * x[i] + y[i] * b;
}

}  // namespace

namespace detail {
const KernelTable kNeonTable = {DotNeon, AxpyNeon, WidenNeon, AxpbyNeon};
}  // namespace detail

}  // namespace probekit::kernels
