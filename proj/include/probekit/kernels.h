#ifndef PROBEKIT_KERNELS_H_
#define PROBEKIT_KERNELS_H_

// Inner-loop arithmetic used by every layer in nncore. Each kernel has a
// portable scalar reference and, where the build target allows it, an
// AVX2/FMA or NEON variant. The active variant is picked once at startup from
// CPU features; PROBEKIT_SIMD=scalar in the environment forces the reference.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace probekit::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view IsaName(Isa isa);

struct KernelTable {
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, size_t n);
  // out[i] = double(in[i])
  void (*widen)(const float* in, double* out, size_t n);
  // y[i] = a * x[i] + y[i] * b
  void (*axpby)(double a, const double* x, double b, double* y, size_t n);
};

// Kernel tables compiled into this binary whose ISA the running CPU supports.
std::vector<Isa> AvailableIsas();
const KernelTable& TableFor(Isa isa);

Isa ActiveIsa();
// Switches the process-wide kernel table. Throws if `isa` is unavailable.
void SetActiveIsa(Isa isa);

const KernelTable& Active();

inline double Dot(std::span<const double> x, std::span<const double> y) {
  return Active().dot(x.data(), y.data(), x.size());
}
inline void Axpy(double a, std::span<const double> x, std::span<double> y) {
  Active().axpy(a, x.data(), y.data(), x.size());
}
inline void Widen(std::span<const float> in, std::span<double> out) {
  Active().widen(in.data(), out.data(), in.size());
}
inline void Axpby(double a, std::span<const double> x, double b,
                  std::span<double> y) {
  Active().axpby(a, x.data(), b, y.data(), x.size());
}

namespace detail {
extern const KernelTable kScalarTable;
extern const KernelTable kAvx2Table;
extern const KernelTable kNeonTable;
}  // namespace detail

}  // namespace probekit::kernels

#endif  // PROBEKIT_KERNELS_H_
