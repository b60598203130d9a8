#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "probekit/kernels.h"

namespace probekit::kernels {
namespace {

bool CpuSupports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(PROBEKIT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(PROBEKIT_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

Isa DetectIsa() {
  if (const char* env = std::getenv("PROBEKIT_SIMD")) {
    if (std::string(env) == "scalar") return Isa::kScalar;
  }
  if (CpuSupports(Isa::kAvx2)) return Isa::kAvx2;
  if (CpuSupports(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

struct ActiveState {
  std::atomic<Isa> isa;
  std::atomic<const KernelTable*> table;
};

ActiveState& State() {
  static ActiveState state = [] {
    Isa isa = DetectIsa();
    return ActiveState{isa, &TableFor(isa)};
  }();
  return state;
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> AvailableIsas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (CpuSupports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& TableFor(Isa isa) {
  if (!CpuSupports(isa)) {
    throw std::invalid_argument("kernel ISA not available: " +
                                std::string(IsaName(isa)));
  }
  switch (isa) {
#if defined(PROBEKIT_HAVE_AVX2)
    case Isa::kAvx2: return detail::kAvx2Table;
#endif
#if defined(PROBEKIT_HAVE_NEON)
    case Isa::kNeon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

Isa ActiveIsa() { return State().isa.load(std::memory_order_relaxed); }

void SetActiveIsa(Isa isa) {
  const KernelTable& table = TableFor(isa);  // throws if unavailable
  State().table.store(&table, std::memory_order_relaxed);
  State().isa.store(isa, std::memory_order_relaxed);
}

const KernelTable& Active() {
  return *State().table.load(std::memory_order_relaxed);
}

}  // namespace probekit::kernels
