// Every available SIMD table against the scalar reference.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "probekit/kernels.h"

namespace probekit::kernels {
namespace {

std::vector<double> RandomVec(std::mt19937_64& rng, size_t n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

class KernelEquivalence : public ::testing::TestWithParam<Isa> {};

TEST_P(KernelEquivalence, DotMatchesScalar) {
  const KernelTable& ref = TableFor(Isa::kScalar);
  const KernelTable& simd = TableFor(GetParam());
  std::mt19937_64 rng(1);
  for (size_t n = 0; n <= 67; ++n) {
    const auto x = RandomVec(rng, n), y = RandomVec(rng, n);
    double scale = 0.0;
    for (size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
    EXPECT_NEAR(simd.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n),
                1e-13 * (scale + 1.0))
        << "n=" << n;
  }
}

TEST_P(KernelEquivalence, AxpyMatchesScalar) {
  const KernelTable& ref = TableFor(Isa::kScalar);
  const KernelTable& simd = TableFor(GetParam());
  std::mt19937_64 rng(2);
  for (size_t n = 0; n <= 67; ++n) {
    const auto x = RandomVec(rng, n);
    auto y1 = RandomVec(rng, n);
    auto y2 = y1;
    ref.axpy(0.75, x.data(), y1.data(), n);
    simd.axpy(0.75, x.data(), y2.data(), n);
    for (size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14 * (1 + std::abs(y1[i])));
  }
}

TEST_P(KernelEquivalence, AxpbyMatchesScalar) {
  const KernelTable& ref = TableFor(Isa::kScalar);
  const KernelTable& simd = TableFor(GetParam());
  std::mt19937_64 rng(3);
  for (size_t n = 0; n <= 67; ++n) {
    const auto x = RandomVec(rng, n);
    auto y1 = RandomVec(rng, n);
    auto y2 = y1;
    ref.axpby(-1.5, x.data(), 0.25, y1.data(), n);
    simd.axpby(-1.5, x.data(), 0.25, y2.data(), n);
    for (size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14 * (1 + std::abs(y1[i])));
  }
}

TEST_P(KernelEquivalence, WidenIsExact) {
  const KernelTable& simd = TableFor(GetParam());
  std::mt19937_64 rng(4);
  std::normal_distribution<float> d(0.0f, 10.0f);
  for (size_t n = 0; n <= 67; ++n) {
    std::vector<float> in(n);
    for (float& v : in) v = d(rng);
    std::vector<double> out(n, -1.0);
    simd.widen(in.data(), out.data(), n);
    for (size_t i = 0; i < n; ++i) EXPECT_EQ(out[i], static_cast<double>(in[i]));
  }
}

INSTANTIATE_TEST_SUITE_P(AllIsas, KernelEquivalence, ::testing::ValuesIn(AvailableIsas()),
                         [](const auto& info) { return std::string(IsaName(info.param)); });

TEST(KernelDispatch, ScalarAlwaysAvailable) {
  const auto isas = AvailableIsas();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::kScalar);
}

TEST(KernelDispatch, SetActiveSwitchesTable) {
  const Isa before = ActiveIsa();
  SetActiveIsa(Isa::kScalar);
  EXPECT_EQ(ActiveIsa(), Isa::kScalar);
  EXPECT_EQ(&Active(), &TableFor(Isa::kScalar));
  SetActiveIsa(before);
  EXPECT_EQ(ActiveIsa(), before);
}

TEST(KernelDispatch, UnavailableIsaThrows) {
  const auto isas = AvailableIsas();
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (std::find(isas.begin(), isas.end(), isa) == isas.end()) {
      EXPECT_THROW(TableFor(isa), std::exception);
    }
  }
}

TEST(KernelSpans, WrappersUseActiveTable) {
  std::vector<double> x = {1, 2, 3}, y = {4, 5, 6};
  EXPECT_DOUBLE_EQ(Dot(x, y), 32.0);
  Axpy(2.0, x, y);
  EXPECT_EQ(y, (std::vector<double>{6, 9, 12}));
}

}  // namespace
}  // namespace probekit::kernels
