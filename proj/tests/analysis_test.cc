#include "ocrlab/analysis.h"

#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "ocrlab/error.h"

namespace ocrlab {
namespace {

double Simpson(const std::function<double(double)>& f, double a, double b) {
  const int n = 20000;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// E[max(d, Z)] = d P(Z < d) + E[Z; Z >= d], each piece by Simpson on a
// smooth integrand.
double ExpectedMaxBySimpson(double d) {
  auto phi = [](double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  return d * Simpson(phi, -12.0, d) +
         Simpson([&](double z) { return z * phi(z); }, d, 12.0);
}

TEST(Normal, ReferenceValues) {
  EXPECT_DOUBLE_EQ(NormalCdf(0.0), 0.5);
  EXPECT_NEAR(NormalCdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(NormalCdf(-1.0), 0.15865525393145707, 1e-15);
  EXPECT_NEAR(NormalPdf(0.0), 0.3989422804014327, 1e-16);
  EXPECT_NEAR(NormalQuantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(NormalQuantile(0.875), 1.1503493803760079, 1e-12);
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.9, 1 - 1e-10}) {
    EXPECT_NEAR(NormalCdf(NormalQuantile(p)), p, 1e-12 * std::max(1.0, p / 1e-3));
  }
  EXPECT_THROW(NormalQuantile(0.0), Error);
  EXPECT_THROW(NormalQuantile(1.0), Error);
}

TEST(Normal, ExpectedMaxAgainstQuadrature) {
  for (double d : {-1.0, 0.0, 0.674, 0.913, 1.152, 2.5}) {
    EXPECT_NEAR(ExpectedMaxNormal(d), ExpectedMaxBySimpson(d), 1e-9) << d;
  }
}

TEST(Penalty, PublishedValues) {
  EXPECT_NEAR(PenaltyPi1(1.152), 0.291, 0.001);
  EXPECT_NEAR(PenaltyPi2(0.674), 0.224, 0.001);
  EXPECT_NEAR(PenaltyPi2(0.913), 0.231, 0.001);
  EXPECT_NEAR(PenaltyPi1(0.913), 0.301, 0.002);
}

TEST(Penalty, MinimizersSolveTheFirstOrderCondition) {
  // d/dd E[max(d, Z)] = Phi(d), so the minimizers are Phi^-1(7/8) and
  // Phi^-1(3/4).
  const ScalarMin m1 = MinimizeScalar(PenaltyPi1, 0.0, 3.0, 1e-10);
  const ScalarMin m2 = MinimizeScalar(PenaltyPi2, 0.0, 3.0, 1e-10);
  EXPECT_NEAR(m1.argmin, 1.1503493803760079, 1e-6);
  EXPECT_NEAR(m2.argmin, 0.6744897501960817, 1e-6);
  // Rounding 1.1503 to 1.152 changes the penalty by under 2e-5.
  EXPECT_LT(std::abs(PenaltyPi1(1.152) - m1.min), 2e-5);
}

TEST(MinimizeScalar, QuadraticAndBadBracket) {
  const ScalarMin m = MinimizeScalar([](double x) { return (x - 2.0) * (x - 2.0) + 1; },
                                     -5.0, 5.0);
  // A flat minimum pins the argmin only to about sqrt(machine epsilon).
  EXPECT_NEAR(m.argmin, 2.0, 1e-7);
  EXPECT_NEAR(m.min, 1.0, 1e-12);
  EXPECT_THROW(MinimizeScalar([](double x) { return x; }, 1.0, 0.0), Error);
  EXPECT_THROW(MinimizeScalar([](double x) { return x; }, 0.0, INFINITY), Error);
}

TEST(DerivedConstants, TableContents) {
  const auto rows = DerivedConstants();
  EXPECT_EQ(rows.size(), 16u);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.abs_err, std::abs(r.value - r.published_value)) << r.name;
  }
  const double se = std::exp(0.5);
  for (const auto& r : rows) {
    if (r.name == "c_prime") EXPECT_NEAR(r.value, se / (se - 1.0), 1e-15);
    if (r.name == "inv_c_prime") EXPECT_NEAR(r.value, 0.3935, 1e-4);
    if (r.name.rfind("tree_bound_k", 0) == 0) EXPECT_GE(r.value, r.published_value);
  }
}

TEST(Chernoff, Formulas) {
  EXPECT_NEAR(ChernoffMultiplicative(30.0, 0.5, true), 2.0 * std::exp(-2.5), 1e-15);
  EXPECT_NEAR(ChernoffMultiplicative(10.0, 2.0, false), std::exp(-10.0), 1e-15);
  EXPECT_THROW(ChernoffMultiplicative(0.0, 0.5, true), Error);
  EXPECT_THROW(ChernoffMultiplicative(1.0, 1.5, true), Error);
  EXPECT_NO_THROW(ChernoffMultiplicative(1.0, 1.5, false));
}

TEST(Ks, CriticalValueAndStatistic) {
  EXPECT_NEAR(KsCriticalValue(100, 0.05), 0.13581, 1e-5);
  const std::vector<double> one = {0.0};
  EXPECT_DOUBLE_EQ(KsStatisticNormal(one), 0.5);
}

TEST(MultiunitZ, ApproximatelyStandardNormal) {
  const auto z = SampleMultiunitZ(5000, 2000, 1);
  double m = 0.0, v = 0.0;
  for (double x : z) m += x;
  m /= z.size();
  for (double x : z) v += (x - m) * (x - m);
  v /= z.size() - 1;
  EXPECT_NEAR(m, 0.0, 5.0 / std::sqrt(2000.0));
  EXPECT_NEAR(v, 1.0, 0.15);
  EXPECT_LT(KsStatisticNormal(z), KsCriticalValue(2000, 0.001));
  EXPECT_EQ(z, SampleMultiunitZ(5000, 2000, 1));
}

}  // namespace
}  // namespace ocrlab
