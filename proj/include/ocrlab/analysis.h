#ifndef OCRLAB_ANALYSIS_H_
#define OCRLAB_ANALYSIS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ocrlab {

double NormalCdf(double x);
double NormalPdf(double x);
// Inverse of NormalCdf on (0, 1).
double NormalQuantile(double p);

// E[max(d, Z)] for Z ~ N(0, 1), i.e. d * Phi(d) + phi(d).
double ExpectedMaxNormal(double d);

// sqrt(2) * (E[max(d, Z)] - 7d/8): the sqrt(k) loss when pi_1 arrives.
double PenaltyPi1(double d);
// (E[max(d, Z)] - 3d/4) / sqrt(2): the same for pi_2.
double PenaltyPi2(double d);

struct ScalarMin {
  double argmin;
  double min;
};

// Golden-section search for a unimodal f on [lo, hi]. Throws BadBracket
// unless lo < hi, both finite, and tol > 0.
ScalarMin MinimizeScalar(const std::function<double(double)>& f, double lo,
                         double hi, double tol = 1e-9);

struct ConstantReport {
  std::string name;
  double value;
  double published_value;
  double abs_err;
  std::string method;
};

// Every constant behind the multi-unit and tree bounds, with the published
// (rounded) value alongside.
std::vector<ConstantReport> DerivedConstants();

// Two-sided: 2 exp(-delta^2 mu / 3), delta in [0, 1].
// One-sided upper tail: exp(-delta^2 mu / (2 + delta)), delta >= 0.
double ChernoffMultiplicative(double e_x, double delta, bool two_sided);

// Draws Z = (k - X) / sqrt(k / 2) with X ~ Bin(2k, 1/2), the number of
// high c-values in the multi-unit instance.
std::vector<double> SampleMultiunitZ(int64_t k, int64_t samples, uint64_t seed);

// sup |F_n - Phi| of the sample against N(0, 1).
double KsStatisticNormal(std::span<const double> samples);
// Asymptotic critical value sqrt(-ln(alpha / 2) / 2) / sqrt(n).
double KsCriticalValue(int64_t n, double alpha);

}  // namespace ocrlab

#endif  // OCRLAB_ANALYSIS_H_
