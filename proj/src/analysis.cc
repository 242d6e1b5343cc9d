#include "ocrlab/analysis.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "ocrlab/error.h"
#include "ocrlab/rng.h"

namespace ocrlab {

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError, "quantile needs p in (0, 1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double ExpectedMaxNormal(double d) { return d * NormalCdf(d) + NormalPdf(d); }

double PenaltyPi1(double d) {
  return std::numbers::sqrt2 * (ExpectedMaxNormal(d) - 7.0 * d / 8.0);
}

double PenaltyPi2(double d) {
  return (ExpectedMaxNormal(d) - 3.0 * d / 4.0) / std::numbers::sqrt2;
}

ScalarMin MinimizeScalar(const std::function<double(double)>& f, double lo,
                         double hi, double tol) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || !(tol > 0.0)) {
    throw Error(ErrorCode::kBadBracket, "need finite lo < hi and tol > 0");
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

std::vector<ConstantReport> DerivedConstants() {
  std::vector<ConstantReport> out;
  auto add = [&](std::string name, double value, double published,
                 std::string method) {
    out.push_back({std::move(name), value, published, std::abs(value - published),
                   std::move(method)});
  };
  const double b1 = PenaltyPi1(1.152);
  const double b2 = PenaltyPi2(0.674);
  const double p2 = PenaltyPi2(0.913);
  const double p1 = PenaltyPi1(0.913);
  add("penalty_pi1(1.152)", b1, 0.291, "closed form");
  add("penalty_pi2(0.674)", b2, 0.224, "closed form");
  add("penalty_pi2(0.913)", p2, 0.231, "closed form");
  add("penalty_pi1(0.913)", p1, 0.301, "closed form");
  const double a2 = p2 / 2.0;
  const double a1 = p1 / 2.0;
  add("a_pi2", a2, 0.115, "penalty_pi2(0.913)/2");
  add("a_pi1", a1, 0.150, "penalty_pi1(0.913)/2");
  add("margin_pi2", a2 / 2.0 - b2 / 4.0, 0.001, "a/2 - b/4");
  add("margin_pi1", a1 / 2.0 - b1 / 4.0, 0.002, "a/2 - b/4");
  const double se = std::exp(0.5);
  const double c_prime = se / (se - 1.0);
  add("c_prime", c_prime, 2.5415, "sqrt(e)/(sqrt(e)-1)");
  add("inv_c_prime", 1.0 / c_prime, 0.3935, "1 - 1/sqrt(e)");
  add("argmin_penalty_pi1", MinimizeScalar(PenaltyPi1, 0.0, 3.0, 1e-9).argmin,
      1.152, "golden-section");
  add("argmin_penalty_pi2", MinimizeScalar(PenaltyPi2, 0.0, 3.0, 1e-9).argmin,
      0.674, "golden-section");
  for (int k : {2, 4, 6, 8}) {
    const double finite = k * (1.0 - std::pow(1.0 - 1.0 / k, k / 2.0));
    add("tree_bound_k" + std::to_string(k), finite, k / c_prime,
        "k(1-(1-1/k)^(k/2)) vs k/c'");
  }
  return out;
}

double ChernoffMultiplicative(double e_x, double delta, bool two_sided) {
  if (!(e_x > 0.0) || !std::isfinite(e_x) || !(delta >= 0.0) ||
      (two_sided && delta > 1.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::kDomainError,
                two_sided ? "need E[X] > 0 and delta in [0, 1]"
                          : "need E[X] > 0 and delta >= 0");
  }
  if (two_sided) return 2.0 * std::exp(-delta * delta * e_x / 3.0);
  return std::exp(-delta * delta * e_x / (2.0 + delta));
}

std::vector<double> SampleMultiunitZ(int64_t k, int64_t samples, uint64_t seed) {
  if (k < 1 || samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need k >= 1 and samples >= 1");
  }
  const int64_t bits = 2 * k;
  const double scale = std::sqrt(static_cast<double>(k) / 2.0);
  std::vector<double> out(samples);
  for (int64_t s = 0; s < samples; ++s) {
    CounterRng rng(seed, static_cast<uint64_t>(s), Stream::kAux);
    int64_t x = 0;
    int64_t left = bits;
    for (uint64_t w = 0; left > 0; ++w, left -= 64) {
      uint64_t word = rng.U64At(w);
      if (left < 64) word &= (uint64_t{1} << left) - 1;
      x += std::popcount(word);
    }
    out[s] = (static_cast<double>(k) - static_cast<double>(x)) / scale;
  }
  return out;
}

double KsStatisticNormal(std::span<const double> samples) {
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = NormalCdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double KsCriticalValue(int64_t n, double alpha) {
  if (n < 1 || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kDomainError, "need n >= 1 and alpha in (0, 1)");
  }
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace ocrlab
