// Acceptance runner: `acceptance --criterion N` prints one line per check
// and a final PASS/FAIL line for the criterion; the exit status follows it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "micro.h"
#include "nlohmann/json.hpp"
#include "ocrlab/analysis.h"
#include "ocrlab/constructions.h"
#include "ocrlab/error.h"
#include "ocrlab/montecarlo.h"
#include "ocrlab/policies.h"
#include "ocrlab/solvers.h"

namespace ocrlab {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

class Checker {
 public:
  bool Check(bool ok, const std::string& what) {
    std::printf("  [%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    all_ = all_ && ok;
    return ok;
  }
  bool all() const { return all_; }

 private:
  bool all_ = true;
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<WeightedOrder> OrdersOf(const Instance& instance) {
  auto f = instance.orders().finite();
  if (f.empty()) return {{IdentityOrder(instance.size()), 1.0}};
  return {f.begin(), f.end()};
}

// ---------------------------------------------------------------------------

bool Criterion1(Checker& c) {
  const auto t0 = Clock::now();
  const auto rows = DerivedConstants();
  auto get = [&](const std::string& name) {
    for (const auto& r : rows) {
      if (r.name == name) return r.value;
    }
    throw std::runtime_error("missing constant " + name);
  };
  auto near = [&](const std::string& name, double target, double tol) {
    const double v = get(name);
    c.Check(std::abs(v - target) <= tol,
            Fmt("%s = %.6f in %.4f +- %g", name.c_str(), v, target, tol));
  };
  near("penalty_pi1(1.152)", 0.291, 0.001);
  near("penalty_pi2(0.674)", 0.224, 0.001);
  near("penalty_pi2(0.913)", 0.231, 0.001);
  near("penalty_pi1(0.913)", 0.301, 0.002);
  const double m2 = get("margin_pi2");
  const double m1 = get("margin_pi1");
  c.Check(m2 >= 0.001, Fmt("margin_pi2 = %.6f >= 0.001", m2));
  c.Check(m1 >= 0.002, Fmt("margin_pi1 = %.6f >= 0.002", m1));
  near("inv_c_prime", 0.3935, 1e-4);
  const double s = Seconds(t0);
  c.Check(s < 1.0, Fmt("runtime %.3f s < 1 s", s));
  return c.all();
}

// ---------------------------------------------------------------------------

constexpr int kMultiunitK = 10000;
constexpr int64_t kMultiunitTrials = 20000;
constexpr uint64_t kMultiunitSeed = 20251016;

struct MultiunitRun {
  json report;
  bool pass = true;
};

// The multi-unit experiment. The report holds only seed-determined numbers,
// so runs with different worker counts must serialize identically.
MultiunitRun RunMultiunit(int workers, Checker* c) {
  auto check = [&](bool ok, const std::string& what) {
    if (c) c->Check(ok, what);
    return ok;
  };
  MultiunitRun run;
  const int k = kMultiunitK;
  const double sk = std::sqrt(static_cast<double>(k));
  const Instance instance = BuildMultiunitInstance(k);
  const auto orders = OrdersOf(instance);
  const SimulateOptions options{workers, 0};

  struct Aware {
    const char* spec;
    int order;
    double c;
  };
  const Aware aware[] = {{"multiunit_threshold:d=1.152,variant=pi1", 0, 0.295},
                         {"multiunit_threshold:d=0.674,variant=pi2", 1, 0.228}};
  std::vector<EvalReport> refs;
  json aware_json = json::array();
  for (const Aware& a : aware) {
    const EvalReport r =
        Simulate(*MakePolicy(a.spec), instance,
                 OrderSource::Fixed(orders[a.order].order), kMultiunitTrials,
                 kMultiunitSeed, options)
            .report;
    refs.push_back(r);
    const double bound = 2.0 * k - a.c * sk;
    run.pass &= check(r.mean >= bound,
                      Fmt("%s on pi_%d: mean %.3f >= 2k - %.3f sqrt(k) = %.3f",
                          a.spec, a.order + 1, r.mean, a.c, bound));
    run.pass &= check(r.half_width() < 0.02 * sk,
                      Fmt("  CI half-width %.4f < 0.02 sqrt(k) = %.4f",
                          r.half_width(), 0.02 * sk));
    aware_json.push_back({{"policy", a.spec},
                          {"order", a.order},
                          {"mean", r.mean},
                          {"std_error", r.std_error},
                          {"ci", {r.ci_lo, r.ci_hi}}});
  }

  const double cap = 1.0 - 0.0005 / sk;
  json unaware_json = json::array();
  for (double d : {0.0, 0.913, 1.152}) {
    const std::string spec =
        Fmt("multiunit_threshold:d=%g,variant=unaware", d);
    const RatioEstimate est =
        EstimateRatioAgainst(*MakePolicy(spec), instance, orders, refs,
                             kMultiunitTrials, kMultiunitSeed, options);
    run.pass &= check(est.denominator_is_lower_bound,
                      "  denominators flagged as reference-policy means");
    run.pass &= check(
        est.min_ratio <= cap,
        Fmt("%s: min ratio %.6f (pi_1 %.6f, pi_2 %.6f) <= 1 - 0.0005/sqrt(k) = "
            "%.6f",
            spec.c_str(), est.min_ratio, est.per_order[0].ratio,
            est.per_order[1].ratio, cap));
    json per = json::array();
    for (const auto& o : est.per_order) {
      per.push_back({{"mean", o.numerator.mean},
                     {"ratio", o.ratio},
                     {"ratio_ci", {o.ratio_ci.lo, o.ratio_ci.hi}}});
    }
    unaware_json.push_back({{"policy", spec},
                            {"per_order", std::move(per)},
                            {"min_ratio", est.min_ratio},
                            {"argmin", est.argmin}});
  }
  run.report = {
      {"meta",
       {{"version", OCRLAB_VERSION},
        {"git_describe", OCRLAB_GIT_DESCRIBE},
        {"seed", kMultiunitSeed},
        {"config", {{"k", k}, {"trials", kMultiunitTrials}}}}},
      {"aware", std::move(aware_json)},
      {"unaware", std::move(unaware_json)},
      {"caveat",
       "ratios use reference aware policy means as denominators; they bound "
       "the aware optimum from below"}};
  return run;
}

bool Criterion2(Checker& c) {
  const auto t0 = Clock::now();
  RunMultiunit(1, &c);
  const double s = Seconds(t0);
  c.Check(s < 300.0, Fmt("runtime %.1f s < 300 s (single worker)", s));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion3(Checker& c) {
  const auto t0 = Clock::now();
  const Instance instance = BuildTreeInstance(4);
  constexpr int64_t kTrials = 100000;
  constexpr uint64_t kSeed = 3;
  const OrderSource dist = OrderSource::FromInstance(instance);

  const EvalReport aware =
      Simulate(*TreeAwarePolicy(), instance, dist, kTrials, kSeed).report;
  c.Check(aware.mean >= 1.75 - aware.half_width(),
          Fmt("tree_aware mean %.4f >= 1.75 - %.4f", aware.mean,
              aware.half_width()));

  std::vector<PolicyFactoryPtr> unaware;
  for (int l = 0; l <= 4; ++l) unaware.push_back(TreeGamblePolicy(l));
  unaware.push_back(GreedyPolicy());
  for (const auto& f : unaware) {
    const EvalReport r = Simulate(*f, instance, dist, kTrials, kSeed).report;
    c.Check(r.mean <= 5.0 + r.half_width(),
            Fmt("%s mean %.4f <= 5 + %.4f", f->name().c_str(), r.mean,
                r.half_width()));
  }

  // Per-order ratios on sampled orders against the exact aware optimum.
  constexpr int kOrders = 16;
  constexpr int64_t kPerOrder = 2000;
  double aware_min = INFINITY;
  std::vector<double> unaware_min(unaware.size(), INFINITY);
  for (int m = 0; m < kOrders; ++m) {
    const TreeOrderRealization real =
        SampleTreeOrder(instance, CounterRng(kSeed, m, Stream::kOrder));
    const double opt = OptAwareTreeExact(instance, real.order).value;
    const OrderSource fixed = OrderSource::Fixed(real);
    const double a =
        Simulate(*TreeAwarePolicy(), instance, fixed, kPerOrder, kSeed + 1 + m)
            .report.mean;
    aware_min = std::min(aware_min, a / opt);
    for (size_t p = 0; p < unaware.size(); ++p) {
      const double u =
          Simulate(*unaware[p], instance, fixed, kPerOrder, kSeed + 1 + m)
              .report.mean;
      unaware_min[p] = std::min(unaware_min[p], u / opt);
    }
  }
  size_t best = 0;
  for (size_t p = 0; p < unaware.size(); ++p) {
    std::printf("  min ratio over %d orders: %s %.4f\n", kOrders,
                unaware[p]->name().c_str(), unaware_min[p]);
    if (unaware_min[p] > unaware_min[best]) best = p;
  }
  c.Check(unaware_min[best] <= 0.9 * aware_min,
          Fmt("best unaware (%s) min ratio %.4f <= 0.9 x tree_aware min ratio "
              "%.4f = %.4f",
              unaware[best]->name().c_str(), unaware_min[best], aware_min,
              0.9 * aware_min));
  const double s = Seconds(t0);
  c.Check(s < 120.0, Fmt("runtime %.1f s < 120 s", s));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion4(Checker& c) {
  const auto t0 = Clock::now();
  // Four disjoint U-sets of size 3 need k3 >= 12.
  const NestedScaledParams params{2, 8, 12, 3, 0.1};
  const Instance instance = BuildNestedInstance(params, 1);
  c.Check(instance.meta("u_layout") == "disjoint",
          "U-sets laid out as disjoint blocks (k1=2, k2=8, k3=12, |U|=3)");
  const auto orders = OrdersOf(instance);
  SolverLimits limits;
  limits.max_elements_aware = instance.size();
  limits.max_elements_unaware = instance.size();
  const double target = 1.0 - std::pow(0.9, 8);
  for (size_t i = 0; i < orders.size(); ++i) {
    const double v = EvaluatePolicyExact(*NestedAwarePolicy(), instance,
                                         orders[i].order, nullptr, 0, limits);
    c.Check(std::abs(v - target) <= 1e-9,
            Fmt("nested_aware on pi_%zu = %.12f vs 1 - 0.9^8 = %.12f", i, v,
                target));
    const double opt = OptAwareExact(instance, orders[i].order, limits).value;
    c.Check(std::abs(opt - target) <= 1e-9,
            Fmt("  opt_aware_exact on pi_%zu = %.12f", i, opt));
  }
  const UnawareResult u = OptUnawareExact(instance, orders, limits);
  const double cap = 0.25 * target + 0.75 * 0.1;
  c.Check(u.total.value <= cap + 1e-9,
          Fmt("opt_unaware_exact = %.12f <= (1/4)(1-0.9^8) + (3/4)(0.1) = %.12f",
              u.total.value, cap));
  const double ratio = u.total.value / target;
  c.Check(ratio <= 0.45, Fmt("unaware/aware = %.6f <= 0.45", ratio));
  const double s = Seconds(t0);
  c.Check(s < 60.0, Fmt("runtime %.1f s < 60 s", s));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion5(Checker& c) {
  const auto t0 = Clock::now();
  constexpr int kInstances = 100;
  double worst_aware = 0.0;
  double worst_unaware = 0.0;
  int bad = 0;
  for (int i = 0; i < kInstances; ++i) {
    const Instance inst = testing::RandomMicroInstance(5, i, 5, 2);
    const auto orders = OrdersOf(inst);
    for (const WeightedOrder& w : orders) {
      const WeightedOrder one{w.order, 1.0};
      const double a = OptAwareExact(inst, w.order).value;
      const double e = ExhaustivePolicySearch(inst, {&one, 1});
      worst_aware = std::max(worst_aware, std::abs(a - e));
      bad += std::abs(a - e) > 1e-9;
    }
    const double u = OptUnawareExact(inst, orders).total.value;
    const double e = ExhaustivePolicySearch(inst, orders);
    worst_unaware = std::max(worst_unaware, std::abs(u - e));
    bad += std::abs(u - e) > 1e-9;
  }
  c.Check(worst_aware <= 1e-9,
          Fmt("opt_aware_exact vs exhaustive: max |diff| %.3g over %d "
              "instances",
              worst_aware, kInstances));
  c.Check(worst_unaware <= 1e-9,
          Fmt("opt_unaware_exact vs exhaustive: max |diff| %.3g", worst_unaware));
  c.Check(bad == 0, Fmt("%d disagreements", bad));
  const double s = Seconds(t0);
  c.Check(s < 120.0, Fmt("runtime %.1f s < 120 s", s));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion6(Checker& c) {
  const auto t0 = Clock::now();
  // n = 2^16: log2 n = 16, sizes in [16, 336], pairwise overlap <= 10,
  // membership <= 2 * 11 * 2^k1 * 16 / k3.
  UFamily base;
  base.n = 65536;
  base.alpha = 10;
  base.k1 = 1;
  base.k3 = 64;
  std::vector<int> s0, s1;
  for (int x = 0; x < 16; ++x) s0.push_back(x);
  for (int x = 16; x < 32; ++x) s1.push_back(x);
  base.sets = {s0, s1};
  c.Check(VerifyUFamily(base).ok(), "well-formed family passes");

  {
    UFamily f = base;
    f.sets[1].resize(15);
    const auto r = VerifyUFamily(f);
    c.Check(!r.size_ok && r.size_witness && r.size_witness->set == 1 &&
                r.size_witness->size == 15,
            "undersized set flagged with witness (set 1, size 15)");
  }
  {
    UFamily f = base;
    f.k3 = 640;
    f.sets[0].clear();
    for (int x = 0; x < 337; ++x) f.sets[0].push_back(x);
    for (int& x : f.sets[1]) x += 400;
    const auto r = VerifyUFamily(f);
    c.Check(!r.size_ok && r.size_witness && r.size_witness->set == 0 &&
                r.size_witness->size == 337,
            "oversized set flagged with witness (set 0, size 337)");
  }
  {
    // Cap is 2 * 11 * 2 * 16 / 640 = 1.1, so element 0 in two sets violates.
    UFamily f = base;
    f.k3 = 640;
    f.sets[1] = {0};
    for (int x = 201; x < 216; ++x) f.sets[1].push_back(x);
    const auto r = VerifyUFamily(f);
    c.Check(!r.membership_ok && r.membership_witness &&
                r.membership_witness->element == 0 &&
                r.membership_witness->count == 2,
            "over-used element flagged with witness (element 0, count 2)");
  }
  {
    UFamily f = base;
    for (int x = 0; x < 11; ++x) f.sets[1][x] = x;
    std::sort(f.sets[1].begin(), f.sets[1].end());
    const auto r = VerifyUFamily(f);
    c.Check(!r.intersection_ok && r.intersection_witness &&
                r.intersection_witness->first == 0 &&
                r.intersection_witness->second == 1 &&
                r.intersection_witness->size == 11,
            "large intersection flagged with witness (0, 1, size 11)");
  }
  {
    UFamily f = base;
    f.sets.push_back(s1);
    const auto r = VerifyUFamily(f);
    c.Check(!r.distinct_ok && r.duplicate_witness &&
                r.duplicate_witness->first == 1 &&
                r.duplicate_witness->second == 2,
            "duplicate set flagged with witness (1, 2)");
  }

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    try {
      const UFamily f = BuildUFamily(65536, 10, 4, 64,
                                     CounterRng(seed, 0, Stream::kConstruction));
      c.Check(VerifyUFamily(f).ok(),
              Fmt("build_u_family seed %llu: %d attempts",
                  static_cast<unsigned long long>(seed), f.attempts));
    } catch (const Error& e) {
      c.Check(false, Fmt("build_u_family seed %llu: %s",
                         static_cast<unsigned long long>(seed), e.what()));
    }
  }
  const double s = Seconds(t0);
  c.Check(s < 60.0, Fmt("runtime %.1f s < 60 s", s));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion7(Checker& c) {
  constexpr int kInstances = 50;
  constexpr double kSlack = 1e-9;
  const std::vector<PolicyFactoryPtr> policies = {
      GreedyPolicy(), AlwaysSelectPolicy(), AlwaysDiscardPolicy()};
  int violations = 0;
  int ratio_checks = 0;
  for (int i = 0; i < kInstances; ++i) {
    const Instance inst = testing::RandomMicroInstance(7, i, 5, 2);
    const auto orders = OrdersOf(inst);
    const double prophet = ProphetExact(inst).value;
    double aware_mix = 0.0;
    for (const WeightedOrder& w : orders) {
      const double a = OptAwareExact(inst, w.order).value;
      aware_mix += w.weight * a;
      violations += prophet < a - kSlack;
    }
    const double unaware = OptUnawareExact(inst, orders).total.value;
    violations += aware_mix < unaware - kSlack;
    double best = 0.0;
    for (const auto& p : policies) {
      double v = 0.0;
      for (const WeightedOrder& w : orders) {
        v += w.weight * EvaluatePolicyExact(*p, inst, w.order);
      }
      best = std::max(best, v);
      try {
        const RatioReport r = RatioExact(inst, orders, *p);
        ++ratio_checks;
        violations += r.xi > r.min_ratio + kSlack;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDivisionByZeroOpt) throw;
      }
    }
    violations += unaware < best - kSlack;
  }
  c.Check(violations == 0,
          Fmt("prophet >= opt_aware >= opt_unaware >= best policy on %d "
              "instances: %d violations",
              kInstances, violations));
  c.Check(ratio_checks > 0,
          Fmt("xi <= rho checked for %d (instance, policy) pairs", ratio_checks));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion8(Checker& c) {
  const Instance pairs = BuildPairsInstance(3);
  const double aware = OptAwareExact(pairs, IdentityOrder(pairs.size())).value;
  c.Check(std::abs(aware - 1.0 / 6.0) <= 1e-9,
          Fmt("pairs k=3 aware value %.12f = 1/6", aware));
  const double prophet = ProphetExact(pairs).value;
  c.Check(std::abs(prophet - 0.4213) <= 5e-5,
          Fmt("pairs k=3 prophet %.6f ~ 0.4213", prophet));

  const Instance part = BuildPartitionInstance(4, 4, 0.25);
  const double online = OptAwareExact(part, IdentityOrder(part.size())).value;
  c.Check(online <= 2.0 + 1e-9,
          Fmt("partition (4 x 4, p=1/4) best online %.6f <= 2", online));
  const double pp = ProphetExact(part).value;
  c.Check(pp >= 2.28, Fmt("partition prophet %.6f >= 2.28", pp));
  return c.all();
}

// ---------------------------------------------------------------------------

bool Criterion9(Checker& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (int workers : {1, 8}) {
    const auto t0 = Clock::now();
    const MultiunitRun run = RunMultiunit(workers, nullptr);
    const std::string path = dir + Fmt("/multiunit_workers%d.json", workers);
    std::ofstream(path, std::ios::binary) << run.report.dump(2) << "\n";
    std::printf("  wrote %s (%.1f s)\n", path.c_str(), Seconds(t0));
    paths.push_back(path);
  }
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = slurp(paths[0]);
  const std::string b = slurp(paths[1]);
  c.Check(!a.empty() && a == b,
          Fmt("reports for workers 1 and 8 are byte-identical (%zu bytes)",
              a.size()));
  return c.all();
}

}  // namespace
}  // namespace ocrlab

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int criterion = 0;
  std::string dir =
      (std::filesystem::temp_directory_path() / "ocrlab_acceptance").string();
  app.add_option("--criterion", criterion)->required()->check(CLI::Range(1, 9));
  app.add_option("--report-dir", dir);
  CLI11_PARSE(app, argc, argv);

  ocrlab::Checker c;
  bool ok = false;
  try {
    switch (criterion) {
      case 1: ok = ocrlab::Criterion1(c); break;
      case 2: ok = ocrlab::Criterion2(c); break;
      case 3: ok = ocrlab::Criterion3(c); break;
      case 4: ok = ocrlab::Criterion4(c); break;
      case 5: ok = ocrlab::Criterion5(c); break;
      case 6: ok = ocrlab::Criterion6(c); break;
      case 7: ok = ocrlab::Criterion7(c); break;
      case 8: ok = ocrlab::Criterion8(c); break;
      case 9: ok = ocrlab::Criterion9(c, dir); break;
    }
  } catch (const std::exception& e) {
    std::printf("  [FAIL] exception: %s\n", e.what());
    ok = false;
  }
  std::printf("criterion %d: %s\n", criterion, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}
