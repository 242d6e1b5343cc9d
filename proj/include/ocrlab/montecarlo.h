#ifndef OCRLAB_MONTECARLO_H_
#define OCRLAB_MONTECARLO_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ocrlab/constructions.h"
#include "ocrlab/core.h"
#include "ocrlab/policies.h"

namespace ocrlab {

struct EvalReport {
  double mean = 0.0;
  double std_error = 0.0;  // sample stddev / sqrt(trials)
  double ci_lo = 0.0;      // mean - 1.96 std_error
  double ci_hi = 0.0;
  int64_t trials = 0;
  uint64_t seed = 0;

  double half_width() const { return 0.5 * (ci_hi - ci_lo); }
};

// Where each trial's arrival order comes from.
class OrderSource {
 public:
  // One order for every trial; `good` labels are passed to aware policies.
  static OrderSource Fixed(ArrivalOrder order,
                           std::optional<std::vector<char>> good = {});
  static OrderSource Fixed(TreeOrderRealization realization);
  // The instance's own distribution: finite (drawn by weight) or the tree
  // generator. An instance without orders uses the identity order.
  static OrderSource FromInstance(const Instance& instance);

  struct Draw {
    const ArrivalOrder* order;
    const std::vector<char>* good;
  };
  // `scratch` holds a drawn tree realization when needed.
  Draw Sample(uint64_t seed, uint64_t trial,
              TreeOrderRealization& scratch) const;

 private:
  enum class Kind { kFixed, kFinite, kTree };
  Kind kind_ = Kind::kFixed;
  ArrivalOrder fixed_;
  std::optional<std::vector<char>> good_;
  std::vector<ArrivalOrder> finite_;
  std::vector<double> cumulative_;
  const TreePathOracle* tree_ = nullptr;
};

struct SimulateOptions {
  // <= 0 means all available cores.
  int workers = 0;
  // Keep the traces of the first min(trace_dump, 1000) trials.
  int trace_dump = 0;
};

struct SimulationResult {
  EvalReport report;
  std::vector<Trace> traces;
};

// Trials run concurrently in fixed blocks; block statistics are merged in
// trial-index order, so the report does not depend on the worker count.
// Trial t draws its order, values and policy randomness from the streams
// (seed, t, kOrder | kValues | kPolicy).
SimulationResult Simulate(const PolicyFactory& factory, const Instance& instance,
                          const OrderSource& orders, int64_t trials,
                          uint64_t seed, const SimulateOptions& options = {});
// Single-threaded reference with identical results.
SimulationResult SimulateSerial(const PolicyFactory& factory,
                                const Instance& instance,
                                const OrderSource& orders, int64_t trials,
                                uint64_t seed,
                                const SimulateOptions& options = {});

// Mean and CI from raw samples (the same formulas Simulate uses).
EvalReport Summarize(std::span<const double> samples, uint64_t seed = 0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Conservative quotient interval for num / den with den > 0.
Interval QuotientInterval(Interval num, Interval den);

struct OrderRatioEstimate {
  EvalReport numerator;
  // Exact OPT (lo == hi) or a reference policy's CI.
  double denominator = 0.0;
  Interval denominator_ci;
  double ratio = 0.0;
  Interval ratio_ci;
};

struct RatioEstimate {
  std::vector<OrderRatioEstimate> per_order;
  double min_ratio = 0.0;
  Interval min_ratio_ci;
  int argmin = 0;
  // True when denominators come from reference policies: they only bound
  // OPT from below, so the ratios are upper estimates.
  bool denominator_is_lower_bound = false;
};

// Per-order ratio of `factory` against either the exact aware optimum
// (`references` empty) or one reference aware policy per order. All runs
// share the seed, so numerator and denominator see the same values.
RatioEstimate EstimateRatio(const PolicyFactory& factory,
                            const Instance& instance,
                            std::span<const WeightedOrder> orders,
                            std::span<const PolicyFactoryPtr> references,
                            int64_t trials, uint64_t seed,
                            const SimulateOptions& options = {});
// Against already simulated reference reports, one per order.
RatioEstimate EstimateRatioAgainst(const PolicyFactory& factory,
                                   const Instance& instance,
                                   std::span<const WeightedOrder> orders,
                                   std::span<const EvalReport> references,
                                   int64_t trials, uint64_t seed,
                                   const SimulateOptions& options = {});

}  // namespace ocrlab

#endif  // OCRLAB_MONTECARLO_H_
