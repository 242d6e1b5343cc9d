#ifndef OCRLAB_SOLVERS_H_
#define OCRLAB_SOLVERS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocrlab/core.h"
#include "ocrlab/policies.h"

namespace ocrlab {

struct SolverLimits {
  int max_elements_aware = 20;
  int max_elements_unaware = 10;
  int max_orders = 64;
  // Memo entries for the DPs; value realizations for enumeration.
  int64_t max_states = int64_t{1} << 24;
};

struct SolveResult {
  double value = 0.0;
  int64_t states_expanded = 0;
  double wall_time_ms = 0.0;
};

// Best order-aware online value for a fixed order: backward induction over
// (position, selected set). Throws TooLarge beyond the limits.
SolveResult OptAwareExact(const Instance& instance, const ArrivalOrder& order,
                          const SolverLimits& limits = {});
// The same recursion without memoization; for cross-checking only.
SolveResult OptAwareExactNoMemo(const Instance& instance,
                                const ArrivalOrder& order,
                                const SolverLimits& limits = {});

struct UnawareResult {
  SolveResult total;
  // Value of the maximizing policy on each order of the distribution, in
  // input order. Ties between actions go to Discard.
  std::vector<double> per_order;
};

// Best order-unaware value against a known finite order distribution:
// expectimax over arrived-prefix beliefs.
UnawareResult OptUnawareExact(const Instance& instance,
                              std::span<const WeightedOrder> orders,
                              const SolverLimits& limits = {});

// E[max_{S in F} sum_{e in S} v_e] by enumerating the product support.
SolveResult ProphetExact(const Instance& instance,
                         const SolverLimits& limits = {});

// Independent brute force over worlds (order, values) and all decision rules
// on observable histories. n <= 8, two-atom supports, at most 8 orders.
double ExhaustivePolicySearch(const Instance& instance,
                              std::span<const WeightedOrder> orders);

// Exact expected value of a policy on one order, enumerating all value
// realizations. The policy stream is keyed by `seed`. Aware policies see
// `order` and `good`; unaware ones see the instance's order distribution.
double EvaluatePolicyExact(const PolicyFactory& factory,
                           const Instance& instance, const ArrivalOrder& order,
                           const std::vector<char>* good = nullptr,
                           uint64_t seed = 0, const SolverLimits& limits = {});

struct OrderRatio {
  double weight = 0.0;
  double alg = 0.0;
  double opt = 0.0;
  // Empty when opt is zero.
  std::optional<double> ratio;
};

struct RatioReport {
  std::vector<OrderRatio> per_order;
  // min over orders of alg / opt (order-competitive ratio).
  double min_ratio = 0.0;
  // min over orders of alg / prophet (competitive ratio).
  double xi = 0.0;
  double prophet = 0.0;
  std::vector<std::string> warnings;
};

// Per-order ratios of a policy against the aware optimum. Orders with
// OPT = 0 are excluded with a warning; DivisionByZeroOpt if none remain.
RatioReport RatioExact(const Instance& instance,
                       std::span<const WeightedOrder> orders,
                       const PolicyFactory& factory, uint64_t seed = 0,
                       const SolverLimits& limits = {});
// Same report for the policy found by OptUnawareExact.
RatioReport RatioOfUnawareOptimum(const Instance& instance,
                                  std::span<const WeightedOrder> orders,
                                  const SolverLimits& limits = {});

// Aware optimum on a tree instance for one order. Feasibility on a tree only
// depends on the deepest selected element, so the recursion runs over
// (position, deepest) and scales to the full k = 4 tree.
SolveResult OptAwareTreeExact(const Instance& instance,
                              const ArrivalOrder& order);

}  // namespace ocrlab

#endif  // OCRLAB_SOLVERS_H_
