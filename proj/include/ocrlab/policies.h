#ifndef OCRLAB_POLICIES_H_
#define OCRLAB_POLICIES_H_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ocrlab/core.h"
#include "ocrlab/rng.h"

namespace ocrlab {

// What an order-aware policy is told before the first arrival.
struct AwareKnowledge {
  const ArrivalOrder* order = nullptr;
  // Tree good/bad labels indexed by element; null when not applicable.
  const std::vector<char>* good = nullptr;
};

// An order-unaware policy only sees the order-distribution description.
struct UnawareKnowledge {
  const OrderDistribution* orders = nullptr;
};

using Knowledge = std::variant<AwareKnowledge, UnawareKnowledge>;

// Per-trial decision rule. `Choose` is consulted only when both actions are
// allowed; `Observe` sees every step, forced or not.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action Choose(ElementId e, double value,
                        const DecisionState& state) = 0;
  virtual void Observe(ElementId /*e*/, double /*value*/, Action /*taken*/) {}
};

class PolicyFactory {
 public:
  virtual ~PolicyFactory() = default;
  // Canonical spec string, e.g. "tree_gamble:l=2".
  virtual std::string name() const = 0;
  virtual bool order_aware() const = 0;
  // Aware factories require AwareKnowledge and unaware ones UnawareKnowledge;
  // anything else is InvalidArgument.
  virtual std::unique_ptr<Policy> Create(const Instance& instance,
                                         const Knowledge& knowledge,
                                         CounterRng rng) const = 0;
};

using PolicyFactoryPtr = std::shared_ptr<const PolicyFactory>;

// "name" or "name:key=value,key=value".
struct PolicySpec {
  std::string name;
  std::map<std::string, std::string> params;
};
PolicySpec ParsePolicySpecString(const std::string& text);
PolicyFactoryPtr MakePolicy(const std::string& spec);
PolicyFactoryPtr MakePolicy(const PolicySpec& spec);

// Baselines.
PolicyFactoryPtr AlwaysDiscardPolicy();
PolicyFactoryPtr AlwaysSelectPolicy();
// Selects every positive value it is allowed to.
PolicyFactoryPtr GreedyPolicy();

// Tree constructions.
PolicyFactoryPtr TreeAwarePolicy();
PolicyFactoryPtr TreeGamblePolicy(int l);

// A/B/C construction.
PolicyFactoryPtr NestedAwarePolicy();
// guess < 0 draws the guessed index uniformly from the policy stream.
PolicyFactoryPtr NestedGuessPolicy(int guess);

// Multi-unit construction.
enum class ThresholdVariant { kPi1Aware, kPi2Aware, kUnawareCommit };
PolicyFactoryPtr MultiunitThresholdPolicy(double d, ThresholdVariant variant);
// floor(d * sqrt(k / 2)); BadThreshold unless it lies in [0, k].
int ThresholdCount(double d, int k);

// Runs one arrival sequence. Forced actions are applied without asking the
// policy. Throws PolicyViolation if the policy answers with a non-action.
Trace RunPolicy(Policy& policy, const Instance& instance,
                const ArrivalOrder& order, std::span<const double> values);
// Same, without recording steps; `state` is scratch and is reset on entry.
double RunPolicyTotal(Policy& policy, const Instance& instance,
                      const ArrivalOrder& order, std::span<const double> values,
                      DecisionState& state);

}  // namespace ocrlab

#endif  // OCRLAB_POLICIES_H_
