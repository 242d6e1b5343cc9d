#ifndef OCRLAB_CORE_H_
#define OCRLAB_CORE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ocrlab/rng.h"

namespace ocrlab {

using ElementId = int32_t;

// Tolerance used for probability sums and value comparisons.
inline constexpr double kTolerance = 1e-9;

class FeasibilityOracle;

struct Atom {
  double value;
  double prob;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Finite distribution over nonnegative values. Atoms are kept sorted by value.
class ValueDistribution {
 public:
  explicit ValueDistribution(std::vector<Atom> atoms);

  static ValueDistribution Deterministic(double value);
  // Value `high` with probability p, `low` otherwise.
  static ValueDistribution Bernoulli(double p, double high = 1.0,
                                     double low = 0.0);

  std::span<const Atom> atoms() const { return atoms_; }
  bool degenerate() const { return atoms_.size() == 1; }
  double Mean() const;
  // Inverse-CDF draw from a uniform in [0, 1).
  double Sample(double u) const;

  friend bool operator==(const ValueDistribution&,
                         const ValueDistribution&) = default;

 private:
  std::vector<Atom> atoms_;
};

struct ArrivalOrder {
  std::vector<ElementId> sequence;

  size_t size() const { return sequence.size(); }
  friend bool operator==(const ArrivalOrder&, const ArrivalOrder&) = default;
};

// Throws InvalidArgument unless `order` is a permutation of [0, n).
void ValidateOrder(const ArrivalOrder& order, int n);

struct WeightedOrder {
  ArrivalOrder order;
  double weight;
};

// A distribution over arrival orders: either an explicit weighted list or a
// named generator (e.g. "tree") whose draws come from the constructions
// module. An empty distribution means "no order information".
class OrderDistribution {
 public:
  struct Generative {
    std::string generator;
    int64_t enumeration_bound = 0;
  };

  OrderDistribution() = default;
  explicit OrderDistribution(std::vector<WeightedOrder> finite);
  explicit OrderDistribution(Generative generative);

  bool empty() const;
  bool is_finite() const { return finite_ != nullptr; }
  bool is_generative() const { return generative_.has_value(); }

  std::span<const WeightedOrder> finite() const;
  const Generative& generative() const { return *generative_; }

  void Validate(int n) const;

 private:
  // Shared so copies of an Instance stay cheap; immutable after construction.
  std::shared_ptr<const std::vector<WeightedOrder>> finite_;
  std::optional<Generative> generative_;
};

enum class Action : uint8_t { kDiscard = 0, kSelect = 1 };

struct ActionSet {
  bool discard = false;
  bool select = false;

  bool empty() const { return !discard && !select; }
  bool both() const { return discard && select; }
  bool contains(Action a) const {
    return a == Action::kSelect ? select : discard;
  }
  friend bool operator==(const ActionSet&, const ActionSet&) = default;
};

enum class Mark : uint8_t { kUndecided = 0, kSelected = 1, kDiscarded = 2 };

// The (selected, discarded) split of the elements decided so far. Keeps both
// a per-element mark array and the two id lists so oracles can use whichever
// is cheaper.
class DecisionState {
 public:
  explicit DecisionState(int n = 0);

  static DecisionState FromSets(int n, std::span<const ElementId> selected,
                                std::span<const ElementId> discarded);
  static DecisionState FromMasks(int n, uint64_t selected, uint64_t discarded);

  int size() const { return static_cast<int>(marks_.size()); }
  Mark mark(ElementId e) const { return marks_[e]; }
  bool is_selected(ElementId e) const { return marks_[e] == Mark::kSelected; }
  bool is_discarded(ElementId e) const {
    return marks_[e] == Mark::kDiscarded;
  }
  bool is_decided(ElementId e) const { return marks_[e] != Mark::kUndecided; }
  const std::vector<ElementId>& selected() const { return selected_; }
  const std::vector<ElementId>& discarded() const { return discarded_; }

  // Throws InconsistentState if e is out of range or already decided.
  void Apply(ElementId e, Action action);
  // Reverts the most recent decision on e's list (a stack discipline, as in
  // a depth-first search).
  void Undo(ElementId e);
  // Returns to the empty state in O(#decided).
  void Reset();

 private:
  std::vector<Mark> marks_;
  std::vector<ElementId> selected_;
  std::vector<ElementId> discarded_;
};

class Instance {
 public:
  Instance(std::string name, std::vector<ValueDistribution> dists,
           std::shared_ptr<const FeasibilityOracle> feasibility,
           OrderDistribution orders = {},
           std::map<std::string, std::string> metadata = {});

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(dists_.size()); }
  const ValueDistribution& dist(ElementId e) const { return dists_[e]; }
  const std::vector<ValueDistribution>& dists() const { return dists_; }
  const FeasibilityOracle& feasibility() const { return *feasibility_; }
  const std::shared_ptr<const FeasibilityOracle>& feasibility_ptr() const {
    return feasibility_;
  }
  const OrderDistribution& orders() const { return orders_; }
  const std::map<std::string, std::string>& metadata() const {
    return metadata_;
  }
  // Returns the metadata entry or throws InvalidArgument.
  const std::string& meta(const std::string& key) const;

  // Finite orders as plain sequences; the canonical identity order when the
  // instance carries none. Throws for generative distributions.
  std::vector<ArrivalOrder> FiniteOrders() const;

 private:
  std::string name_;
  std::vector<ValueDistribution> dists_;
  std::shared_ptr<const FeasibilityOracle> feasibility_;
  OrderDistribution orders_;
  std::map<std::string, std::string> metadata_;
};

ArrivalOrder IdentityOrder(int n);

// Draws every element's value independently. The draw for element e uses
// `rng.UniformAt(e)`, so a given (seed, trial) always yields the same values.
std::vector<double> SampleValues(const Instance& instance,
                                 const CounterRng& rng);
void SampleValuesInto(const Instance& instance, const CounterRng& rng,
                      std::vector<double>& out);

// Which actions keep the decision state completable to a feasible set.
// Throws InconsistentState if the state admits no feasible completion.
ActionSet AllowedActions(const FeasibilityOracle& oracle,
                         const DecisionState& state, ElementId element);

struct TraceStep {
  ElementId element;
  double value;
  Action action;
};

struct Trace {
  std::vector<TraceStep> steps;
  double total = 0.0;

  // Selected ids, ascending.
  std::vector<ElementId> SelectedSet() const;
};

}  // namespace ocrlab

#endif  // OCRLAB_CORE_H_
