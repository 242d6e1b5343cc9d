#include "ocrlab/core.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInconsistentState: return "InconsistentState";
    case ErrorCode::kPolicyViolation: return "PolicyViolation";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kWrongKind: return "WrongKind";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kExhaustedAttempts: return "ExhaustedAttempts";
    case ErrorCode::kEncodingOverflow: return "EncodingOverflow";
    case ErrorCode::kMissingLabels: return "MissingLabels";
    case ErrorCode::kDecodeFailure: return "DecodeFailure";
    case ErrorCode::kBadThreshold: return "BadThreshold";
    case ErrorCode::kDivisionByZeroOpt: return "DivisionByZeroOpt";
    case ErrorCode::kBadBracket: return "BadBracket";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// ValueDistribution

ValueDistribution::ValueDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "distribution has no atoms");
  }
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& x, const Atom& y) { return x.value < y.value; });
  double total = 0.0;
  for (size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (!std::isfinite(a.value) || a.value < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "atom values must be finite and nonnegative");
    }
    if (!(a.prob >= 0.0 && a.prob <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "atom probability outside [0,1]");
    }
    if (i > 0 && atoms_[i - 1].value == a.value) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate atom value");
    }
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                "atom probabilities sum to " + std::to_string(total));
  }
}

ValueDistribution ValueDistribution::Deterministic(double value) {
  return ValueDistribution({{value, 1.0}});
}

ValueDistribution ValueDistribution::Bernoulli(double p, double high,
                                               double low) {
  if (p <= 0.0) return Deterministic(low);
  if (p >= 1.0) return Deterministic(high);
  return ValueDistribution({{low, 1.0 - p}, {high, p}});
}

double ValueDistribution::Mean() const {
  double m = 0.0;
  for (const Atom& a : atoms_) m += a.value * a.prob;
  return m;
}

double ValueDistribution::Sample(double u) const {
  if (atoms_.size() == 1) return atoms_[0].value;
  double acc = 0.0;
  for (size_t i = 0; i + 1 < atoms_.size(); ++i) {
    acc += atoms_[i].prob;
    if (u < acc) return atoms_[i].value;
  }
  return atoms_.back().value;
}

// ---------------------------------------------------------------------------
// Orders

void ValidateOrder(const ArrivalOrder& order, int n) {
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "order length " + std::to_string(order.size()) +
                    " != instance size " + std::to_string(n));
  }
  std::vector<char> seen(n, 0);
  for (ElementId e : order.sequence) {
    if (e < 0 || e >= n || seen[e]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "order is not a permutation (element " + std::to_string(e) +
                      ")");
    }
    seen[e] = 1;
  }
}

ArrivalOrder IdentityOrder(int n) {
  ArrivalOrder order;
  order.sequence.resize(n);
  std::iota(order.sequence.begin(), order.sequence.end(), 0);
  return order;
}

OrderDistribution::OrderDistribution(std::vector<WeightedOrder> finite)
    : finite_(std::make_shared<const std::vector<WeightedOrder>>(
          std::move(finite))) {
  if (finite_->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty finite order distribution");
  }
  double total = 0.0;
  for (const WeightedOrder& w : *finite_) {
    if (!(w.weight > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "order weights must be positive");
    }
    total += w.weight;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                "order weights sum to " + std::to_string(total));
  }
}

OrderDistribution::OrderDistribution(Generative generative)
    : generative_(std::move(generative)) {}

bool OrderDistribution::empty() const {
  return finite_ == nullptr && !generative_.has_value();
}

std::span<const WeightedOrder> OrderDistribution::finite() const {
  if (!finite_) return {};
  return *finite_;
}

void OrderDistribution::Validate(int n) const {
  for (const WeightedOrder& w : finite()) ValidateOrder(w.order, n);
}

// ---------------------------------------------------------------------------
// DecisionState

DecisionState::DecisionState(int n) : marks_(n, Mark::kUndecided) {}

DecisionState DecisionState::FromSets(int n,
                                      std::span<const ElementId> selected,
                                      std::span<const ElementId> discarded) {
  DecisionState s(n);
  for (ElementId e : selected) s.Apply(e, Action::kSelect);
  for (ElementId e : discarded) s.Apply(e, Action::kDiscard);
  return s;
}

DecisionState DecisionState::FromMasks(int n, uint64_t selected,
                                       uint64_t discarded) {
  if (selected & discarded) {
    throw Error(ErrorCode::kInconsistentState, "selected and discarded overlap");
  }
  DecisionState s(n);
  for (int e = 0; e < n; ++e) {
    if (selected >> e & 1) {
      s.Apply(e, Action::kSelect);
    } else if (discarded >> e & 1) {
      s.Apply(e, Action::kDiscard);
    }
  }
  return s;
}

void DecisionState::Apply(ElementId e, Action action) {
  if (e < 0 || e >= size()) {
    throw Error(ErrorCode::kInconsistentState,
                "element " + std::to_string(e) + " out of range");
  }
  if (marks_[e] != Mark::kUndecided) {
    throw Error(ErrorCode::kInconsistentState,
                "element " + std::to_string(e) + " already decided");
  }
  if (action == Action::kSelect) {
    marks_[e] = Mark::kSelected;
    selected_.push_back(e);
  } else {
    marks_[e] = Mark::kDiscarded;
    discarded_.push_back(e);
  }
}

void DecisionState::Undo(ElementId e) {
  auto& list = marks_[e] == Mark::kSelected ? selected_ : discarded_;
  if (marks_[e] == Mark::kUndecided || list.empty() || list.back() != e) {
    throw Error(ErrorCode::kInconsistentState,
                "element " + std::to_string(e) + " is not the last decision");
  }
  list.pop_back();
  marks_[e] = Mark::kUndecided;
}

void DecisionState::Reset() {
  for (ElementId e : selected_) marks_[e] = Mark::kUndecided;
  for (ElementId e : discarded_) marks_[e] = Mark::kUndecided;
  selected_.clear();
  discarded_.clear();
}

// ---------------------------------------------------------------------------
// Instance

Instance::Instance(std::string name, std::vector<ValueDistribution> dists,
                   std::shared_ptr<const FeasibilityOracle> feasibility,
                   OrderDistribution orders,
                   std::map<std::string, std::string> metadata)
    : name_(std::move(name)),
      dists_(std::move(dists)),
      feasibility_(std::move(feasibility)),
      orders_(std::move(orders)),
      metadata_(std::move(metadata)) {
  if (dists_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "instance has no elements");
  }
  if (!feasibility_) {
    throw Error(ErrorCode::kInvalidArgument, "instance has no feasibility oracle");
  }
  if (feasibility_->num_elements() != size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "oracle covers " + std::to_string(feasibility_->num_elements()) +
                    " elements, instance has " + std::to_string(size()));
  }
  if (!feasibility_->CanExtend(DecisionState(size()))) {
    throw Error(ErrorCode::kInvalidArgument, "feasibility family is empty");
  }
  orders_.Validate(size());
}

const std::string& Instance::meta(const std::string& key) const {
  auto it = metadata_.find(key);
  if (it == metadata_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "instance metadata lacks '" + key + "'");
  }
  return it->second;
}

std::vector<ArrivalOrder> Instance::FiniteOrders() const {
  if (orders_.is_generative()) {
    throw Error(ErrorCode::kInvalidArgument,
                "instance orders are generative ('" +
                    orders_.generative().generator + "')");
  }
  std::vector<ArrivalOrder> out;
  for (const WeightedOrder& w : orders_.finite()) out.push_back(w.order);
  if (out.empty()) out.push_back(IdentityOrder(size()));
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and forced decisions

void SampleValuesInto(const Instance& instance, const CounterRng& rng,
                      std::vector<double>& out) {
  const int n = instance.size();
  out.resize(n);
  for (ElementId e = 0; e < n; ++e) {
    const ValueDistribution& d = instance.dist(e);
    out[e] = d.degenerate() ? d.atoms()[0].value : d.Sample(rng.UniformAt(e));
  }
}

std::vector<double> SampleValues(const Instance& instance,
                                 const CounterRng& rng) {
  std::vector<double> values;
  SampleValuesInto(instance, rng, values);
  return values;
}

ActionSet AllowedActions(const FeasibilityOracle& oracle,
                         const DecisionState& state, ElementId element) {
  if (element < 0 || element >= state.size()) {
    throw Error(ErrorCode::kUnknownElement, std::to_string(element));
  }
  if (state.is_decided(element)) {
    throw Error(ErrorCode::kInconsistentState,
                "element " + std::to_string(element) + " already decided");
  }
  ActionSet allowed = oracle.Allowed(state, element);
  if (allowed.empty()) {
    throw Error(ErrorCode::kInconsistentState,
                "no feasible set agrees with the current decisions");
  }
  return allowed;
}

std::vector<ElementId> Trace::SelectedSet() const {
  std::vector<ElementId> out;
  for (const TraceStep& s : steps) {
    if (s.action == Action::kSelect) out.push_back(s.element);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ocrlab
