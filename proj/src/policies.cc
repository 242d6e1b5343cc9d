#include "ocrlab/policies.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "ocrlab/constructions.h"
#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {
namespace {

const AwareKnowledge& RequireAware(const Knowledge& k, const std::string& who) {
  const auto* a = std::get_if<AwareKnowledge>(&k);
  if (!a || !a->order) {
    throw Error(ErrorCode::kInvalidArgument, who + " needs the arrival order");
  }
  return *a;
}

void RequireUnaware(const Knowledge& k, const std::string& who) {
  if (!std::holds_alternative<UnawareKnowledge>(k)) {
    throw Error(ErrorCode::kInvalidArgument,
                who + " is order-unaware and must not see the order");
  }
}

// Factory for policies that need nothing beyond the instance.
template <typename P>
class SimpleFactory final : public PolicyFactory {
 public:
  SimpleFactory(std::string name, bool aware) : name_(std::move(name)), aware_(aware) {}
  std::string name() const override { return name_; }
  bool order_aware() const override { return aware_; }
  std::unique_ptr<Policy> Create(const Instance&, const Knowledge&,
                                 CounterRng) const override {
    return std::make_unique<P>();
  }

 private:
  std::string name_;
  bool aware_;
};

class AlwaysDiscard final : public Policy {
 public:
  Action Choose(ElementId, double, const DecisionState&) override {
    return Action::kDiscard;
  }
};

class AlwaysSelect final : public Policy {
 public:
  Action Choose(ElementId, double, const DecisionState&) override {
    return Action::kSelect;
  }
};

class Greedy final : public Policy {
 public:
  Action Choose(ElementId, double value, const DecisionState&) override {
    return value > 0.0 ? Action::kSelect : Action::kDiscard;
  }
};

// ---------------------------------------------------------------------------
// Tree

class TreeAware final : public Policy {
 public:
  TreeAware(const TreePathOracle& tree, const ArrivalOrder& order,
            const std::vector<char>& good)
      : tree_(tree), good_(good) {
    const int n = tree.num_elements();
    // last_good_[p + 1]: the good child of p (or of the root) that arrives
    // last.
    std::vector<int> pos(n);
    for (int t = 0; t < n; ++t) pos[order.sequence[t]] = t;
    last_good_.assign(n + 1, -1);
    std::vector<int> best(n + 1, -1);
    for (ElementId e = 0; e < n; ++e) {
      if (!good[e]) continue;
      const int slot = tree.parent(e) + 1;
      if (pos[e] > best[slot]) {
        best[slot] = pos[e];
        last_good_[slot] = e;
      }
    }
  }

  Action Choose(ElementId e, double value, const DecisionState&) override {
    // Only good children of the current chain tip are candidates.
    if (!good_[e] || tree_.parent(e) != tip_) return Action::kDiscard;
    if (value == 1.0 || last_good_[tip_ + 1] == e) return Action::kSelect;
    return Action::kDiscard;
  }

  void Observe(ElementId e, double, Action taken) override {
    if (taken == Action::kSelect && tree_.depth(e) > depth_) {
      tip_ = e;
      depth_ = tree_.depth(e);
    }
  }

 private:
  const TreePathOracle& tree_;
  const std::vector<char>& good_;
  std::vector<ElementId> last_good_;
  ElementId tip_ = -1;
  int depth_ = 0;
};

class TreeAwareFactory final : public PolicyFactory {
 public:
  std::string name() const override { return "tree_aware"; }
  bool order_aware() const override { return true; }
  std::unique_ptr<Policy> Create(const Instance& instance,
                                 const Knowledge& knowledge,
                                 CounterRng) const override {
    const AwareKnowledge& k = RequireAware(knowledge, name());
    if (!k.good || static_cast<int>(k.good->size()) != instance.size()) {
      throw Error(ErrorCode::kMissingLabels,
                  "tree_aware needs good/bad labels for every element");
    }
    return std::make_unique<TreeAware>(TreeOracleOf(instance), *k.order,
                                       *k.good);
  }
};

class TreeGamble final : public Policy {
 public:
  TreeGamble(const TreePathOracle& tree, int l) : tree_(tree), l_(l) {}

  Action Choose(ElementId e, double value, const DecisionState&) override {
    if (value != 1.0) return Action::kDiscard;
    if (tree_.depth(e) >= tree_.k() - 1) return Action::kSelect;
    if (gambles_ < l_ && tree_.parent(e) == tip_) return Action::kSelect;
    return Action::kDiscard;
  }

  void Observe(ElementId e, double, Action taken) override {
    if (taken != Action::kSelect) return;
    if (tree_.depth(e) <= tree_.k() - 2) ++gambles_;
    if (tree_.depth(e) > depth_) {
      tip_ = e;
      depth_ = tree_.depth(e);
    }
  }

 private:
  const TreePathOracle& tree_;
  int l_;
  int gambles_ = 0;
  ElementId tip_ = -1;
  int depth_ = 0;
};

class TreeGambleFactory final : public PolicyFactory {
 public:
  explicit TreeGambleFactory(int l) : l_(l) {
    if (l < 0) throw Error(ErrorCode::kInvalidArgument, "tree_gamble needs l >= 0");
  }
  std::string name() const override {
    return "tree_gamble:l=" + std::to_string(l_);
  }
  bool order_aware() const override { return false; }
  std::unique_ptr<Policy> Create(const Instance& instance,
                                 const Knowledge& knowledge,
                                 CounterRng) const override {
    RequireUnaware(knowledge, name());
    return std::make_unique<TreeGamble>(TreeOracleOf(instance), l_);
  }

 private:
  int l_;
};

// ---------------------------------------------------------------------------
// A/B/C construction

class NestedAware final : public Policy {
 public:
  NestedAware(const NestedPhaseOracle& o, const ArrivalOrder& order)
      : o_(o) {
    const auto& p = o.params();
    // Phase 2 is every C element before the first B element.
    std::vector<char> in_u(p.c.size(), 1);
    for (ElementId e : order.sequence) {
      if (o.class_of(e) == NestedPhaseOracle::Class::kB) break;
      if (o.class_of(e) == NestedPhaseOracle::Class::kC) {
        in_u[o.index_in_class(e)] = 0;
      }
    }
    for (ElementId e : order.sequence) {
      if (o.class_of(e) == NestedPhaseOracle::Class::kB) last_b_ = e;
    }
    std::vector<int> u;
    for (size_t c = 0; c < in_u.size(); ++c) {
      if (in_u[c]) u.push_back(static_cast<int>(c));
    }
    int match = -1;
    for (int i = 0; i < o.num_indices(); ++i) {
      std::vector<int> ui;
      for (ElementId e : p.u[i]) ui.push_back(o.index_in_class(e));
      std::sort(ui.begin(), ui.end());
      if (ui == u) {
        if (match != -1) {
          throw Error(ErrorCode::kDecodeFailure,
                      "several U sets match the order's last phase");
        }
        match = i;
      }
    }
    if (match == -1) {
      throw Error(ErrorCode::kDecodeFailure,
                  "no U set matches the order's last phase");
    }
    i_ = match;
  }

  Action Choose(ElementId e, double value, const DecisionState&) override {
    const int idx = o_.index_in_class(e);
    switch (o_.class_of(e)) {
      case NestedPhaseOracle::Class::kA:
        return (o_.v_mask(i_) >> idx & 1) ? Action::kSelect : Action::kDiscard;
      case NestedPhaseOracle::Class::kB:
        if (j_ < 0 && (value == 1.0 || e == last_b_)) return Action::kSelect;
        return Action::kDiscard;
      case NestedPhaseOracle::Class::kC:
        return j_ >= 0 && o_.InF(i_, j_, idx) ? Action::kSelect
                                              : Action::kDiscard;
    }
    return Action::kDiscard;
  }

  void Observe(ElementId e, double, Action taken) override {
    if (taken == Action::kSelect &&
        o_.class_of(e) == NestedPhaseOracle::Class::kB) {
      j_ = o_.index_in_class(e);
    }
  }

  int decoded() const { return i_; }

 private:
  const NestedPhaseOracle& o_;
  int i_ = -1;
  int j_ = -1;
  ElementId last_b_ = -1;
};

class NestedAwareFactory final : public PolicyFactory {
 public:
  std::string name() const override { return "nested_aware"; }
  bool order_aware() const override { return true; }
  std::unique_ptr<Policy> Create(const Instance& instance,
                                 const Knowledge& knowledge,
                                 CounterRng) const override {
    const AwareKnowledge& k = RequireAware(knowledge, name());
    return std::make_unique<NestedAware>(NestedOracleOf(instance), *k.order);
  }
};

class NestedGuess final : public Policy {
 public:
  NestedGuess(const NestedPhaseOracle& o, int guess) : o_(o), guess_(guess) {}

  Action Choose(ElementId e, double value, const DecisionState& state) override {
    switch (o_.class_of(e)) {
      case NestedPhaseOracle::Class::kA:
        return (guess_ >> o_.index_in_class(e) & 1) ? Action::kSelect
                                                    : Action::kDiscard;
      case NestedPhaseOracle::Class::kB:
        return value == 1.0 ? Action::kSelect : Action::kDiscard;
      case NestedPhaseOracle::Class::kC: {
        // Keep as many B elements selectable as possible; ties discard.
        const int keep_sel = ReachableB(state, e, Action::kSelect);
        const int keep_dis = ReachableB(state, e, Action::kDiscard);
        return keep_sel > keep_dis ? Action::kSelect : Action::kDiscard;
      }
    }
    return Action::kDiscard;
  }

 private:
  int ReachableB(const DecisionState& state, ElementId e, Action a) const {
    DecisionState next = state;
    next.Apply(e, a);
    int count = 0;
    for (ElementId b : o_.params().b) {
      if (next.is_selected(b)) return 1;
      if (!next.is_decided(b) && o_.CanExtend(next, Pin{b, true})) ++count;
    }
    return count;
  }

  const NestedPhaseOracle& o_;
  int guess_;
};

class NestedGuessFactory final : public PolicyFactory {
 public:
  explicit NestedGuessFactory(int guess) : guess_(guess) {}
  std::string name() const override {
    return guess_ < 0 ? "nested_guess:rule=random"
                      : "nested_guess:i=" + std::to_string(guess_);
  }
  bool order_aware() const override { return false; }
  std::unique_ptr<Policy> Create(const Instance& instance,
                                 const Knowledge& knowledge,
                                 CounterRng rng) const override {
    RequireUnaware(knowledge, name());
    const NestedPhaseOracle& o = NestedOracleOf(instance);
    int guess = guess_;
    if (guess < 0) {
      guess = static_cast<int>(rng.UniformInt(o.num_indices()));
    } else if (guess >= o.num_indices()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "guess index " + std::to_string(guess) + " out of range");
    }
    return std::make_unique<NestedGuess>(o, guess);
  }

 private:
  int guess_;
};

// ---------------------------------------------------------------------------
// Multi-unit

class Threshold final : public Policy {
 public:
  Threshold(int k, int m, ThresholdVariant v) : k_(k), m_(m), v_(v) {}

  Action Choose(ElementId e, double value, const DecisionState&) override {
    if (e < k_) return a_taken_ < m_ ? Action::kSelect : Action::kDiscard;
    if (e >= 2 * k_) return value == 2.0 ? Action::kSelect : Action::kDiscard;
    switch (v_) {
      case ThresholdVariant::kPi1Aware:
        return Action::kDiscard;
      case ThresholdVariant::kPi2Aware:
        return Action::kSelect;
      case ThresholdVariant::kUnawareCommit:
        // b's only take capacity the c's could no longer claim.
        return c_seen_ == 2 * k_ ? Action::kSelect : Action::kDiscard;
    }
    return Action::kDiscard;
  }

  void Observe(ElementId e, double, Action taken) override {
    if (e < k_) {
      a_taken_ += taken == Action::kSelect;
    } else if (e >= 2 * k_) {
      ++c_seen_;
    }
  }

 private:
  int k_;
  int m_;
  ThresholdVariant v_;
  int a_taken_ = 0;
  int c_seen_ = 0;
};

std::string VariantName(ThresholdVariant v) {
  switch (v) {
    case ThresholdVariant::kPi1Aware: return "pi1";
    case ThresholdVariant::kPi2Aware: return "pi2";
    case ThresholdVariant::kUnawareCommit: return "unaware";
  }
  return "?";
}

std::string FormatReal(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

class ThresholdFactory final : public PolicyFactory {
 public:
  ThresholdFactory(double d, ThresholdVariant v) : d_(d), v_(v) {
    if (!std::isfinite(d) || d < 0.0) {
      throw Error(ErrorCode::kBadThreshold, "d must be finite and >= 0");
    }
  }
  std::string name() const override {
    return "multiunit_threshold:d=" + FormatReal(d_) +
           ",variant=" + VariantName(v_);
  }
  bool order_aware() const override {
    return v_ != ThresholdVariant::kUnawareCommit;
  }
  std::unique_ptr<Policy> Create(const Instance& instance,
                                 const Knowledge& knowledge,
                                 CounterRng) const override {
    if (order_aware()) {
      RequireAware(knowledge, name());
    } else {
      RequireUnaware(knowledge, name());
    }
    const int k = std::stoi(instance.meta("k"));
    if (instance.meta("construction") != "multiunit" ||
        instance.size() != 4 * k) {
      throw Error(ErrorCode::kWrongKind, name() + " needs a multiunit instance");
    }
    return std::make_unique<Threshold>(k, ThresholdCount(d_, k), v_);
  }

 private:
  double d_;
  ThresholdVariant v_;
};

int ParseInt(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "bad integer for " + what + ": " + s);
}

double ParseReal(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "bad number for " + what + ": " + s);
}

}  // namespace

int ThresholdCount(double d, int k) {
  const double raw = d * std::sqrt(k / 2.0);
  if (!std::isfinite(raw) || raw < 0.0 || raw > k) {
    throw Error(ErrorCode::kBadThreshold,
                "d*sqrt(k/2) = " + FormatReal(raw) + " outside [0, k]");
  }
  return static_cast<int>(std::floor(raw));
}

PolicyFactoryPtr AlwaysDiscardPolicy() {
  return std::make_shared<SimpleFactory<AlwaysDiscard>>("always_discard", false);
}
PolicyFactoryPtr AlwaysSelectPolicy() {
  return std::make_shared<SimpleFactory<AlwaysSelect>>("always_select", false);
}
PolicyFactoryPtr GreedyPolicy() {
  return std::make_shared<SimpleFactory<Greedy>>("greedy", false);
}
PolicyFactoryPtr TreeAwarePolicy() { return std::make_shared<TreeAwareFactory>(); }
PolicyFactoryPtr TreeGamblePolicy(int l) {
  return std::make_shared<TreeGambleFactory>(l);
}
PolicyFactoryPtr NestedAwarePolicy() {
  return std::make_shared<NestedAwareFactory>();
}
PolicyFactoryPtr NestedGuessPolicy(int guess) {
  return std::make_shared<NestedGuessFactory>(guess);
}
PolicyFactoryPtr MultiunitThresholdPolicy(double d, ThresholdVariant variant) {
  return std::make_shared<ThresholdFactory>(d, variant);
}

PolicySpec ParsePolicySpecString(const std::string& text) {
  PolicySpec spec;
  const size_t colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty policy name");
  }
  if (colon == std::string::npos) return spec;
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "policy parameter '" + item + "' is not key=value");
    }
    spec.params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return spec;
}

PolicyFactoryPtr MakePolicy(const PolicySpec& spec) {
  auto take = [&](const std::set<std::string>& allowed) {
    for (const auto& [key, _] : spec.params) {
      if (!allowed.contains(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "unknown parameter '" + key + "' for " + spec.name);
      }
    }
  };
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? nullptr : &it->second;
  };
  const std::string& name = spec.name;
  if (name == "always_discard") {
    take({});
    return AlwaysDiscardPolicy();
  }
  if (name == "always_select") {
    take({});
    return AlwaysSelectPolicy();
  }
  if (name == "greedy") {
    take({});
    return GreedyPolicy();
  }
  if (name == "tree_aware") {
    take({});
    return TreeAwarePolicy();
  }
  if (name == "tree_gamble") {
    take({"l"});
    const std::string* l = get("l");
    if (!l) throw Error(ErrorCode::kInvalidArgument, "tree_gamble needs l");
    return TreeGamblePolicy(ParseInt(*l, "l"));
  }
  if (name == "nested_aware") {
    take({});
    return NestedAwarePolicy();
  }
  if (name == "nested_guess") {
    take({"i", "rule"});
    const std::string* i = get("i");
    const std::string* rule = get("rule");
    if (i && !rule) return NestedGuessPolicy(ParseInt(*i, "i"));
    if (rule && !i && (*rule == "random" || *rule == "uniform")) {
      return NestedGuessPolicy(-1);
    }
    throw Error(ErrorCode::kInvalidArgument,
                "nested_guess needs i=<index> or rule=random");
  }
  if (name == "multiunit_threshold") {
    take({"d", "variant"});
    const std::string* d = get("d");
    const std::string* v = get("variant");
    if (!d || !v) {
      throw Error(ErrorCode::kInvalidArgument,
                  "multiunit_threshold needs d and variant");
    }
    ThresholdVariant variant;
    if (*v == "pi1") {
      variant = ThresholdVariant::kPi1Aware;
    } else if (*v == "pi2") {
      variant = ThresholdVariant::kPi2Aware;
    } else if (*v == "unaware") {
      variant = ThresholdVariant::kUnawareCommit;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown variant '" + *v + "'");
    }
    return MultiunitThresholdPolicy(ParseReal(*d, "d"), variant);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown policy '" + name + "'");
}

PolicyFactoryPtr MakePolicy(const std::string& spec) {
  return MakePolicy(ParsePolicySpecString(spec));
}

// ---------------------------------------------------------------------------
// Execution

namespace {

template <typename OnStep>
double Execute(Policy& policy, const Instance& instance,
               const ArrivalOrder& order, std::span<const double> values,
               DecisionState& state, OnStep&& on_step) {
  const FeasibilityOracle& oracle = instance.feasibility();
  if (static_cast<int>(values.size()) != instance.size()) {
    throw Error(ErrorCode::kInvalidArgument, "values do not cover the instance");
  }
  if (static_cast<int>(order.size()) != instance.size()) {
    throw Error(ErrorCode::kInvalidArgument, "order does not cover the instance");
  }
  double total = 0.0;
  for (ElementId e : order.sequence) {
    const ActionSet allowed = AllowedActions(oracle, state, e);
    Action a;
    if (allowed.both()) {
      a = policy.Choose(e, values[e], state);
      if (a != Action::kSelect && a != Action::kDiscard) {
        throw Error(ErrorCode::kPolicyViolation,
                    "policy returned a non-action for element " +
                        std::to_string(e));
      }
    } else {
      a = allowed.select ? Action::kSelect : Action::kDiscard;
    }
    state.Apply(e, a);
    policy.Observe(e, values[e], a);
    if (a == Action::kSelect) total += values[e];
    on_step(e, values[e], a);
  }
  return total;
}

}  // namespace

Trace RunPolicy(Policy& policy, const Instance& instance,
                const ArrivalOrder& order, std::span<const double> values) {
  DecisionState state(instance.size());
  Trace trace;
  trace.steps.reserve(instance.size());
  trace.total = Execute(policy, instance, order, values, state,
                        [&](ElementId e, double v, Action a) {
                          trace.steps.push_back({e, v, a});
                        });
  return trace;
}

double RunPolicyTotal(Policy& policy, const Instance& instance,
                      const ArrivalOrder& order, std::span<const double> values,
                      DecisionState& state) {
  if (state.size() != instance.size()) {
    state = DecisionState(instance.size());
  } else {
    state.Reset();
  }
  return Execute(policy, instance, order, values, state,
                 [](ElementId, double, Action) {});
}

}  // namespace ocrlab
