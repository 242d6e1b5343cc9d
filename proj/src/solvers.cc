#include "ocrlab/solvers.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "ocrlab/constructions.h"
#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaskBits = 40;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void CheckSize(const Instance& instance, int max_elements, const char* what) {
  const int cap = std::min(max_elements, kMaskBits);
  if (instance.size() > cap) {
    throw Error(ErrorCode::kTooLarge,
                std::string(what) + ": " + std::to_string(instance.size()) +
                    " elements exceed the limit of " + std::to_string(cap));
  }
}

uint64_t Key(uint64_t node, uint64_t sel) { return node << kMaskBits | sel; }

// E over the element's value of the better allowed action.
double Stage(const ValueDistribution& dist, ActionSet allowed, double v_sel,
             double v_dis) {
  double out = 0.0;
  for (const Atom& a : dist.atoms()) {
    const double s = allowed.select ? a.value + v_sel : kNegInf;
    const double d = allowed.discard ? v_dis : kNegInf;
    out += a.prob * std::max(s, d);
  }
  return out;
}

class AwareDp {
 public:
  AwareDp(const Instance& instance, const ArrivalOrder& order, bool memo,
          const SolverLimits& limits)
      : instance_(instance),
        order_(order),
        memo_(memo),
        limits_(limits),
        state_(instance.size()) {}

  double Solve(int pos) {
    if (pos == instance_.size()) return 0.0;
    const uint64_t key = Key(pos, sel_);
    if (memo_) {
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    if (++expanded_ > limits_.max_states) {
      throw Error(ErrorCode::kTooLarge, "aware DP exceeded max_states");
    }
    const ElementId e = order_.sequence[pos];
    const ActionSet allowed =
        AllowedActions(instance_.feasibility(), state_, e);
    double v_sel = 0.0;
    double v_dis = 0.0;
    if (allowed.select) {
      state_.Apply(e, Action::kSelect);
      sel_ |= uint64_t{1} << e;
      v_sel = Solve(pos + 1);
      sel_ &= ~(uint64_t{1} << e);
      state_.Undo(e);
    }
    if (allowed.discard) {
      state_.Apply(e, Action::kDiscard);
      v_dis = Solve(pos + 1);
      state_.Undo(e);
    }
    const double v = Stage(instance_.dist(e), allowed, v_sel, v_dis);
    if (memo_) cache_.emplace(key, v);
    return v;
  }

  int64_t expanded() const { return expanded_; }

 private:
  const Instance& instance_;
  const ArrivalOrder& order_;
  bool memo_;
  SolverLimits limits_;
  DecisionState state_;
  uint64_t sel_ = 0;
  int64_t expanded_ = 0;
  std::unordered_map<uint64_t, double> cache_;
};

SolveResult RunAware(const Instance& instance, const ArrivalOrder& order,
                     const SolverLimits& limits, bool memo) {
  Stopwatch sw;
  CheckSize(instance, limits.max_elements_aware, "opt_aware_exact");
  ValidateOrder(order, instance.size());
  AwareDp dp(instance, order, memo, limits);
  SolveResult r;
  r.value = dp.Solve(0);
  r.states_expanded = dp.expanded();
  r.wall_time_ms = sw.ms();
  return r;
}

// Prefix trie of a finite order distribution.
struct Trie {
  struct Node {
    int depth = 0;
    double weight = 0.0;
    std::vector<std::pair<ElementId, int>> children;
  };
  std::vector<Node> nodes;
  // Leaf-path node per (order, position).
  std::vector<std::vector<int>> path;

  explicit Trie(std::span<const WeightedOrder> orders) {
    nodes.emplace_back();
    for (const WeightedOrder& w : orders) {
      int cur = 0;
      nodes[0].weight += w.weight;
      std::vector<int> p = {0};
      for (ElementId e : w.order.sequence) {
        int next = -1;
        for (auto [id, child] : nodes[cur].children) {
          if (id == e) next = child;
        }
        if (next == -1) {
          next = static_cast<int>(nodes.size());
          Node node;
          node.depth = nodes[cur].depth + 1;
          nodes.push_back(node);
          nodes[cur].children.emplace_back(e, next);
        }
        nodes[next].weight += w.weight;
        cur = next;
        p.push_back(cur);
      }
      path.push_back(std::move(p));
    }
  }
};

class UnawareDp {
 public:
  UnawareDp(const Instance& instance, const Trie& trie,
            const SolverLimits& limits)
      : instance_(instance), trie_(trie), limits_(limits),
        state_(instance.size()) {}

  double Solve(int node) {
    const Trie::Node& nd = trie_.nodes[node];
    if (nd.children.empty()) return 0.0;
    const uint64_t key = Key(node, sel_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (++expanded_ > limits_.max_states) {
      throw Error(ErrorCode::kTooLarge, "unaware DP exceeded max_states");
    }
    double v = 0.0;
    for (auto [e, child] : nd.children) {
      const double p = trie_.nodes[child].weight / nd.weight;
      const ActionSet allowed =
          AllowedActions(instance_.feasibility(), state_, e);
      const auto [v_sel, v_dis] = Children(e, child, allowed);
      v += p * Stage(instance_.dist(e), allowed, v_sel, v_dis);
    }
    cache_.emplace(key, v);
    return v;
  }

  // Value of the maximizing rule when the realized order is `order_index`.
  double Evaluate(int order_index) {
    eval_cache_.clear();
    return Eval(order_index, 0);
  }

  int64_t expanded() const { return expanded_; }

 private:
  std::pair<double, double> Children(ElementId e, int child,
                                     ActionSet allowed) {
    double v_sel = 0.0;
    double v_dis = 0.0;
    if (allowed.select) {
      state_.Apply(e, Action::kSelect);
      sel_ |= uint64_t{1} << e;
      v_sel = Solve(child);
      sel_ &= ~(uint64_t{1} << e);
      state_.Undo(e);
    }
    if (allowed.discard) {
      state_.Apply(e, Action::kDiscard);
      v_dis = Solve(child);
      state_.Undo(e);
    }
    return {v_sel, v_dis};
  }

  double Eval(int order_index, int pos) {
    const auto& path = trie_.path[order_index];
    if (pos + 1 == static_cast<int>(path.size())) return 0.0;
    const uint64_t key = Key(pos, sel_);
    if (auto it = eval_cache_.find(key); it != eval_cache_.end()) {
      return it->second;
    }
    const int node = path[pos];
    const int child = path[pos + 1];
    ElementId e = -1;
    for (auto [id, c] : trie_.nodes[node].children) {
      if (c == child) e = id;
    }
    const ActionSet allowed = AllowedActions(instance_.feasibility(), state_, e);
    const auto [v_sel, v_dis] = Children(e, child, allowed);
    double cont_sel = 0.0;
    double cont_dis = 0.0;
    if (allowed.select) {
      state_.Apply(e, Action::kSelect);
      sel_ |= uint64_t{1} << e;
      cont_sel = Eval(order_index, pos + 1);
      sel_ &= ~(uint64_t{1} << e);
      state_.Undo(e);
    }
    if (allowed.discard) {
      state_.Apply(e, Action::kDiscard);
      cont_dis = Eval(order_index, pos + 1);
      state_.Undo(e);
    }
    double v = 0.0;
    for (const Atom& a : instance_.dist(e).atoms()) {
      const bool take = allowed.select &&
                        (!allowed.discard || a.value + v_sel > v_dis + 1e-12);
      v += a.prob * (take ? a.value + cont_sel : cont_dis);
    }
    eval_cache_.emplace(key, v);
    return v;
  }

  const Instance& instance_;
  const Trie& trie_;
  SolverLimits limits_;
  DecisionState state_;
  uint64_t sel_ = 0;
  int64_t expanded_ = 0;
  std::unordered_map<uint64_t, double> cache_;
  std::unordered_map<uint64_t, double> eval_cache_;
};

// Calls fn(values, prob) for every point of the product support.
template <typename Fn>
int64_t EnumerateRealizations(const Instance& instance, int64_t max_points,
                              Fn&& fn) {
  const int n = instance.size();
  std::vector<ElementId> vary;
  double points = 1.0;
  for (ElementId e = 0; e < n; ++e) {
    if (!instance.dist(e).degenerate()) {
      vary.push_back(e);
      points *= static_cast<double>(instance.dist(e).atoms().size());
    }
  }
  if (points > static_cast<double>(max_points)) {
    throw Error(ErrorCode::kTooLarge,
                "value support has " + std::to_string(points) +
                    " points; limit " + std::to_string(max_points));
  }
  std::vector<double> values(n);
  for (ElementId e = 0; e < n; ++e) values[e] = instance.dist(e).atoms()[0].value;
  std::vector<size_t> idx(vary.size(), 0);
  int64_t count = 0;
  while (true) {
    double prob = 1.0;
    for (size_t t = 0; t < vary.size(); ++t) {
      const Atom& a = instance.dist(vary[t]).atoms()[idx[t]];
      values[vary[t]] = a.value;
      prob *= a.prob;
    }
    fn(std::span<const double>(values), prob);
    ++count;
    size_t t = 0;
    while (t < vary.size()) {
      if (++idx[t] < instance.dist(vary[t]).atoms().size()) break;
      idx[t] = 0;
      ++t;
    }
    if (t == vary.size()) break;
  }
  return count;
}

SolveResult AwareOpt(const Instance& instance, const ArrivalOrder& order,
                     const SolverLimits& limits) {
  if (instance.feasibility().kind() == OracleKind::kTreePath) {
    return OptAwareTreeExact(instance, order);
  }
  return OptAwareExact(instance, order, limits);
}

}  // namespace

SolveResult OptAwareExact(const Instance& instance, const ArrivalOrder& order,
                          const SolverLimits& limits) {
  return RunAware(instance, order, limits, true);
}

SolveResult OptAwareExactNoMemo(const Instance& instance,
                                const ArrivalOrder& order,
                                const SolverLimits& limits) {
  return RunAware(instance, order, limits, false);
}

UnawareResult OptUnawareExact(const Instance& instance,
                              std::span<const WeightedOrder> orders,
                              const SolverLimits& limits) {
  Stopwatch sw;
  CheckSize(instance, limits.max_elements_unaware, "opt_unaware_exact");
  if (orders.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no orders given");
  }
  if (static_cast<int>(orders.size()) > limits.max_orders) {
    throw Error(ErrorCode::kTooLarge,
                std::to_string(orders.size()) + " orders exceed the limit of " +
                    std::to_string(limits.max_orders));
  }
  double total = 0.0;
  for (const WeightedOrder& w : orders) {
    ValidateOrder(w.order, instance.size());
    if (!(w.weight > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "order weights must be positive");
    }
    total += w.weight;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "order weights do not sum to 1");
  }
  Trie trie(orders);
  UnawareDp dp(instance, trie, limits);
  UnawareResult r;
  r.total.value = dp.Solve(0);
  for (size_t o = 0; o < orders.size(); ++o) {
    r.per_order.push_back(dp.Evaluate(static_cast<int>(o)));
  }
  r.total.states_expanded = dp.expanded();
  r.total.wall_time_ms = sw.ms();
  return r;
}

SolveResult ProphetExact(const Instance& instance, const SolverLimits& limits) {
  Stopwatch sw;
  const FeasibilityOracle& oracle = instance.feasibility();
  double acc = 0.0;
  SolveResult r;
  r.states_expanded = EnumerateRealizations(
      instance, limits.max_states, [&](std::span<const double> v, double p) {
        if (p > 0.0) acc += p * oracle.MaxWeight(v);
      });
  r.value = acc;
  r.wall_time_ms = sw.ms();
  return r;
}

double ExhaustivePolicySearch(const Instance& instance,
                              std::span<const WeightedOrder> orders) {
  const int n = instance.size();
  if (n > 8 || orders.size() > 8 || orders.empty()) {
    throw Error(ErrorCode::kTooLarge,
                "exhaustive search needs n <= 8 and 1..8 orders");
  }
  for (const ValueDistribution& d : instance.dists()) {
    if (d.atoms().size() > 2) {
      throw Error(ErrorCode::kTooLarge, "exhaustive search needs binary supports");
    }
  }
  const std::vector<uint32_t> family = MaterializeFamily(instance.feasibility());

  struct World {
    int order;
    std::vector<int> atom;  // atom index per element
    double prob;
  };
  std::vector<World> worlds;
  for (size_t o = 0; o < orders.size(); ++o) {
    ValidateOrder(orders[o].order, n);
    std::vector<int> idx(n, 0);
    while (true) {
      double p = orders[o].weight;
      for (int e = 0; e < n; ++e) p *= instance.dist(e).atoms()[idx[e]].prob;
      if (p > 0.0) worlds.push_back({static_cast<int>(o), idx, p});
      int e = 0;
      while (e < n) {
        if (++idx[e] < static_cast<int>(instance.dist(e).atoms().size())) break;
        idx[e] = 0;
        ++e;
      }
      if (e == n) break;
    }
  }

  auto extendable = [&](uint32_t sel, uint32_t dis) {
    for (uint32_t t : family) {
      if ((t & sel) == sel && (t & dis) == 0) return true;
    }
    return false;
  };

  // Worlds in `ids` share the observed history up to step t. Each class of
  // the next observation is an information set with its own best action.
  auto search = [&](auto&& self, const std::vector<int>& ids, int t,
                    uint32_t sel, uint32_t dis) -> double {
    if (t == n) return 0.0;
    std::map<std::pair<ElementId, int>, std::vector<int>> classes;
    for (int w : ids) {
      const ElementId e = orders[worlds[w].order].order.sequence[t];
      classes[{e, worlds[w].atom[e]}].push_back(w);
    }
    double total = 0.0;
    for (const auto& [obs, members] : classes) {
      const auto [e, atom] = obs;
      const uint32_t bit = uint32_t{1} << e;
      double mass = 0.0;
      for (int w : members) mass += worlds[w].prob;
      const double v = instance.dist(e).atoms()[atom].value;
      double best = kNegInf;
      if (extendable(sel | bit, dis)) {
        best = std::max(best, v * mass + self(self, members, t + 1, sel | bit, dis));
      }
      if (extendable(sel, dis | bit)) {
        best = std::max(best, self(self, members, t + 1, sel, dis | bit));
      }
      if (best == kNegInf) {
        throw Error(ErrorCode::kInconsistentState, "no extendable action");
      }
      total += best;
    }
    return total;
  };
  std::vector<int> all(worlds.size());
  for (size_t w = 0; w < worlds.size(); ++w) all[w] = static_cast<int>(w);
  return search(search, all, 0, 0, 0);
}

double EvaluatePolicyExact(const PolicyFactory& factory,
                           const Instance& instance, const ArrivalOrder& order,
                           const std::vector<char>* good, uint64_t seed,
                           const SolverLimits& limits) {
  ValidateOrder(order, instance.size());
  Knowledge knowledge;
  if (factory.order_aware()) {
    knowledge = AwareKnowledge{&order, good};
  } else {
    knowledge = UnawareKnowledge{&instance.orders()};
  }
  DecisionState scratch(instance.size());
  double acc = 0.0;
  EnumerateRealizations(
      instance, limits.max_states, [&](std::span<const double> v, double p) {
        if (p == 0.0) return;
        auto policy = factory.Create(instance, knowledge,
                                     CounterRng(seed, 0, Stream::kPolicy));
        acc += p * RunPolicyTotal(*policy, instance, order, v, scratch);
      });
  return acc;
}

namespace {

RatioReport BuildRatioReport(const Instance& instance,
                             std::span<const WeightedOrder> orders,
                             const std::vector<double>& alg,
                             const SolverLimits& limits) {
  RatioReport rep;
  rep.prophet = ProphetExact(instance, limits).value;
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_alg = std::numeric_limits<double>::infinity();
  for (size_t o = 0; o < orders.size(); ++o) {
    OrderRatio r;
    r.weight = orders[o].weight;
    r.alg = alg[o];
    r.opt = AwareOpt(instance, orders[o].order, limits).value;
    if (r.opt > kTolerance) {
      r.ratio = r.alg / r.opt;
      min_ratio = std::min(min_ratio, *r.ratio);
    } else {
      rep.warnings.push_back("order " + std::to_string(o) +
                             " has OPT = 0; excluded from the minimum");
    }
    min_alg = std::min(min_alg, r.alg);
    rep.per_order.push_back(r);
  }
  if (!std::isfinite(min_ratio)) {
    throw Error(ErrorCode::kDivisionByZeroOpt,
                "OPT is zero on every order; the ratio is undefined");
  }
  rep.min_ratio = min_ratio;
  rep.xi = min_alg / rep.prophet;
  return rep;
}

}  // namespace

RatioReport RatioExact(const Instance& instance,
                       std::span<const WeightedOrder> orders,
                       const PolicyFactory& factory, uint64_t seed,
                       const SolverLimits& limits) {
  std::vector<double> alg;
  for (const WeightedOrder& w : orders) {
    alg.push_back(
        EvaluatePolicyExact(factory, instance, w.order, nullptr, seed, limits));
  }
  return BuildRatioReport(instance, orders, alg, limits);
}

RatioReport RatioOfUnawareOptimum(const Instance& instance,
                                  std::span<const WeightedOrder> orders,
                                  const SolverLimits& limits) {
  const UnawareResult u = OptUnawareExact(instance, orders, limits);
  return BuildRatioReport(instance, orders, u.per_order, limits);
}

SolveResult OptAwareTreeExact(const Instance& instance,
                              const ArrivalOrder& order) {
  Stopwatch sw;
  const TreePathOracle& tree = TreeOracleOf(instance);
  const int n = instance.size();
  if (n > 5000) {
    throw Error(ErrorCode::kTooLarge, "tree DP is quadratic; n > 5000");
  }
  ValidateOrder(order, n);
  // next[d + 1]: value from position t + 1 on when d is the deepest selected
  // element (-1 for none).
  std::vector<double> next(n + 1, 0.0);
  std::vector<double> cur(n + 1, 0.0);
  for (int t = n - 1; t >= 0; --t) {
    const ElementId e = order.sequence[t];
    const auto atoms = instance.dist(e).atoms();
    for (int slot = 0; slot <= n; ++slot) {
      const ElementId d = slot - 1;
      const bool can = d == -1 || (d != e && tree.Comparable(e, d));
      const ElementId deeper =
          (d == -1 || tree.depth(e) > tree.depth(d)) ? e : d;
      double v = 0.0;
      for (const Atom& a : atoms) {
        const double take = can ? a.value + next[deeper + 1] : kNegInf;
        v += a.prob * std::max(next[slot], take);
      }
      cur[slot] = v;
    }
    std::swap(cur, next);
  }
  SolveResult r;
  r.value = next[0];
  r.states_expanded = int64_t{n} * (n + 1);
  r.wall_time_ms = sw.ms();
  return r;
}

}  // namespace ocrlab
