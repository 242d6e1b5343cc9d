#include "ocrlab/constructions.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <set>
#include <string>

#include "ocrlab/error.h"

namespace ocrlab {
namespace {

constexpr int64_t kDefaultElementCap = int64_t{1} << 20;

void CheckCap(int64_t n, const std::string& what) {
  const int64_t cap = ElementCap();
  if (n > cap) {
    throw Error(ErrorCode::kTooLarge, what + " needs " + std::to_string(n) +
                                          " elements; cap is " +
                                          std::to_string(cap));
  }
}

std::string Num(double x) {
  // Shortest representation that round-trips.
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string JoinInts(const std::vector<int64_t>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

// Uniform m-subset of [0, size) by partial Fisher-Yates, sorted.
std::vector<int> RandomSubset(int size, int m, CounterRng& rng) {
  std::vector<int> pool(size);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.UniformInt(size - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double Binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

int64_t ElementCap() {
  if (const char* env = std::getenv("OCRLAB_ELEMENT_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad OCRLAB_ELEMENT_CAP: ") + env);
  }
  return kDefaultElementCap;
}

// ---------------------------------------------------------------------------
// Tree

Instance BuildTreeInstance(int k) {
  if (k < 2 || k % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "tree needs an even k >= 2");
  }
  std::vector<int64_t> layers;
  int64_t n = 0;
  int64_t layer = 1;
  for (int i = 1; i <= k; ++i) {
    if (layer > ElementCap()) CheckCap(layer, "tree k=" + std::to_string(k));
    layer *= k;
    layers.push_back(layer);
    n += layer;
  }
  CheckCap(n, "tree k=" + std::to_string(k));
  auto oracle =
      std::make_shared<TreePathOracle>(TreePathOracle::Canonical(k));
  std::vector<ValueDistribution> dists(
      n, ValueDistribution::Bernoulli(1.0 / k));

  // Number of distinct orders: C(k, k/2) per node of depth <= k - 3.
  int64_t nodes = 1;
  int64_t width = 1;
  for (int d = 1; d <= k - 3; ++d) {
    width *= k;
    nodes += width;
  }
  const double choices = Binomial(k, k / 2);
  const double log_bound = (k >= 4 ? nodes : 0) * std::log2(choices);
  const int64_t bound =
      log_bound >= 62 ? INT64_MAX
                      : static_cast<int64_t>(std::llround(std::exp2(log_bound)));

  std::map<std::string, std::string> meta = {
      {"construction", "tree"},
      {"k", std::to_string(k)},
      {"n", std::to_string(n)},
      {"layer_sizes", JoinInts(layers)},
      {"order_generator", "tree"},
      {"order_enumeration_bound", std::to_string(bound)},
  };
  return Instance("tree-k" + std::to_string(k), std::move(dists),
                  std::move(oracle),
                  OrderDistribution(OrderDistribution::Generative{"tree", bound}),
                  std::move(meta));
}

const TreePathOracle& TreeOracleOf(const Instance& instance) {
  const auto* tree =
      dynamic_cast<const TreePathOracle*>(&instance.feasibility());
  if (!tree) {
    throw Error(ErrorCode::kWrongKind,
                "instance '" + instance.name() + "' is not a tree instance");
  }
  return *tree;
}

namespace {

class TreeOrderBuilder {
 public:
  TreeOrderBuilder(const TreePathOracle& tree, const std::vector<uint64_t>& r,
                   std::vector<ElementId>& out)
      : tree_(tree), r_(r), out_(out), k_(tree.k()) {}

  int depth(ElementId s) const { return s == -1 ? 0 : tree_.depth(s); }

  // pi_0(s): descendants deepest level first, each level lexicographic.
  void EmitPi0(ElementId s) {
    std::vector<std::vector<ElementId>> levels;
    std::vector<ElementId> level(tree_.children(s).begin(),
                                 tree_.children(s).end());
    while (!level.empty()) {
      std::vector<ElementId> next;
      for (ElementId e : level) {
        auto ch = tree_.children(e);
        next.insert(next.end(), ch.begin(), ch.end());
      }
      levels.push_back(std::move(level));
      level = std::move(next);
    }
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      out_.insert(out_.end(), it->begin(), it->end());
    }
  }

  void EmitPi1(ElementId s) {
    auto ch = tree_.children(s);
    out_.insert(out_.end(), ch.begin(), ch.end());
    if (depth(s) == k_ - 2) {
      for (ElementId c : ch) EmitPi0(c);
      return;
    }
    const uint64_t rs = r_[s + 1];
    for (ElementId c : ch) {
      if (rs >> (tree_.last_char(c) - 1) & 1) {
        EmitPi1(c);
      } else {
        EmitPi0(c);
      }
    }
  }

 private:
  const TreePathOracle& tree_;
  const std::vector<uint64_t>& r_;
  std::vector<ElementId>& out_;
  int k_;
};

}  // namespace

TreeOrderRealization TreeOrderFromSubsets(const TreePathOracle& tree,
                                          std::vector<uint64_t> r) {
  const int n = tree.num_elements();
  const int k = tree.k();
  if (static_cast<int>(r.size()) != n + 1) {
    throw Error(ErrorCode::kInvalidArgument, "r must have n + 1 entries");
  }
  auto in_domain = [&](int idx) {
    return idx == 0 || tree.depth(idx - 1) <= k - 3;
  };
  const uint64_t all = k >= 64 ? ~uint64_t{0} : (uint64_t{1} << k) - 1;
  for (int idx = 0; idx <= n; ++idx) {
    const bool need = k >= 4 && in_domain(idx);
    if (need ? (std::popcount(r[idx]) != k / 2 || (r[idx] & ~all))
             : r[idx] != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "r entry " + std::to_string(idx) + " is not a k/2-subset");
    }
  }

  TreeOrderRealization out;
  out.order.sequence.reserve(n);
  TreeOrderBuilder(tree, r, out.order.sequence).EmitPi1(-1);

  out.good.assign(n, 0);
  // Parents precede children in the canonical order of depth, so a pass by
  // depth fills labels top-down.
  std::vector<ElementId> by_depth(n);
  std::iota(by_depth.begin(), by_depth.end(), 0);
  std::stable_sort(by_depth.begin(), by_depth.end(), [&](ElementId x, ElementId y) {
    return tree.depth(x) < tree.depth(y);
  });
  for (ElementId e : by_depth) {
    const ElementId p = tree.parent(e);
    const bool parent_good = p == -1 || out.good[p];
    if (tree.depth(e) <= k - 2) {
      out.good[e] = parent_good && (r[p + 1] >> (tree.last_char(e) - 1) & 1);
    } else {
      out.good[e] = parent_good;
    }
  }
  out.r = std::move(r);
  return out;
}

TreeOrderRealization SampleTreeOrder(const TreePathOracle& tree,
                                     CounterRng rng) {
  const int n = tree.num_elements();
  const int k = tree.k();
  std::vector<uint64_t> r(n + 1, 0);
  if (k >= 4) {
    for (int idx = 0; idx <= n; ++idx) {
      if (idx > 0 && tree.depth(idx - 1) > k - 3) continue;
      uint64_t mask = 0;
      for (int c : RandomSubset(k, k / 2, rng)) mask |= uint64_t{1} << c;
      r[idx] = mask;
    }
  }
  return TreeOrderFromSubsets(tree, std::move(r));
}

TreeOrderRealization SampleTreeOrder(const Instance& instance,
                                     CounterRng rng) {
  return SampleTreeOrder(TreeOracleOf(instance), rng);
}

// ---------------------------------------------------------------------------
// U-family

UFamilyReport VerifyUFamily(const UFamily& family) {
  UFamilyReport rep;
  const double log_n = std::log2(static_cast<double>(family.n));
  rep.size_lo = log_n;
  rep.size_hi = (2.0 * family.alpha + 1.0) * log_n;
  rep.membership_cap = 2.0 * (family.alpha + 1.0) *
                       std::exp2(family.k1) * log_n / family.k3;

  const int m = static_cast<int>(family.sets.size());
  for (int i = 0; i < m && rep.size_ok; ++i) {
    const int size = static_cast<int>(family.sets[i].size());
    if (size < rep.size_lo - kTolerance || size > rep.size_hi + kTolerance) {
      rep.size_ok = false;
      rep.size_witness = UFamilyReport::SizeWitness{i, size};
    }
  }

  std::vector<int> count(family.k3, 0);
  for (const auto& s : family.sets) {
    for (int c : s) {
      if (c < 0 || c >= family.k3) {
        throw Error(ErrorCode::kInvalidArgument,
                    "U-set element " + std::to_string(c) + " outside C");
      }
      ++count[c];
    }
  }
  for (int c = 0; c < family.k3; ++c) {
    if (count[c] > rep.membership_cap + kTolerance) {
      rep.membership_ok = false;
      rep.membership_witness = UFamilyReport::MembershipWitness{c, count[c]};
      break;
    }
  }

  std::vector<std::vector<char>> member(m, std::vector<char>(family.k3, 0));
  for (int i = 0; i < m; ++i) {
    for (int c : family.sets[i]) member[i][c] = 1;
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      int inter = 0;
      for (int c : family.sets[j]) inter += member[i][c];
      if (rep.intersection_ok && inter > family.alpha) {
        rep.intersection_ok = false;
        rep.intersection_witness =
            UFamilyReport::IntersectionWitness{i, j, inter};
      }
      if (rep.distinct_ok && inter == static_cast<int>(family.sets[i].size()) &&
          inter == static_cast<int>(family.sets[j].size())) {
        rep.distinct_ok = false;
        rep.duplicate_witness = UFamilyReport::DuplicateWitness{i, j};
      }
    }
  }
  return rep;
}

UFamily BuildUFamily(int64_t n, int alpha, int k1, int k3, CounterRng rng,
                     int max_attempts) {
  if (n < 2 || alpha < 0 || k1 < 0 || k1 > NestedPhaseOracle::kMaxAClass ||
      k3 < 1 || max_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad U-family parameters");
  }
  // Outside the regime the proof covers the rate can exceed 1; it is clamped
  // and the verifier decides.
  const double p =
      std::min(1.0, (alpha + 1.0) * std::log2(static_cast<double>(n)) / k3);
  UFamily fam;
  fam.n = n;
  fam.alpha = alpha;
  fam.k1 = k1;
  fam.k3 = k3;
  const int m = 1 << k1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    fam.sets.assign(m, {});
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < k3; ++c) {
        if (rng.Uniform() < p) fam.sets[i].push_back(c);
      }
    }
    fam.attempts = attempt;
    if (VerifyUFamily(fam).ok()) return fam;
  }
  throw Error(ErrorCode::kExhaustedAttempts,
              "no valid U-family after " + std::to_string(max_attempts) +
                  " attempts (n=" + std::to_string(n) +
                  ", k1=" + std::to_string(k1) + ", k3=" + std::to_string(k3) +
                  ", alpha=" + std::to_string(alpha) + ", rate=" + Num(p) +
                  ")");
}

// ---------------------------------------------------------------------------
// A/B/C instance

namespace {

Instance MakeNestedInstance(std::string name, int k1, int k2, int k3,
                            const std::vector<std::vector<int>>& u_pos,
                            double q,
                            std::map<std::string, std::string> meta) {
  const int64_t n = int64_t{k1} + k2 + k3;
  CheckCap(n, name);
  NestedPhaseParams params;
  for (int t = 0; t < k1; ++t) params.a.push_back(t);
  for (int t = 0; t < k2; ++t) params.b.push_back(k1 + t);
  for (int t = 0; t < k3; ++t) params.c.push_back(k1 + k2 + t);

  const int m = 1 << k1;
  std::vector<WeightedOrder> orders;
  orders.reserve(m);
  for (int i = 0; i < m; ++i) {
    std::vector<ElementId> v;
    for (int t = 0; t < k1; ++t) {
      if (i >> t & 1) v.push_back(params.a[t]);
    }
    params.v.push_back(std::move(v));

    const auto& up = u_pos[i];
    const int usize = static_cast<int>(up.size());
    if (usize < 31 && (int64_t{1} << usize) < k2) {
      throw Error(ErrorCode::kEncodingOverflow,
                  "|U_" + std::to_string(i) + "| = " + std::to_string(usize) +
                      " cannot encode " + std::to_string(k2) + " B elements");
    }
    std::vector<ElementId> u;
    for (int c : up) u.push_back(params.c[c]);
    std::vector<std::vector<ElementId>> fi(k2);
    for (int j = 0; j < k2; ++j) {
      for (int bit = 0; bit < usize && bit < 31; ++bit) {
        if (j >> bit & 1) fi[j].push_back(u[bit]);
      }
    }
    params.f.push_back(std::move(fi));

    ArrivalOrder pi;
    pi.sequence = params.a;
    std::vector<char> in_u(k3, 0);
    for (int c : up) in_u[c] = 1;
    for (int c = 0; c < k3; ++c) {
      if (!in_u[c]) pi.sequence.push_back(params.c[c]);
    }
    pi.sequence.insert(pi.sequence.end(), params.b.begin(), params.b.end());
    pi.sequence.insert(pi.sequence.end(), u.begin(), u.end());
    orders.push_back({std::move(pi), 1.0 / m});
    params.u.push_back(std::move(u));
  }

  std::vector<ValueDistribution> dists;
  dists.reserve(n);
  for (int t = 0; t < k1; ++t) dists.push_back(ValueDistribution::Deterministic(0));
  for (int t = 0; t < k2; ++t) dists.push_back(ValueDistribution::Bernoulli(q));
  for (int t = 0; t < k3; ++t) dists.push_back(ValueDistribution::Deterministic(0));

  meta["construction"] = "nested";
  meta["k1"] = std::to_string(k1);
  meta["k2"] = std::to_string(k2);
  meta["k3"] = std::to_string(k3);
  meta["q"] = Num(q);
  return Instance(std::move(name), std::move(dists),
                  std::make_shared<NestedPhaseOracle>(std::move(params)),
                  OrderDistribution(std::move(orders)), std::move(meta));
}

}  // namespace

Instance BuildNestedInstance(int x, uint64_t seed, int alpha,
                             int max_attempts) {
  if (x < 1 || x > 15) {
    throw Error(ErrorCode::kInvalidArgument, "x out of range");
  }
  const int64_t n = int64_t{1} << (2 * x);
  CheckCap(n, "nested x=" + std::to_string(x));
  const int k1 = 4 * x;
  const int k3 = 1 << x;
  const int64_t k2 = n - k3 - k1;
  if (k2 < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "x=" + std::to_string(x) + " leaves no B elements");
  }
  if (k1 > NestedPhaseOracle::kMaxAClass) {
    throw Error(ErrorCode::kTooLarge, "k1 = " + std::to_string(k1) +
                                          " exceeds the A-class cap");
  }
  UFamily fam = BuildUFamily(n, alpha, k1, k3,
                             CounterRng(seed, 0, Stream::kConstruction),
                             max_attempts);
  std::map<std::string, std::string> meta = {
      {"x", std::to_string(x)},
      {"seed", std::to_string(seed)},
      {"alpha", std::to_string(alpha)},
      {"u_attempts", std::to_string(fam.attempts)},
      {"asymptotic", "true"},
  };
  const double q = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  return MakeNestedInstance("nested-x" + std::to_string(x), k1,
                            static_cast<int>(k2), k3, fam.sets, q,
                            std::move(meta));
}

Instance BuildNestedInstance(const NestedScaledParams& p, uint64_t seed) {
  if (p.k1 < 0 || p.k1 > NestedPhaseOracle::kMaxAClass || p.k2 < 1 ||
      p.k3 < 1 || p.u_size < 0 || p.u_size > p.k3 || !(p.q >= 0 && p.q <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "bad scaled nested parameters");
  }
  const int m = 1 << p.k1;
  std::vector<std::vector<int>> u_pos(m);
  std::string layout;
  if (int64_t{m} * p.u_size <= p.k3) {
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < p.u_size; ++t) u_pos[i].push_back(i * p.u_size + t);
    }
    layout = "disjoint";
  } else {
    if (Binomial(p.k3, p.u_size) < m) {
      throw Error(ErrorCode::kInvalidArgument,
                  "C has fewer than 2^k1 distinct subsets of size u_size");
    }
    CounterRng rng(seed, 0, Stream::kConstruction);
    std::set<std::vector<int>> seen;
    for (int i = 0; i < m; ++i) {
      do {
        u_pos[i] = RandomSubset(p.k3, p.u_size, rng);
      } while (!seen.insert(u_pos[i]).second);
    }
    layout = "random";
  }
  std::map<std::string, std::string> meta = {
      {"seed", std::to_string(seed)},
      {"u_size", std::to_string(p.u_size)},
      {"u_layout", layout},
      {"asymptotic", "false"},
  };
  return MakeNestedInstance("nested-scaled", p.k1, p.k2, p.k3, u_pos, p.q,
                            std::move(meta));
}

const NestedPhaseOracle& NestedOracleOf(const Instance& instance) {
  const auto* o =
      dynamic_cast<const NestedPhaseOracle*>(&instance.feasibility());
  if (!o) {
    throw Error(ErrorCode::kWrongKind,
                "instance '" + instance.name() + "' is not a nested instance");
  }
  return *o;
}

// ---------------------------------------------------------------------------
// Multi-unit and calibration

Instance BuildMultiunitInstance(int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "multiunit needs k >= 1");
  CheckCap(int64_t{4} * k, "multiunit k=" + std::to_string(k));
  std::vector<ValueDistribution> dists;
  dists.reserve(4 * k);
  for (int i = 0; i < k; ++i) dists.push_back(ValueDistribution::Deterministic(1.75));
  for (int i = 0; i < k; ++i) dists.push_back(ValueDistribution::Deterministic(1.0));
  for (int i = 0; i < 2 * k; ++i) {
    dists.push_back(ValueDistribution::Bernoulli(0.5, 2.0, 0.0));
  }
  ArrivalOrder pi1 = IdentityOrder(4 * k);
  ArrivalOrder pi2;
  pi2.sequence.reserve(4 * k);
  for (int i = 0; i < k; ++i) pi2.sequence.push_back(i);
  for (int i = 2 * k; i < 4 * k; ++i) pi2.sequence.push_back(i);
  for (int i = k; i < 2 * k; ++i) pi2.sequence.push_back(i);
  std::vector<WeightedOrder> orders = {{std::move(pi1), 0.5},
                                       {std::move(pi2), 0.5}};
  return Instance("multiunit-k" + std::to_string(k), std::move(dists),
                  std::make_shared<KUniformOracle>(4 * k, k),
                  OrderDistribution(std::move(orders)),
                  {{"construction", "multiunit"}, {"k", std::to_string(k)}});
}

Instance BuildPartitionInstance(int blocks, int block_size, double p) {
  if (blocks < 1 || block_size < 1 || !(p >= 0 && p <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "bad partition parameters");
  }
  const int64_t n = int64_t{blocks} * block_size;
  CheckCap(n, "partition");
  std::vector<std::vector<ElementId>> parts(blocks);
  for (int b = 0; b < blocks; ++b) {
    for (int t = 0; t < block_size; ++t) parts[b].push_back(b * block_size + t);
  }
  std::vector<ValueDistribution> dists(n, ValueDistribution::Bernoulli(p));
  std::vector<WeightedOrder> orders = {{IdentityOrder(static_cast<int>(n)), 1.0}};
  return Instance("partition", std::move(dists),
                  std::make_shared<PartitionOneBlockOracle>(std::move(parts)),
                  OrderDistribution(std::move(orders)),
                  {{"construction", "partition"},
                   {"blocks", std::to_string(blocks)},
                   {"block_size", std::to_string(block_size)},
                   {"p", Num(p)}});
}

Instance BuildPartitionInstance(int kappa) {
  if (kappa < 1 || kappa > 5) {
    throw Error(kappa > 5 ? ErrorCode::kTooLarge : ErrorCode::kInvalidArgument,
                "kappa out of range");
  }
  const int64_t size = int64_t{1} << kappa;
  const int64_t log_n = size;  // n = 2^(2^kappa)
  if (log_n >= 62) throw Error(ErrorCode::kTooLarge, "partition kappa too large");
  CheckCap(int64_t{1} << log_n, "partition kappa=" + std::to_string(kappa));
  const int blocks = static_cast<int>(int64_t{1} << (log_n - kappa));
  return BuildPartitionInstance(blocks, static_cast<int>(size),
                                1.0 / static_cast<double>(size));
}

Instance BuildPairsInstance(int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "pairs needs k >= 1");
  CheckCap(int64_t{2} * k, "pairs");
  std::vector<ValueDistribution> dists;
  for (int i = 0; i < k; ++i) dists.push_back(ValueDistribution::Deterministic(0));
  for (int i = 0; i < k; ++i) {
    dists.push_back(ValueDistribution::Bernoulli(1.0 / (2.0 * k)));
  }
  std::vector<WeightedOrder> orders = {{IdentityOrder(2 * k), 1.0}};
  return Instance("pairs-k" + std::to_string(k), std::move(dists),
                  std::make_shared<PairMatchOracle>(k),
                  OrderDistribution(std::move(orders)),
                  {{"construction", "pairs"}, {"k", std::to_string(k)}});
}

}  // namespace ocrlab
