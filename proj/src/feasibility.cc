#include "ocrlab/feasibility.h"

#include <algorithm>
#include <bit>
#include <numeric>
#include <unordered_set>

#include "ocrlab/error.h"

namespace ocrlab {

namespace {

struct PinnedSets {
  uint64_t selected;
  uint64_t discarded;
};

// Only valid for oracles with n <= 64.
PinnedSets ToMasks(const DecisionState& state, std::optional<Pin> pin) {
  PinnedSets m{IdsToMask(state.selected()), IdsToMask(state.discarded())};
  if (pin) {
    (pin->in ? m.selected : m.discarded) |= uint64_t{1} << pin->element;
  }
  return m;
}

}  // namespace

std::string_view OracleKindName(OracleKind kind) {
  switch (kind) {
    case OracleKind::kExplicitFamily: return "explicit_family";
    case OracleKind::kKUniform: return "k_uniform";
    case OracleKind::kTreePath: return "tree_path";
    case OracleKind::kNestedPhase: return "nested_phase";
    case OracleKind::kPartitionOneBlock: return "partition_one_block";
    case OracleKind::kPairMatch: return "pair_match";
  }
  return "unknown";
}

OracleKind ParseOracleKind(std::string_view name) {
  for (OracleKind k :
       {OracleKind::kExplicitFamily, OracleKind::kKUniform,
        OracleKind::kTreePath, OracleKind::kNestedPhase,
        OracleKind::kPartitionOneBlock, OracleKind::kPairMatch}) {
    if (OracleKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kParseError,
              "unknown feasibility kind '" + std::string(name) + "'");
}

std::vector<ElementId> MaskToIds(uint64_t mask) {
  std::vector<ElementId> ids;
  while (mask) {
    ids.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
  return ids;
}

uint64_t IdsToMask(std::span<const ElementId> ids) {
  uint64_t m = 0;
  for (ElementId e : ids) m |= uint64_t{1} << e;
  return m;
}

// ---------------------------------------------------------------------------
// Base

void FeasibilityOracle::CheckElement(ElementId e) const {
  if (e < 0 || e >= num_elements()) {
    throw Error(ErrorCode::kUnknownElement,
                "element " + std::to_string(e) + " not in [0, " +
                    std::to_string(num_elements()) + ")");
  }
}

bool FeasibilityOracle::CanExtend(const DecisionState& state,
                                  std::optional<Pin> pin) const {
  if (state.size() != num_elements()) {
    throw Error(ErrorCode::kUnknownElement,
                "state covers " + std::to_string(state.size()) +
                    " elements, oracle " + std::to_string(num_elements()));
  }
  if (pin) {
    CheckElement(pin->element);
    const Mark m = state.mark(pin->element);
    if (m == Mark::kSelected) return pin->in && CanExtendImpl(state, {});
    if (m == Mark::kDiscarded) return !pin->in && CanExtendImpl(state, {});
  }
  return CanExtendImpl(state, pin);
}

ActionSet FeasibilityOracle::Allowed(const DecisionState& state,
                                     ElementId e) const {
  return ActionSet{.discard = CanExtend(state, Pin{e, false}),
                   .select = CanExtend(state, Pin{e, true})};
}

std::vector<uint32_t> MaterializeFamily(const FeasibilityOracle& oracle) {
  const int n = oracle.num_elements();
  if (n > ExplicitFamilyOracle::kMaxElements) {
    throw Error(ErrorCode::kTooLarge,
                "cannot materialize a family over " + std::to_string(n) +
                    " elements");
  }
  std::vector<uint32_t> family;
  for (uint64_t m = 0; m < (uint64_t{1} << n); ++m) {
    const std::vector<ElementId> ids = MaskToIds(m);
    if (oracle.Contains(ids)) family.push_back(static_cast<uint32_t>(m));
  }
  return family;
}

// ---------------------------------------------------------------------------
// ExplicitFamily

ExplicitFamilyOracle::ExplicitFamilyOracle(
    int n, std::vector<std::vector<ElementId>> sets)
    : n_(n) {
  if (n < 1 || n > kMaxElements) {
    throw Error(ErrorCode::kTooLarge,
                "explicit family supports 1.." + std::to_string(kMaxElements) +
                    " elements, got " + std::to_string(n));
  }
  for (const auto& set : sets) {
    uint32_t m = 0;
    for (ElementId e : set) {
      CheckElement(e);
      m |= uint32_t{1} << e;
    }
    masks_.push_back(m);
  }
  std::sort(masks_.begin(), masks_.end());
  masks_.erase(std::unique(masks_.begin(), masks_.end()), masks_.end());
  if (masks_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "feasibility family is empty");
  }
  downward_closed_ = IsDownwardClosed(masks_);
}

ExplicitFamilyOracle ExplicitFamilyOracle::FromMasks(
    int n, std::vector<uint32_t> masks) {
  std::vector<std::vector<ElementId>> sets;
  sets.reserve(masks.size());
  for (uint32_t m : masks) sets.push_back(MaskToIds(m));
  return ExplicitFamilyOracle(n, std::move(sets));
}

bool ExplicitFamilyOracle::CanExtendImpl(const DecisionState& state,
                                         std::optional<Pin> pin) const {
  const PinnedSets p = ToMasks(state, pin);
  for (uint32_t t : masks_) {
    if ((t & p.selected) == p.selected && (t & p.discarded) == 0) return true;
  }
  return false;
}

bool ExplicitFamilyOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  const auto m = static_cast<uint32_t>(IdsToMask(set));
  return std::binary_search(masks_.begin(), masks_.end(), m);
}

double ExplicitFamilyOracle::MaxWeight(std::span<const double> values) const {
  double best = -1.0;
  for (uint32_t t : masks_) {
    double s = 0.0;
    for (uint32_t m = t; m; m &= m - 1) s += values[std::countr_zero(m)];
    best = std::max(best, s);
  }
  return best;
}

nlohmann::json ExplicitFamilyOracle::ParamsJson() const {
  nlohmann::json sets = nlohmann::json::array();
  for (uint32_t m : masks_) sets.push_back(MaskToIds(m));
  return {{"n", n_}, {"sets", sets}};
}

bool IsDownwardClosed(std::span<const uint32_t> masks) {
  const std::unordered_set<uint32_t> family(masks.begin(), masks.end());
  // Closure under single-element removal implies closure under subsets.
  for (uint32_t t : masks) {
    for (uint32_t m = t; m; m &= m - 1) {
      const uint32_t smaller = t & ~(m & -m);
      if (!family.contains(smaller)) return false;
    }
  }
  return true;
}

bool IsDownwardClosed(const FeasibilityOracle& oracle) {
  const auto* explicit_family =
      dynamic_cast<const ExplicitFamilyOracle*>(&oracle);
  if (explicit_family == nullptr) {
    throw Error(ErrorCode::kWrongKind,
                std::string(OracleKindName(oracle.kind())) +
                    " is downward-closed by construction: " +
                    (oracle.downward_closed() ? "yes" : "no"));
  }
  return IsDownwardClosed(explicit_family->masks());
}

// ---------------------------------------------------------------------------
// KUniform

KUniformOracle::KUniformOracle(int n, int k) : n_(n), k_(k) {
  if (n < 1 || k < 0) {
    throw Error(ErrorCode::kInvalidArgument, "k-uniform needs n >= 1, k >= 0");
  }
}

bool KUniformOracle::CanExtendImpl(const DecisionState& state,
                                   std::optional<Pin> pin) const {
  const size_t extra = (pin && pin->in) ? 1 : 0;
  return state.selected().size() + extra <= static_cast<size_t>(k_);
}

ActionSet KUniformOracle::Allowed(const DecisionState& state,
                                  ElementId e) const {
  CheckElement(e);
  const size_t used = state.selected().size();
  const size_t cap = static_cast<size_t>(k_);
  return ActionSet{.discard = used <= cap, .select = used < cap};
}

bool KUniformOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  return set.size() <= static_cast<size_t>(k_);
}

double KUniformOracle::MaxWeight(std::span<const double> values) const {
  std::vector<double> v(values.begin(), values.end());
  const size_t take = std::min(v.size(), static_cast<size_t>(k_));
  std::partial_sort(v.begin(), v.begin() + take, v.end(), std::greater<>());
  double s = 0.0;
  for (size_t i = 0; i < take; ++i) s += std::max(v[i], 0.0);
  return s;
}

nlohmann::json KUniformOracle::ParamsJson() const {
  return {{"n", n_}, {"k", k_}};
}

// ---------------------------------------------------------------------------
// PartitionOneBlock

PartitionOneBlockOracle::PartitionOneBlockOracle(
    std::vector<std::vector<ElementId>> blocks)
    : blocks_(std::move(blocks)) {
  n_ = 0;
  for (const auto& b : blocks_) n_ += static_cast<int>(b.size());
  if (n_ < 1) throw Error(ErrorCode::kInvalidArgument, "empty partition");
  block_of_.assign(n_, -1);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    for (ElementId e : blocks_[i]) {
      if (e < 0 || e >= n_ || block_of_[e] != -1) {
        throw Error(ErrorCode::kInvalidArgument,
                    "blocks must partition [0, n)");
      }
      block_of_[e] = static_cast<int>(i);
    }
  }
}

bool PartitionOneBlockOracle::CanExtendImpl(const DecisionState& state,
                                            std::optional<Pin> pin) const {
  int block = -1;
  auto same_block = [&](ElementId e) {
    if (block == -1) block = block_of_[e];
    return block_of_[e] == block;
  };
  for (ElementId e : state.selected()) {
    if (!same_block(e)) return false;
  }
  if (pin && pin->in && !same_block(pin->element)) return false;
  return true;
}

bool PartitionOneBlockOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  for (ElementId e : set) {
    if (block_of_[e] != block_of_[set[0]]) return false;
  }
  return true;
}

double PartitionOneBlockOracle::MaxWeight(
    std::span<const double> values) const {
  double best = 0.0;
  for (const auto& b : blocks_) {
    double s = 0.0;
    for (ElementId e : b) s += std::max(values[e], 0.0);
    best = std::max(best, s);
  }
  return best;
}

nlohmann::json PartitionOneBlockOracle::ParamsJson() const {
  return {{"blocks", blocks_}};
}

// ---------------------------------------------------------------------------
// PairMatch

PairMatchOracle::PairMatchOracle(int k) : k_(k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "pair match needs k >= 1");
}

bool PairMatchOracle::CanExtendImpl(const DecisionState& state,
                                    std::optional<Pin> pin) const {
  // The pair is pinned down by any selected element; otherwise try them all.
  int pair = -1;
  auto fits = [&](ElementId e) {
    const int p = e % k_;
    if (pair == -1) pair = p;
    return pair == p;
  };
  for (ElementId e : state.selected()) {
    if (!fits(e)) return false;
  }
  if (pin && pin->in && !fits(pin->element)) return false;
  auto pair_free = [&](int i) {
    for (ElementId e : {i, i + k_}) {
      if (state.is_discarded(e)) return false;
      if (pin && !pin->in && pin->element == e) return false;
    }
    return true;
  };
  if (pair != -1) return pair_free(pair);
  for (int i = 0; i < k_; ++i) {
    if (pair_free(i)) return true;
  }
  return false;
}

bool PairMatchOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  if (set.size() != 2) return false;
  const ElementId lo = std::min(set[0], set[1]);
  const ElementId hi = std::max(set[0], set[1]);
  return lo < k_ && hi == lo + k_;
}

double PairMatchOracle::MaxWeight(std::span<const double> values) const {
  double best = values[0] + values[k_];
  for (int i = 1; i < k_; ++i) best = std::max(best, values[i] + values[i + k_]);
  return best;
}

nlohmann::json PairMatchOracle::ParamsJson() const { return {{"k", k_}}; }

// ---------------------------------------------------------------------------
// JSON

nlohmann::json OracleToJson(const FeasibilityOracle& oracle) {
  return {{"kind", OracleKindName(oracle.kind())},
          {"params", oracle.ParamsJson()}};
}

std::shared_ptr<const FeasibilityOracle> OracleFromJson(
    const nlohmann::json& feasibility) {
  try {
    const OracleKind kind =
        ParseOracleKind(feasibility.at("kind").get<std::string>());
    const nlohmann::json& p = feasibility.at("params");
    switch (kind) {
      case OracleKind::kExplicitFamily:
        return std::make_shared<ExplicitFamilyOracle>(
            p.at("n").get<int>(),
            p.at("sets").get<std::vector<std::vector<ElementId>>>());
      case OracleKind::kKUniform:
        return std::make_shared<KUniformOracle>(p.at("n").get<int>(),
                                                p.at("k").get<int>());
      case OracleKind::kPartitionOneBlock:
        return std::make_shared<PartitionOneBlockOracle>(
            p.at("blocks").get<std::vector<std::vector<ElementId>>>());
      case OracleKind::kPairMatch:
        return std::make_shared<PairMatchOracle>(p.at("k").get<int>());
      case OracleKind::kTreePath:
        return std::make_shared<TreePathOracle>(
            p.at("k").get<int>(),
            p.at("strings").get<std::vector<std::vector<int>>>());
      case OracleKind::kNestedPhase: {
        NestedPhaseParams np;
        np.a = p.at("A").get<std::vector<ElementId>>();
        np.b = p.at("B").get<std::vector<ElementId>>();
        np.c = p.at("C").get<std::vector<ElementId>>();
        np.v = p.at("V").get<std::vector<std::vector<ElementId>>>();
        np.u = p.at("U").get<std::vector<std::vector<ElementId>>>();
        np.f = p.at("f")
                   .get<std::vector<std::vector<std::vector<ElementId>>>>();
        return std::make_shared<NestedPhaseOracle>(std::move(np));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("feasibility block: ") + e.what());
  }
  throw Error(ErrorCode::kParseError, "unhandled feasibility kind");
}

}  // namespace ocrlab
