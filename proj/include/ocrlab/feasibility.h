#ifndef OCRLAB_FEASIBILITY_H_
#define OCRLAB_FEASIBILITY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlohmann/json.hpp"
#include "ocrlab/core.h"

namespace ocrlab {

enum class OracleKind {
  kExplicitFamily,
  kKUniform,
  kTreePath,
  kNestedPhase,
  kPartitionOneBlock,
  kPairMatch,
};

std::string_view OracleKindName(OracleKind kind);
OracleKind ParseOracleKind(std::string_view name);

// Forces one undecided element in or out of the completion.
struct Pin {
  ElementId element;
  bool in;
};

// Answers the extension query: is there a feasible set T that contains every
// selected element, avoids every discarded one, and respects the pin?
// Implementations are immutable and all queries are pure.
class FeasibilityOracle {
 public:
  virtual ~FeasibilityOracle() = default;

  virtual OracleKind kind() const = 0;
  virtual int num_elements() const = 0;
  // Known structurally; the explicit family checks its sets.
  virtual bool downward_closed() const = 0;

  // Throws UnknownElement for a pin outside [0, n) or a state of wrong size.
  bool CanExtend(const DecisionState& state,
                 std::optional<Pin> pin = std::nullopt) const;
  // Both extension queries for one element; oracles may answer faster.
  virtual ActionSet Allowed(const DecisionState& state, ElementId e) const;

  // Direct membership test for a complete set (independent of CanExtend).
  virtual bool Contains(std::span<const ElementId> set) const = 0;
  // max over T in F of the sum of values[e], e in T.
  virtual double MaxWeight(std::span<const double> values) const = 0;

  virtual nlohmann::json ParamsJson() const = 0;

 protected:
  virtual bool CanExtendImpl(const DecisionState& state,
                             std::optional<Pin> pin) const = 0;
  void CheckElement(ElementId e) const;
};

// Every member of F as a bitmask, by brute-force membership over all 2^n
// subsets. Requires n <= 24.
std::vector<uint32_t> MaterializeFamily(const FeasibilityOracle& oracle);

std::vector<ElementId> MaskToIds(uint64_t mask);
uint64_t IdsToMask(std::span<const ElementId> ids);

class ExplicitFamilyOracle final : public FeasibilityOracle {
 public:
  static constexpr int kMaxElements = 24;

  ExplicitFamilyOracle(int n, std::vector<std::vector<ElementId>> sets);
  static ExplicitFamilyOracle FromMasks(int n, std::vector<uint32_t> masks);

  OracleKind kind() const override { return OracleKind::kExplicitFamily; }
  int num_elements() const override { return n_; }
  bool downward_closed() const override { return downward_closed_; }
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  const std::vector<uint32_t>& masks() const { return masks_; }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  int n_;
  std::vector<uint32_t> masks_;  // sorted, unique
  bool downward_closed_;
};

// True iff the family is closed under taking subsets. Throws WrongKind for
// structured oracles, whose closure is known by construction.
bool IsDownwardClosed(const FeasibilityOracle& oracle);
bool IsDownwardClosed(std::span<const uint32_t> masks);

class KUniformOracle final : public FeasibilityOracle {
 public:
  KUniformOracle(int n, int k);

  OracleKind kind() const override { return OracleKind::kKUniform; }
  int num_elements() const override { return n_; }
  bool downward_closed() const override { return true; }
  ActionSet Allowed(const DecisionState& state, ElementId e) const override;
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  int capacity() const { return k_; }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  int n_;
  int k_;
};

// Selections must come from a single block of a partition.
class PartitionOneBlockOracle final : public FeasibilityOracle {
 public:
  explicit PartitionOneBlockOracle(std::vector<std::vector<ElementId>> blocks);

  OracleKind kind() const override { return OracleKind::kPartitionOneBlock; }
  int num_elements() const override { return n_; }
  bool downward_closed() const override { return true; }
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  int block_of(ElementId e) const { return block_of_[e]; }
  const std::vector<std::vector<ElementId>>& blocks() const { return blocks_; }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  int n_;
  std::vector<std::vector<ElementId>> blocks_;
  std::vector<int> block_of_;
};

// F = {{i, i + k} : i in [0, k)} over n = 2k elements; exactly one pair.
class PairMatchOracle final : public FeasibilityOracle {
 public:
  explicit PairMatchOracle(int k);

  OracleKind kind() const override { return OracleKind::kPairMatch; }
  int num_elements() const override { return 2 * k_; }
  bool downward_closed() const override { return false; }
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  int k() const { return k_; }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  int k_;
};

// Subsets of a single root-to-leaf path in the complete k-ary tree of depth k.
// Each element is a nonempty string over [1, k] of length at most k.
class TreePathOracle final : public FeasibilityOracle {
 public:
  // `strings[e]` is the string of element e.
  TreePathOracle(int k, std::vector<std::vector<int>> strings);
  // Canonical layout: layer by layer, lexicographic within a layer.
  static TreePathOracle Canonical(int k);

  OracleKind kind() const override { return OracleKind::kTreePath; }
  int num_elements() const override { return n_; }
  bool downward_closed() const override { return true; }
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  int k() const { return k_; }
  // Parent element, or -1 for layer-1 elements.
  ElementId parent(ElementId e) const { return parent_[e]; }
  int depth(ElementId e) const { return depth_[e]; }
  // Last character of the element's string, in [1, k].
  int last_char(ElementId e) const { return last_char_[e]; }
  // Children ordered by character; pass -1 for the root.
  std::span<const ElementId> children(ElementId e) const;
  const std::vector<int>& string_of(ElementId e) const { return strings_[e]; }
  // True iff the string of a is a prefix of the string of b (or a == b).
  bool IsPrefix(ElementId a, ElementId b) const;
  bool Comparable(ElementId a, ElementId b) const {
    return depth_[a] <= depth_[b] ? IsPrefix(a, b) : IsPrefix(b, a);
  }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  int k_;
  int n_;
  std::vector<std::vector<int>> strings_;
  std::vector<ElementId> parent_;
  std::vector<int> depth_;
  std::vector<int> last_char_;
  std::vector<ElementId> root_children_;
  std::vector<std::vector<ElementId>> children_;
};

// Parameters of the A/B/C construction: a feasible set is V_i, one b_j and
// the C-subset f(i, j), which lies inside U_i.
struct NestedPhaseParams {
  std::vector<ElementId> a;
  std::vector<ElementId> b;
  std::vector<ElementId> c;
  std::vector<std::vector<ElementId>> v;  // subsets of a
  std::vector<std::vector<ElementId>> u;  // subsets of c
  // f[i][j] subset of u[i] for j indexing b.
  std::vector<std::vector<std::vector<ElementId>>> f;
};

class NestedPhaseOracle final : public FeasibilityOracle {
 public:
  static constexpr int kMaxAClass = 20;

  explicit NestedPhaseOracle(NestedPhaseParams params);

  OracleKind kind() const override { return OracleKind::kNestedPhase; }
  int num_elements() const override { return n_; }
  bool downward_closed() const override { return false; }
  bool Contains(std::span<const ElementId> set) const override;
  double MaxWeight(std::span<const double> values) const override;
  nlohmann::json ParamsJson() const override;

  const NestedPhaseParams& params() const { return params_; }
  enum class Class : uint8_t { kA, kB, kC };
  Class class_of(ElementId e) const { return class_[e]; }
  int index_in_class(ElementId e) const { return index_[e]; }
  // Index i with V_i == the given A-subset (as a mask over A positions).
  std::optional<int> IndexOfV(uint32_t a_mask) const;
  uint32_t v_mask(int i) const { return v_masks_[i]; }
  // Whether C-element position c lies in f(i, j).
  bool InF(int i, int j, int c_pos) const;
  int num_indices() const { return static_cast<int>(params_.v.size()); }

 protected:
  bool CanExtendImpl(const DecisionState& state,
                     std::optional<Pin> pin) const override;

 private:
  NestedPhaseParams params_;
  int n_;
  std::vector<Class> class_;
  std::vector<int> index_;
  std::vector<uint32_t> v_masks_;
  std::unordered_map<uint32_t, int> v_lookup_;
  // f_pos_[i][j]: sorted C positions of f(i, j).
  std::vector<std::vector<std::vector<int>>> f_pos_;
};

// Builds an oracle from {kind, params} JSON.
std::shared_ptr<const FeasibilityOracle> OracleFromJson(
    const nlohmann::json& feasibility);
nlohmann::json OracleToJson(const FeasibilityOracle& oracle);

}  // namespace ocrlab

#endif  // OCRLAB_FEASIBILITY_H_
