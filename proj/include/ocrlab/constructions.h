#ifndef OCRLAB_CONSTRUCTIONS_H_
#define OCRLAB_CONSTRUCTIONS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "ocrlab/core.h"
#include "ocrlab/feasibility.h"
#include "ocrlab/rng.h"

namespace ocrlab {

// Largest instance any builder will materialize. Defaults to 2^20 and can be
// overridden through OCRLAB_ELEMENT_CAP.
int64_t ElementCap();

// ---------------------------------------------------------------------------
// Tree instance

// k-ary tree of depth k, one element per nonempty string of length <= k,
// values Bernoulli(1/k). Element ids follow TreePathOracle::Canonical.
Instance BuildTreeInstance(int k);

// The tree oracle of an instance, or WrongKind.
const TreePathOracle& TreeOracleOf(const Instance& instance);

struct TreeOrderRealization {
  // n + 1 entries: r[0] is r_epsilon and r[e + 1] belongs to element e.
  // Only elements of depth <= k - 3 carry a subset; the rest stay 0.
  // Each subset is a bitmask over characters, bit (c - 1) for character c.
  std::vector<uint64_t> r;
  ArrivalOrder order;
  std::vector<char> good;
};

// Draws every r_s uniformly among the k/2-subsets and returns pi_1(epsilon).
TreeOrderRealization SampleTreeOrder(const Instance& instance, CounterRng rng);
TreeOrderRealization SampleTreeOrder(const TreePathOracle& tree,
                                     CounterRng rng);
// The deterministic part: order and labels from given subsets.
TreeOrderRealization TreeOrderFromSubsets(const TreePathOracle& tree,
                                          std::vector<uint64_t> r);

// ---------------------------------------------------------------------------
// U-family

struct UFamily {
  int64_t n = 0;
  int alpha = 10;
  int k1 = 0;
  int k3 = 0;
  // Positions in [0, k3); each sorted.
  std::vector<std::vector<int>> sets;
  int attempts = 0;
};

struct UFamilyReport {
  struct SizeWitness {
    int set;
    int size;
  };
  struct MembershipWitness {
    int element;
    int count;
  };
  struct IntersectionWitness {
    int first;
    int second;
    int size;
  };
  struct DuplicateWitness {
    int first;
    int second;
  };

  double size_lo = 0.0;
  double size_hi = 0.0;
  double membership_cap = 0.0;

  bool size_ok = true;
  bool membership_ok = true;
  bool intersection_ok = true;
  bool distinct_ok = true;
  std::optional<SizeWitness> size_witness;
  std::optional<MembershipWitness> membership_witness;
  std::optional<IntersectionWitness> intersection_witness;
  std::optional<DuplicateWitness> duplicate_witness;

  bool ok() const {
    return size_ok && membership_ok && intersection_ok && distinct_ok;
  }
};

UFamilyReport VerifyUFamily(const UFamily& family);

// Independent Bernoulli((alpha + 1) log2(n) / k3) membership, resampled until
// VerifyUFamily passes. Throws ExhaustedAttempts after max_attempts draws.
UFamily BuildUFamily(int64_t n, int alpha, int k1, int k3, CounterRng rng,
                     int max_attempts = 100);

// ---------------------------------------------------------------------------
// A/B/C instance

struct NestedScaledParams {
  int k1 = 2;
  int k2 = 8;
  int k3 = 12;
  int u_size = 3;
  double q = 0.1;
};

// n = 2^(2x), k1 = 4x, k3 = 2^x, k2 = n - k3 - k1, B values Bernoulli(1/n^2).
Instance BuildNestedInstance(int x, uint64_t seed, int alpha = 10,
                             int max_attempts = 100);
// Desk-scale variant with explicit sizes. U sets are disjoint blocks when
// they fit in C, otherwise distinct seeded random u_size-subsets.
Instance BuildNestedInstance(const NestedScaledParams& params, uint64_t seed);

const NestedPhaseOracle& NestedOracleOf(const Instance& instance);

// ---------------------------------------------------------------------------
// Multi-unit and calibration instances

// a_1..a_k = 7/4, b_1..b_k = 1, c_1..c_2k in {0, 2}; capacity k.
// Orders: pi_1 = (a, b, c) and pi_2 = (a, c, b), weight 1/2 each.
Instance BuildMultiunitInstance(int k);

// n = 2^(2^kappa) elements in blocks of 2^kappa, values Bernoulli(2^-kappa).
Instance BuildPartitionInstance(int kappa);
Instance BuildPartitionInstance(int blocks, int block_size, double p);

// Pairs {i, i + k}; first elements are 0, second ones Bernoulli(1/(2k)).
Instance BuildPairsInstance(int k);

}  // namespace ocrlab

#endif  // OCRLAB_CONSTRUCTIONS_H_
