#include "ocrlab/core.h"

#include <memory>

#include <gtest/gtest.h>

#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ValueDistribution, SortsAtomsAndComputesMean) {
  ValueDistribution d({{2.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
  ASSERT_EQ(d.atoms().size(), 3u);
  EXPECT_EQ(d.atoms()[0].value, 0.0);
  EXPECT_EQ(d.atoms()[2].value, 2.0);
  EXPECT_DOUBLE_EQ(d.Mean(), 0.75);
}

TEST(ValueDistribution, SampleIsInverseCdf) {
  const auto d = ValueDistribution::Bernoulli(0.25, 3.0, 1.0);
  EXPECT_EQ(d.Sample(0.0), 1.0);
  EXPECT_EQ(d.Sample(0.74), 1.0);
  EXPECT_EQ(d.Sample(0.76), 3.0);
  EXPECT_EQ(d.Sample(0.999), 3.0);
}

TEST(ValueDistribution, RejectsBadProbabilities) {
  EXPECT_EQ(CodeOf([] { ValueDistribution({{1.0, 0.5}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValueDistribution({{1.0, 1.5}, {0.0, -0.5}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValueDistribution({{-1.0, 1.0}}); }),
            ErrorCode::kInvalidArgument);
}

TEST(ArrivalOrder, ValidateRejectsNonPermutations) {
  EXPECT_NO_THROW(ValidateOrder({{2, 0, 1}}, 3));
  EXPECT_EQ(CodeOf([] { ValidateOrder({{0, 0, 1}}, 3); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValidateOrder({{0, 1}}, 3); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValidateOrder({{0, 1, 3}}, 3); }),
            ErrorCode::kInvalidArgument);
}

TEST(DecisionState, ApplyUndoReset) {
  DecisionState s(4);
  s.Apply(1, Action::kSelect);
  s.Apply(3, Action::kDiscard);
  s.Apply(0, Action::kSelect);
  EXPECT_TRUE(s.is_selected(1));
  EXPECT_TRUE(s.is_discarded(3));
  EXPECT_EQ(s.selected(), (std::vector<ElementId>{1, 0}));
  EXPECT_EQ(CodeOf([&] { s.Apply(1, Action::kDiscard); }),
            ErrorCode::kInconsistentState);
  // Undo follows a stack discipline per list.
  EXPECT_EQ(CodeOf([&] { s.Undo(1); }), ErrorCode::kInconsistentState);
  s.Undo(0);
  EXPECT_FALSE(s.is_decided(0));
  s.Undo(3);
  EXPECT_FALSE(s.is_decided(3));
  s.Reset();
  EXPECT_TRUE(s.selected().empty());
  EXPECT_FALSE(s.is_decided(1));
}

TEST(DecisionState, FromMasksRejectsOverlap) {
  EXPECT_EQ(CodeOf([] { DecisionState::FromMasks(4, 0b0011, 0b0110); }),
            ErrorCode::kInconsistentState);
  const auto s = DecisionState::FromMasks(4, 0b0001, 0b1000);
  EXPECT_TRUE(s.is_selected(0));
  EXPECT_TRUE(s.is_discarded(3));
}

TEST(AllowedActions, CapacityForcesDiscard) {
  KUniformOracle oracle(5, 2);
  DecisionState s(5);
  EXPECT_TRUE(AllowedActions(oracle, s, 0).both());
  s.Apply(0, Action::kSelect);
  s.Apply(1, Action::kSelect);
  const ActionSet a = AllowedActions(oracle, s, 2);
  EXPECT_TRUE(a.discard);
  EXPECT_FALSE(a.select);
}

TEST(AllowedActions, PairsForceCompletion) {
  // Feasible sets {0,2} and {1,3}; after discarding 0, element 1 is forced.
  PairMatchOracle oracle(2);
  DecisionState s(4);
  EXPECT_TRUE(AllowedActions(oracle, s, 0).both());
  s.Apply(0, Action::kDiscard);
  const ActionSet a = AllowedActions(oracle, s, 1);
  EXPECT_TRUE(a.select);
  EXPECT_FALSE(a.discard);
  s.Apply(1, Action::kSelect);
  const ActionSet b = AllowedActions(oracle, s, 2);
  EXPECT_FALSE(b.select);
  EXPECT_TRUE(b.discard);
}

TEST(SampleValues, DeterministicPerSeedAndTrial) {
  std::vector<ValueDistribution> d(6, ValueDistribution::Bernoulli(0.5));
  Instance inst("x", d, std::make_shared<KUniformOracle>(6, 6));
  const auto a = SampleValues(inst, CounterRng(3, 4, Stream::kValues));
  const auto b = SampleValues(inst, CounterRng(3, 4, Stream::kValues));
  EXPECT_EQ(a, b);
  const CounterRng rng(3, 4, Stream::kValues);
  for (int e = 0; e < 6; ++e) {
    EXPECT_EQ(a[e], d[e].Sample(rng.UniformAt(e)));
  }
}

TEST(Instance, FiniteOrdersDefaultsToIdentity) {
  std::vector<ValueDistribution> d(3, ValueDistribution::Deterministic(1.0));
  Instance inst("x", d, std::make_shared<KUniformOracle>(3, 1));
  const auto orders = inst.FiniteOrders();
  ASSERT_EQ(orders.size(), 1u);
  EXPECT_EQ(orders[0], IdentityOrder(3));
}

TEST(Trace, SelectedSetIsSortedIds) {
  Trace t;
  t.steps = {{2, 1.0, Action::kSelect},
             {0, 0.0, Action::kDiscard},
             {1, 2.0, Action::kSelect}};
  EXPECT_EQ(t.SelectedSet(), (std::vector<ElementId>{1, 2}));
}

}  // namespace
}  // namespace ocrlab
