#include "ocrlab/instance_io.h"

#include <gtest/gtest.h>

#include "ocrlab/constructions.h"
#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {
namespace {

void ExpectRoundTrip(const Instance& inst) {
  const std::string text = SerializeInstance(inst);
  const Instance back = ParseInstance(text);
  EXPECT_EQ(SerializeInstance(back), text) << inst.name();
  EXPECT_EQ(back.size(), inst.size());
  EXPECT_EQ(back.dists(), inst.dists());
  EXPECT_EQ(back.metadata(), inst.metadata());
  EXPECT_EQ(back.feasibility().kind(), inst.feasibility().kind());
}

TEST(InstanceIo, RoundTripsEveryConstruction) {
  ExpectRoundTrip(BuildTreeInstance(2));
  ExpectRoundTrip(BuildTreeInstance(4));
  ExpectRoundTrip(BuildMultiunitInstance(5));
  ExpectRoundTrip(BuildPairsInstance(3));
  ExpectRoundTrip(BuildPartitionInstance(4, 4, 0.25));
  ExpectRoundTrip(BuildNestedInstance(NestedScaledParams{}, 3));
  ExpectRoundTrip(BuildNestedInstance(NestedScaledParams{2, 8, 8, 3, 0.1}, 1));
}

TEST(InstanceIo, GenerativeOrdersSurvive) {
  const Instance back = ParseInstance(SerializeInstance(BuildTreeInstance(4)));
  ASSERT_TRUE(back.orders().is_generative());
  EXPECT_EQ(back.orders().generative().generator, "tree");
}

TEST(InstanceIo, KeysAreSorted) {
  const std::string text = SerializeInstance(BuildPairsInstance(1));
  EXPECT_LT(text.find("\"elements\""), text.find("\"feasibility\""));
  EXPECT_LT(text.find("\"metadata\""), text.find("\"name\""));
  EXPECT_EQ(text.back(), '\n');
}

TEST(InstanceIo, ParseErrors) {
  auto code = [](const std::string& text) {
    try {
      ParseInstance(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code("{"), ErrorCode::kParseError);
  EXPECT_EQ(code("{}"), ErrorCode::kParseError);
  EXPECT_EQ(code(R"({"name":"x","elements":[{"id":1,"dist":[[0,1]]}],)"
                 R"("feasibility":{"kind":"k_uniform","params":{"n":1,"k":1}}})"),
            ErrorCode::kParseError);
  EXPECT_THROW(LoadInstance("/nonexistent/file.json"), Error);
}

}  // namespace
}  // namespace ocrlab
