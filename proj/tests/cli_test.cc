#include "cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nlohmann/json.hpp"
#include "ocrlab/instance_io.h"

namespace ocrlab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Call(std::vector<std::string> args) {
  args.insert(args.begin(), "ocrlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("ocrlab_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string P(const std::string& name) { return (dir / name).string(); }
};

TEST_F(Cli, GenMultiunitAndRoundTrip) {
  const Result r = Call({"gen", "--construction", "multiunit", "--k", "100",
                         "--out", P("mu.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("n"), 400);
  const std::string text = Slurp(P("mu.json"));
  EXPECT_EQ(SerializeInstance(ParseInstance(text)), text);
}

TEST_F(Cli, GenTreeAndNestedScaled) {
  Result r = Call({"gen", "--construction", "tree", "--k", "4", "--seed", "7",
                   "--out", P("t.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("n"), 340);
  r = Call({"gen", "--construction", "nested-scaled", "--k1", "2", "--k2", "8",
            "--k3", "8", "--usize", "3", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json inst = json::parse(r.out);
  EXPECT_EQ(inst.at("feasibility").at("params").at("U").size(), 4u);
  EXPECT_EQ(inst.at("metadata").at("asymptotic"), "false");
  EXPECT_NE(inst.at("metadata").at("gen_config").get<std::string>().find("\"seed\":1"),
            std::string::npos);
}

TEST_F(Cli, ExactPairs) {
  ASSERT_EQ(Call({"gen", "--construction", "pairs", "--k", "3", "--out",
                  P("p.json")}).code, 0);
  const Result r = Call({"exact", "--instance", P("p.json"), "--mode", "aware",
                         "--order", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j.at("value").get<double>(), 1.0 / 6.0, 1e-12);
  EXPECT_TRUE(j.contains("states_expanded"));
  EXPECT_TRUE(j.contains("wall_time_ms"));
  EXPECT_EQ(j.at("meta").at("config").at("mode"), "aware");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(Call({}).code, kExitUsage);
  EXPECT_EQ(Call({"gen", "--construction", "bogus"}).code, kExitUsage);
  EXPECT_EQ(Call({"gen", "--construction", "multiunit"}).code, kExitUsage);
  EXPECT_EQ(Call({"gen", "--construction", "tree", "--k", "3"}).code, kExitUsage);
  ASSERT_EQ(Call({"gen", "--construction", "multiunit", "--k", "100", "--out",
                  P("mu.json")}).code, 0);
  // Seed is mandatory for simulation.
  EXPECT_EQ(Call({"simulate", "--instance", P("mu.json"), "--policy", "greedy"}).code,
            kExitUsage);
  EXPECT_EQ(Call({"exact", "--instance", P("mu.json"), "--mode", "aware"}).code,
            kExitResource);
  EXPECT_EQ(Call({"verify", "--what", "u-family", "--seed", "1",
                  "--max-attempts", "3"}).code,
            kExitResource);
  EXPECT_EQ(Call({"exact", "--instance", P("missing.json"), "--mode", "aware"}).code,
            kExitUsage);
}

TEST_F(Cli, ChecksGateTheExitCode) {
  EXPECT_EQ(Call({"constants", "--check", "penalty_pi1(1.152)<=0.292"}).code, 0);
  EXPECT_EQ(Call({"constants", "--check", "penalty_pi1(1.152)<=0.2"}).code,
            kExitCheckFailed);
  EXPECT_EQ(Call({"constants", "--check", "nonsense>=1"}).code, kExitUsage);
  EXPECT_EQ(Call({"constants", "--check", "c_prime"}).code, kExitUsage);
}

TEST_F(Cli, ConstantsCsvIsRfc4180) {
  const Result r = Call({"constants", "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ASSERT_FALSE(line.empty());
    EXPECT_EQ(line.back(), '\r');
    ++rows;
  }
  EXPECT_EQ(rows, 17);
  EXPECT_NE(r.out.find("0.291"), std::string::npos);
  // The config column is a JSON object, so its quotes are doubled.
  EXPECT_NE(r.out.find("\"{\"\"command\"\":\"\"constants\"\"}\""), std::string::npos);
}

TEST_F(Cli, SimulateReportsDoNotDependOnWorkers) {
  ASSERT_EQ(Call({"gen", "--construction", "multiunit", "--k", "30", "--out",
                  P("mu.json")}).code, 0);
  for (const char* w : {"1", "4"}) {
    const Result r = Call({"simulate", "--instance", P("mu.json"), "--policy",
                           "multiunit_threshold:d=0.913,variant=unaware",
                           "--trials", "1500", "--seed", "9", "--workers", w,
                           "--out", P(std::string("s") + w + ".json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(Slurp(P("s1.json")), Slurp(P("s4.json")));
  const json j = json::parse(Slurp(P("s1.json")));
  EXPECT_EQ(j.at("meta").at("seed"), 9);
  EXPECT_EQ(j.at("meta").at("config").at("trials"), 1500);
  EXPECT_EQ(j.at("results").size(), 1u);
}

TEST_F(Cli, RatioMultiunitUsesReferencePolicies) {
  ASSERT_EQ(Call({"gen", "--construction", "multiunit", "--k", "100", "--out",
                  P("mu.json")}).code, 0);
  const Result r = Call({"ratio", "--instance", P("mu.json"), "--policy",
                         "multiunit_threshold:d=0.913,variant=unaware",
                         "--trials", "2000", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("per_order").size(), 2u);
  EXPECT_EQ(j.at("denominator"), "reference_policies");
  EXPECT_TRUE(j.contains("caveat"));
  const double m = j.at("min_ratio");
  EXPECT_LE(m, j.at("per_order")[0].at("ratio").get<double>());
  EXPECT_LE(m, j.at("per_order")[1].at("ratio").get<double>());
}

TEST_F(Cli, RatioExactAndVerifyInvariants) {
  ASSERT_EQ(Call({"gen", "--construction", "multiunit", "--k", "2", "--out",
                  P("mu.json")}).code, 0);
  Result r = Call({"ratio", "--instance", P("mu.json"), "--policy", "greedy",
                   "--seed", "1", "--exact", "--check", "xi<=1"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = Call({"verify", "--what", "invariants", "--instance", P("mu.json"),
            "--check", "ok>=1"});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_EQ(json::parse(r.out).at("failures"), 0);
}

TEST_F(Cli, ExactUnawareReportsBothViews) {
  ASSERT_EQ(Call({"gen", "--construction", "multiunit", "--k", "2", "--out",
                  P("mu.json")}).code, 0);
  const Result r = Call({"exact", "--instance", P("mu.json"), "--mode", "unaware"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("per_order").size(), 2u);
  EXPECT_TRUE(j.at("worst_case").contains("min_ratio"));
}

}  // namespace
}  // namespace ocrlab::cli
