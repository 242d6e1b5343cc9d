#include "cli.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "ocrlab/analysis.h"
#include "ocrlab/constructions.h"
#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"
#include "ocrlab/instance_io.h"
#include "ocrlab/montecarlo.h"
#include "ocrlab/policies.h"
#include "ocrlab/solvers.h"

namespace ocrlab::cli {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckFailed {};

struct Output {
  std::string format = "json";
  std::string out;
  std::vector<std::string> checks;
};

// A CSV table; report metadata is appended as trailing columns of every row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

using Fields = std::map<std::string, double>;

std::string Num(double x) { return json(x).dump(); }

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string CsvLine(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += CsvField(cells[i]);
  }
  return line + "\r\n";
}

std::string RenderCsv(const Table& table, const json& meta) {
  std::vector<std::string> header = table.header;
  for (const char* c : {"version", "git_describe", "seed", "config"}) {
    header.push_back(c);
  }
  std::string text = CsvLine(header);
  const std::string seed =
      meta.at("seed").is_null() ? "" : meta.at("seed").dump();
  for (auto row : table.rows) {
    row.push_back(meta.at("version").get<std::string>());
    row.push_back(meta.at("git_describe").get<std::string>());
    row.push_back(seed);
    row.push_back(meta.at("config").dump());
    text += CsvLine(row);
  }
  return text;
}

json Meta(const json& config, std::optional<uint64_t> seed) {
  return {{"version", OCRLAB_VERSION},
          {"git_describe", OCRLAB_GIT_DESCRIBE},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"config", config}};
}

struct Check {
  std::string field;
  std::string op;
  double bound;
};

Check ParseCheck(const std::string& expr) {
  for (const char* op : {">=", "<=", ">", "<"}) {
    auto pos = expr.find(op);
    if (pos == std::string::npos) continue;
    Check c{expr.substr(0, pos), op, 0.0};
    try {
      size_t used = 0;
      const std::string rhs = expr.substr(pos + c.op.size());
      c.bound = std::stod(rhs, &used);
      if (used != rhs.size()) throw std::invalid_argument(rhs);
    } catch (const std::exception&) {
      throw UsageError("bad bound in check '" + expr + "'");
    }
    return c;
  }
  throw UsageError("check '" + expr + "' needs one of >=, <=, >, <");
}

// Appends the outcomes to the report; false if any check failed.
bool RunChecks(const std::vector<std::string>& exprs, const Fields& fields,
               json& report, std::ostream& err) {
  if (exprs.empty()) return true;
  bool all = true;
  json results = json::array();
  for (const std::string& expr : exprs) {
    const Check c = ParseCheck(expr);
    auto it = fields.find(c.field);
    if (it == fields.end()) {
      std::string known;
      for (const auto& [k, v] : fields) known += " " + k;
      throw UsageError("unknown check field '" + c.field + "'; known:" + known);
    }
    const double v = it->second;
    bool pass = false;
    if (c.op == ">=") pass = v >= c.bound;
    if (c.op == "<=") pass = v <= c.bound;
    if (c.op == ">") pass = v > c.bound;
    if (c.op == "<") pass = v < c.bound;
    all = all && pass;
    err << (pass ? "PASS " : "FAIL ") << expr << " (value " << Num(v) << ")\n";
    results.push_back({{"check", expr}, {"value", v}, {"pass", pass}});
  }
  report["checks"] = std::move(results);
  return all;
}

void WriteText(const std::string& text, const std::string& path,
               std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorCode::kInvalidArgument, "write failed: " + path);
}

void Emit(const Output& o, json report, const Table& table,
          const Fields& fields, std::ostream& out, std::ostream& err) {
  const bool ok = RunChecks(o.checks, fields, report, err);
  const std::string text = o.format == "csv"
                               ? RenderCsv(table, report.at("meta"))
                               : report.dump(2) + "\n";
  WriteText(text, o.out, out);
  if (!ok) throw CheckFailed{};
}

void AddOutputOptions(CLI::App* cmd, Output& o) {
  cmd->add_option("--format", o.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", o.out, "report path (default stdout)");
  cmd->add_option("--check", o.checks,
                  "gate such as 'mean>=1.75'; exit 4 if any fails");
}

struct Limits {
  SolverLimits limits;

  void Add(CLI::App* cmd) {
    cmd->add_option("--max-elements-aware", limits.max_elements_aware);
    cmd->add_option("--max-elements-unaware", limits.max_elements_unaware);
    cmd->add_option("--max-orders", limits.max_orders);
    cmd->add_option("--max-states", limits.max_states);
  }
  json ToJson() const {
    return {{"max_elements_aware", limits.max_elements_aware},
            {"max_elements_unaware", limits.max_elements_unaware},
            {"max_orders", limits.max_orders},
            {"max_states", limits.max_states}};
  }
};

std::vector<WeightedOrder> WeightedOrders(const Instance& instance) {
  if (instance.orders().is_generative()) {
    throw Error(ErrorCode::kInvalidArgument,
                "this command needs a finite order distribution");
  }
  auto finite = instance.orders().finite();
  if (finite.empty()) return {{IdentityOrder(instance.size()), 1.0}};
  return {finite.begin(), finite.end()};
}

// A fixed order by index. Tree instances have no order list; index t stands
// for the order drawn in trial t of a run with `seed`.
struct PickedOrder {
  ArrivalOrder order;
  std::optional<std::vector<char>> good;
};

PickedOrder PickOrder(const Instance& instance, int64_t index, uint64_t seed) {
  if (index < 0) throw Error(ErrorCode::kInvalidArgument, "negative order index");
  if (instance.orders().is_generative()) {
    auto r = SampleTreeOrder(instance,
                             CounterRng(seed, static_cast<uint64_t>(index),
                                        Stream::kOrder));
    return {std::move(r.order), std::move(r.good)};
  }
  auto orders = instance.FiniteOrders();
  if (index >= static_cast<int64_t>(orders.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "order index " + std::to_string(index) + " out of range (" +
                    std::to_string(orders.size()) + " orders)");
  }
  return {std::move(orders[index]), std::nullopt};
}

json ReportJson(const EvalReport& r) {
  return {{"mean", r.mean},       {"std_error", r.std_error},
          {"ci_lo", r.ci_lo},     {"ci_hi", r.ci_hi},
          {"half_width", r.half_width()}, {"trials", r.trials},
          {"seed", r.seed}};
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string construction;
  int k = 0;
  int kappa = 0;
  int blocks = 4;
  int block_size = 4;
  double p = 0.25;
  int x = 0;
  NestedScaledParams scaled;
  int alpha = 10;
  int max_attempts = 100;
  uint64_t seed = 0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* kappa_opt = nullptr;
  CLI::Option* x_opt = nullptr;
};

int CmdGen(const GenArgs& a, std::ostream& out) {
  const bool has_seed = a.seed_opt->count() > 0;
  auto need = [&](CLI::Option* opt, const char* flag) {
    if (opt->count() == 0) {
      throw UsageError("--construction " + a.construction + " needs " + flag);
    }
  };
  json config = {{"construction", a.construction}};
  std::optional<Instance> built;
  const std::string& c = a.construction;
  if (c == "tree") {
    need(a.k_opt, "--k");
    config["k"] = a.k;
    built = BuildTreeInstance(a.k);
  } else if (c == "multiunit") {
    need(a.k_opt, "--k");
    config["k"] = a.k;
    built = BuildMultiunitInstance(a.k);
  } else if (c == "pairs") {
    need(a.k_opt, "--k");
    config["k"] = a.k;
    built = BuildPairsInstance(a.k);
  } else if (c == "partition") {
    if (a.kappa_opt->count()) {
      config["kappa"] = a.kappa;
      built = BuildPartitionInstance(a.kappa);
    } else {
      config.update({{"blocks", a.blocks}, {"block_size", a.block_size},
                     {"p", a.p}});
      built = BuildPartitionInstance(a.blocks, a.block_size, a.p);
    }
  } else if (c == "partition-scaled") {
    config.update({{"blocks", a.blocks}, {"block_size", a.block_size},
                   {"p", a.p}});
    built = BuildPartitionInstance(a.blocks, a.block_size, a.p);
  } else if (c == "nested") {
    need(a.x_opt, "--x");
    need(a.seed_opt, "--seed");
    config.update({{"x", a.x}, {"alpha", a.alpha},
                   {"max_attempts", a.max_attempts}});
    built = BuildNestedInstance(a.x, a.seed, a.alpha, a.max_attempts);
  } else if (c == "nested-scaled") {
    need(a.seed_opt, "--seed");
    config.update({{"k1", a.scaled.k1}, {"k2", a.scaled.k2},
                   {"k3", a.scaled.k3}, {"usize", a.scaled.u_size},
                   {"q", a.scaled.q}});
    built = BuildNestedInstance(a.scaled, a.seed);
  }
  if (has_seed) config["seed"] = a.seed;

  auto metadata = built->metadata();
  metadata["generated_by"] =
      std::string("ocrlab ") + OCRLAB_VERSION + " (" + OCRLAB_GIT_DESCRIBE + ")";
  metadata["gen_config"] = config.dump();
  Instance instance(built->name(), built->dists(), built->feasibility_ptr(),
                    built->orders(), std::move(metadata));

  if (a.out.empty()) {
    out << SerializeInstance(instance);
    return kExitOk;
  }
  SaveInstance(instance, a.out);
  json summary = {{"n", instance.size()},
                  {"metadata", instance.metadata()},
                  {"out", a.out},
                  {"family_size", nullptr}};
  if (instance.size() <= 24) {
    summary["family_size"] = MaterializeFamily(instance.feasibility()).size();
  }
  out << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string instance;
  std::vector<std::string> policies;
  std::string order = "dist";
  int64_t trials = 10000;
  uint64_t seed = 0;
  int workers = 0;
  int trace_dump = 0;
  Output output;
};

int CmdSimulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const Instance instance = LoadInstance(a.instance);
  std::optional<OrderSource> source;
  if (a.order == "dist") {
    source = OrderSource::FromInstance(instance);
  } else {
    int64_t index = 0;
    try {
      index = std::stoll(a.order);
    } catch (const std::exception&) {
      throw UsageError("--order takes 'dist' or an index");
    }
    PickedOrder picked = PickOrder(instance, index, a.seed);
    source = OrderSource::Fixed(std::move(picked.order), std::move(picked.good));
  }
  const json config = {{"command", "simulate"},   {"instance", a.instance},
                       {"instance_name", instance.name()},
                       {"policies", a.policies},  {"order", a.order},
                       {"trials", a.trials},      {"trace_dump", a.trace_dump}};
  json report = {{"meta", Meta(config, a.seed)}, {"results", json::array()}};
  Table table{{"policy", "order", "mean", "std_error", "ci_lo", "ci_hi",
               "half_width", "trials"},
              {}};
  Fields fields;
  SimulateOptions options{a.workers, a.trace_dump};
  for (size_t i = 0; i < a.policies.size(); ++i) {
    const PolicyFactoryPtr factory = MakePolicy(a.policies[i]);
    SimulationResult res =
        Simulate(*factory, instance, *source, a.trials, a.seed, options);
    const EvalReport& r = res.report;
    json row = ReportJson(r);
    row["policy"] = factory->name();
    row["order"] = a.order;
    if (a.trace_dump > 0) {
      json traces = json::array();
      for (size_t t = 0; t < res.traces.size(); ++t) {
        json steps = json::array();
        for (const TraceStep& s : res.traces[t].steps) {
          steps.push_back({s.element, s.value,
                           s.action == Action::kSelect ? "select" : "discard"});
        }
        traces.push_back({{"trial", t},
                          {"total", res.traces[t].total},
                          {"steps", std::move(steps)}});
      }
      row["traces"] = std::move(traces);
    }
    report["results"].push_back(std::move(row));
    table.rows.push_back({factory->name(), a.order, Num(r.mean),
                          Num(r.std_error), Num(r.ci_lo), Num(r.ci_hi),
                          Num(r.half_width()), std::to_string(r.trials)});
    const std::string prefix = std::to_string(i) + ".";
    for (const auto& [k, v] : std::map<std::string, double>{
             {"mean", r.mean},
             {"std_error", r.std_error},
             {"ci_lo", r.ci_lo},
             {"ci_hi", r.ci_hi},
             {"half_width", r.half_width()}}) {
      fields[prefix + k] = v;
      fields[factory->name() + "." + k] = v;
      if (i == 0) fields[k] = v;
    }
  }
  Emit(a.output, std::move(report), table, fields, out, err);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// exact

struct ExactArgs {
  std::string instance;
  std::string mode;
  int64_t order = 0;
  std::string policy;
  uint64_t seed = 0;
  Limits limits;
  Output output;
};

int CmdExact(const ExactArgs& a, std::ostream& out, std::ostream& err) {
  const Instance instance = LoadInstance(a.instance);
  json config = {{"command", "exact"},
                 {"instance", a.instance},
                 {"instance_name", instance.name()},
                 {"mode", a.mode},
                 {"limits", a.limits.ToJson()}};
  json body;
  Fields fields;
  const SolverLimits& lim = a.limits.limits;
  if (a.mode == "aware" || a.mode == "policy") {
    config["order"] = a.order;
    const PickedOrder picked = PickOrder(instance, a.order, a.seed);
    if (a.mode == "aware") {
      const SolveResult r =
          instance.feasibility().kind() == OracleKind::kTreePath
              ? OptAwareTreeExact(instance, picked.order)
              : OptAwareExact(instance, picked.order, lim);
      body = {{"value", r.value},
              {"states_expanded", r.states_expanded},
              {"wall_time_ms", r.wall_time_ms}};
      fields["states_expanded"] = static_cast<double>(r.states_expanded);
    } else {
      if (a.policy.empty()) throw UsageError("--mode policy needs --policy");
      config["policy"] = a.policy;
      const auto factory = MakePolicy(a.policy);
      const auto t0 = std::chrono::steady_clock::now();
      const double v = EvaluatePolicyExact(
          *factory, instance, picked.order,
          picked.good ? &*picked.good : nullptr, a.seed, lim);
      const std::chrono::duration<double, std::milli> dt =
          std::chrono::steady_clock::now() - t0;
      body = {{"value", v}, {"policy", factory->name()},
              {"wall_time_ms", dt.count()}};
    }
  } else if (a.mode == "unaware") {
    const auto orders = WeightedOrders(instance);
    const UnawareResult r = OptUnawareExact(instance, orders, lim);
    body = {{"value", r.total.value},
            {"states_expanded", r.total.states_expanded},
            {"wall_time_ms", r.total.wall_time_ms},
            {"per_order", r.per_order},
            {"worst_case", nullptr}};
    fields["states_expanded"] = static_cast<double>(r.total.states_expanded);
    try {
      const RatioReport rr = RatioOfUnawareOptimum(instance, orders, lim);
      json per = json::array();
      for (const OrderRatio& o : rr.per_order) {
        per.push_back({{"weight", o.weight}, {"alg", o.alg}, {"opt", o.opt},
                       {"ratio", o.ratio ? json(*o.ratio) : json(nullptr)}});
      }
      body["worst_case"] = {{"min_ratio", rr.min_ratio},
                            {"xi", rr.xi},
                            {"per_order", std::move(per)},
                            {"warnings", rr.warnings}};
      fields["min_ratio"] = rr.min_ratio;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooLarge &&
          e.code() != ErrorCode::kDivisionByZeroOpt) {
        throw;
      }
      body["worst_case_error"] = e.what();
    }
  } else if (a.mode == "prophet") {
    const SolveResult r = ProphetExact(instance, lim);
    body = {{"value", r.value},
            {"states_expanded", r.states_expanded},
            {"wall_time_ms", r.wall_time_ms}};
  } else {
    const auto orders = WeightedOrders(instance);
    const auto t0 = std::chrono::steady_clock::now();
    const double v = ExhaustivePolicySearch(instance, orders);
    const std::chrono::duration<double, std::milli> dt =
        std::chrono::steady_clock::now() - t0;
    body = {{"value", v}, {"wall_time_ms", dt.count()}};
  }
  fields["value"] = body.at("value").get<double>();
  json report = body;
  report["meta"] = Meta(config, a.seed);
  Table table{{"mode", "order", "value", "wall_time_ms"},
              {{a.mode, std::to_string(a.order), Num(fields["value"]),
                Num(body.at("wall_time_ms").get<double>())}}};
  Emit(a.output, std::move(report), table, fields, out, err);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ratio

struct RatioArgs {
  std::string instance;
  std::string policy;
  std::vector<std::string> references;
  int64_t trials = 10000;
  uint64_t seed = 0;
  int workers = 0;
  bool exact = false;
  Limits limits;
  Output output;
};

json IntervalJson(Interval i) { return json::array({i.lo, i.hi}); }

int CmdRatio(const RatioArgs& a, std::ostream& out, std::ostream& err) {
  const Instance instance = LoadInstance(a.instance);
  const auto orders = WeightedOrders(instance);
  const auto factory = MakePolicy(a.policy);
  json config = {{"command", "ratio"},
                 {"instance", a.instance},
                 {"instance_name", instance.name()},
                 {"policy", a.policy},
                 {"exact", a.exact}};
  json report;
  Table table;
  Fields fields;
  if (a.exact) {
    config["limits"] = a.limits.ToJson();
    const RatioReport r =
        RatioExact(instance, orders, *factory, a.seed, a.limits.limits);
    json per = json::array();
    table.header = {"order", "weight", "alg", "opt", "ratio"};
    for (size_t i = 0; i < r.per_order.size(); ++i) {
      const OrderRatio& o = r.per_order[i];
      per.push_back({{"order", i}, {"weight", o.weight}, {"alg", o.alg},
                     {"opt", o.opt},
                     {"ratio", o.ratio ? json(*o.ratio) : json(nullptr)}});
      table.rows.push_back({std::to_string(i), Num(o.weight), Num(o.alg),
                            Num(o.opt), o.ratio ? Num(*o.ratio) : ""});
      if (o.ratio) fields["ratio" + std::to_string(i)] = *o.ratio;
    }
    report = {{"per_order", std::move(per)}, {"min_ratio", r.min_ratio},
              {"xi", r.xi}, {"prophet", r.prophet}, {"warnings", r.warnings}};
    fields["min_ratio"] = r.min_ratio;
    fields["xi"] = r.xi;
  } else {
    std::vector<std::string> refs = a.references;
    const bool multiunit = instance.metadata().count("construction") &&
                           instance.meta("construction") == "multiunit";
    if (refs.empty() && multiunit) {
      refs = {"multiunit_threshold:d=1.152,variant=pi1",
              "multiunit_threshold:d=0.674,variant=pi2"};
    }
    if (refs.size() == 1 && orders.size() > 1) refs.resize(orders.size(), refs[0]);
    if (!refs.empty() && refs.size() != orders.size()) {
      throw UsageError("give one --reference per order (" +
                       std::to_string(orders.size()) + ") or just one");
    }
    std::vector<PolicyFactoryPtr> ref_factories;
    for (const std::string& s : refs) ref_factories.push_back(MakePolicy(s));
    config["references"] = refs;
    config["trials"] = a.trials;
    const RatioEstimate r =
        EstimateRatio(*factory, instance, orders, ref_factories, a.trials,
                      a.seed, {a.workers, 0});
    json per = json::array();
    table.header = {"order",       "weight",         "numerator_mean",
                    "numerator_ci_lo", "numerator_ci_hi", "denominator",
                    "ratio",       "ratio_ci_lo",    "ratio_ci_hi"};
    for (size_t i = 0; i < r.per_order.size(); ++i) {
      const OrderRatioEstimate& o = r.per_order[i];
      per.push_back({{"order", i},
                     {"weight", orders[i].weight},
                     {"numerator", ReportJson(o.numerator)},
                     {"denominator", o.denominator},
                     {"denominator_ci", IntervalJson(o.denominator_ci)},
                     {"ratio", o.ratio},
                     {"ratio_ci", IntervalJson(o.ratio_ci)}});
      table.rows.push_back({std::to_string(i), Num(orders[i].weight),
                            Num(o.numerator.mean), Num(o.numerator.ci_lo),
                            Num(o.numerator.ci_hi), Num(o.denominator),
                            Num(o.ratio), Num(o.ratio_ci.lo),
                            Num(o.ratio_ci.hi)});
      fields["ratio" + std::to_string(i)] = o.ratio;
    }
    report = {{"per_order", std::move(per)},
              {"min_ratio", r.min_ratio},
              {"min_ratio_ci", IntervalJson(r.min_ratio_ci)},
              {"argmin", r.argmin},
              {"denominator", r.denominator_is_lower_bound
                                  ? "reference_policies"
                                  : "exact_opt"}};
    if (r.denominator_is_lower_bound) {
      report["caveat"] =
          "denominators are reference-policy means, which only bound the "
          "aware optimum from below; ratios are upper estimates";
    }
    fields["min_ratio"] = r.min_ratio;
    fields["min_ratio_lo"] = r.min_ratio_ci.lo;
    fields["min_ratio_hi"] = r.min_ratio_ci.hi;
  }
  report["policy"] = factory->name();
  report["meta"] = Meta(config, a.seed);
  Emit(a.output, std::move(report), table, fields, out, err);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// constants

int CmdConstants(const Output& o, std::ostream& out, std::ostream& err) {
  const auto rows = DerivedConstants();
  json list = json::array();
  Table table{{"name", "value", "published_value", "abs_err", "method"}, {}};
  Fields fields;
  for (const ConstantReport& r : rows) {
    list.push_back({{"name", r.name}, {"value", r.value},
                    {"published_value", r.published_value}, {"abs_err", r.abs_err},
                    {"method", r.method}});
    table.rows.push_back({r.name, Num(r.value), Num(r.published_value),
                          Num(r.abs_err), r.method});
    fields[r.name] = r.value;
    fields[r.name + ".abs_err"] = r.abs_err;
  }
  json report = {{"constants", std::move(list)},
                 {"meta", Meta({{"command", "constants"}}, std::nullopt)}};
  Emit(o, std::move(report), table, fields, out, err);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string what;
  int64_t n = 65536;
  int alpha = 10;
  int k1 = 4;
  int k3 = 64;
  int max_attempts = 100;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string instance;
  std::vector<std::string> policies = {"greedy", "always_select",
                                       "always_discard"};
  Limits limits;
  Output output;
};

int VerifyUFamilyCmd(const VerifyArgs& a, std::ostream& out,
                     std::ostream& err) {
  if (a.seed_opt->count() == 0) throw UsageError("--what u-family needs --seed");
  const json config = {{"command", "verify"}, {"what", a.what},
                       {"n", a.n},            {"alpha", a.alpha},
                       {"k1", a.k1},          {"k3", a.k3},
                       {"max_attempts", a.max_attempts}};
  const UFamily fam = BuildUFamily(a.n, a.alpha, a.k1, a.k3,
                                   CounterRng(a.seed, 0, Stream::kConstruction),
                                   a.max_attempts);
  const UFamilyReport r = VerifyUFamily(fam);
  json report = {{"attempts", fam.attempts},
                 {"sets", fam.sets},
                 {"size_lo", r.size_lo},
                 {"size_hi", r.size_hi},
                 {"membership_cap", r.membership_cap},
                 {"size_ok", r.size_ok},
                 {"membership_ok", r.membership_ok},
                 {"intersection_ok", r.intersection_ok},
                 {"distinct_ok", r.distinct_ok},
                 {"ok", r.ok()},
                 {"meta", Meta(config, a.seed)}};
  Table table{{"attempts", "sets", "size_ok", "membership_ok",
               "intersection_ok", "distinct_ok", "ok"},
              {{std::to_string(fam.attempts), std::to_string(fam.sets.size()),
                r.size_ok ? "1" : "0", r.membership_ok ? "1" : "0",
                r.intersection_ok ? "1" : "0", r.distinct_ok ? "1" : "0",
                r.ok() ? "1" : "0"}}};
  Fields fields{{"ok", r.ok()}, {"attempts", fam.attempts}};
  Emit(a.output, std::move(report), table, fields, out, err);
  return kExitOk;
}

int VerifyInvariantsCmd(const VerifyArgs& a, std::ostream& out,
                        std::ostream& err) {
  if (a.instance.empty()) throw UsageError("--what invariants needs --instance");
  const Instance instance = LoadInstance(a.instance);
  const auto orders = WeightedOrders(instance);
  const SolverLimits& lim = a.limits.limits;
  constexpr double kSlack = 1e-9;
  json relations = json::array();
  Table table{{"relation", "lhs", "rhs", "pass"}, {}};
  int failures = 0;
  // Records lhs >= rhs - slack.
  auto relate = [&](const std::string& name, double lhs, double rhs) {
    const bool pass = lhs >= rhs - kSlack;
    failures += !pass;
    relations.push_back({{"relation", name}, {"lhs", lhs}, {"rhs", rhs},
                         {"pass", pass}});
    table.rows.push_back({name, Num(lhs), Num(rhs), pass ? "1" : "0"});
  };

  const double prophet = ProphetExact(instance, lim).value;
  std::vector<double> aware;
  double aware_mix = 0.0;
  for (size_t i = 0; i < orders.size(); ++i) {
    aware.push_back(OptAwareExact(instance, orders[i].order, lim).value);
    aware_mix += orders[i].weight * aware[i];
    relate("prophet >= opt_aware[" + std::to_string(i) + "]", prophet,
           aware[i]);
  }
  const UnawareResult unaware = OptUnawareExact(instance, orders, lim);
  relate("E[opt_aware] >= opt_unaware", aware_mix, unaware.total.value);
  for (size_t i = 0; i < orders.size(); ++i) {
    relate("opt_aware[" + std::to_string(i) + "] >= opt_unaware[" +
               std::to_string(i) + "]",
           aware[i], unaware.per_order[i]);
  }
  for (const std::string& spec : a.policies) {
    const auto factory = MakePolicy(spec);
    double mix = 0.0;
    for (size_t i = 0; i < orders.size(); ++i) {
      const double v = EvaluatePolicyExact(*factory, instance, orders[i].order,
                                           nullptr, a.seed, lim);
      mix += orders[i].weight * v;
      relate("opt_aware[" + std::to_string(i) + "] >= " + factory->name(),
             aware[i], v);
    }
    if (!factory->order_aware()) {
      relate("opt_unaware >= " + factory->name(), unaware.total.value, mix);
    }
    try {
      const RatioReport r =
          RatioExact(instance, orders, *factory, a.seed, lim);
      relate("rho >= xi for " + factory->name(), r.min_ratio, r.xi);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDivisionByZeroOpt) throw;
    }
  }
  const json config = {{"command", "verify"},
                       {"what", a.what},
                       {"instance", a.instance},
                       {"instance_name", instance.name()},
                       {"policies", a.policies},
                       {"limits", a.limits.ToJson()}};
  json report = {{"relations", std::move(relations)},
                 {"failures", failures},
                 {"ok", failures == 0},
                 {"meta", Meta(config, a.seed)}};
  Fields fields{{"ok", failures == 0}, {"failures", failures}};
  Emit(a.output, std::move(report), table, fields, out, err);
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kTooLarge:
    case ErrorCode::kExhaustedAttempts:
      return kExitResource;
    case ErrorCode::kInconsistentState:
    case ErrorCode::kPolicyViolation:
      return kExitInternal;
    default:
      return kExitUsage;
  }
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Order-competitive prophet inequality experiments", "ocrlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string(OCRLAB_VERSION) + " (" + OCRLAB_GIT_DESCRIBE + ")");

  const int default_workers = omp_get_max_threads();
  std::function<int()> action;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "build an instance file");
  g->add_option("--construction", gen.construction)
      ->required()
      ->check(CLI::IsMember({"tree", "nested", "nested-scaled", "multiunit",
                             "partition", "partition-scaled", "pairs"}));
  gen.k_opt = g->add_option("--k", gen.k, "tree depth / multi-unit capacity / pair count");
  gen.kappa_opt = g->add_option("--kappa", gen.kappa);
  g->add_option("--blocks", gen.blocks);
  g->add_option("--block-size", gen.block_size);
  g->add_option("--p", gen.p);
  gen.x_opt = g->add_option("--x", gen.x, "n = 4^x");
  g->add_option("--k1", gen.scaled.k1);
  g->add_option("--k2", gen.scaled.k2);
  g->add_option("--k3", gen.scaled.k3);
  g->add_option("--usize", gen.scaled.u_size);
  g->add_option("--q", gen.scaled.q);
  g->add_option("--alpha", gen.alpha);
  g->add_option("--max-attempts", gen.max_attempts);
  gen.seed_opt = g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "instance path (default stdout)");
  g->callback([&] { action = [&] { return CmdGen(gen, out); }; });

  SimulateArgs sim;
  sim.workers = default_workers;
  auto* s = app.add_subcommand("simulate", "Monte Carlo policy evaluation");
  s->add_option("--instance", sim.instance)->required();
  s->add_option("--policy", sim.policies)->required();
  s->add_option("--order", sim.order, "'dist' or an order index");
  s->add_option("--trials", sim.trials)->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed)->required();
  s->add_option("--workers", sim.workers);
  s->add_option("--trace-dump", sim.trace_dump);
  AddOutputOptions(s, sim.output);
  s->callback([&] { action = [&] { return CmdSimulate(sim, out, err); }; });

  ExactArgs ex;
  auto* e = app.add_subcommand("exact", "exact solvers");
  e->add_option("--instance", ex.instance)->required();
  e->add_option("--mode", ex.mode)
      ->required()
      ->check(CLI::IsMember({"aware", "unaware", "prophet", "policy",
                             "exhaustive"}));
  e->add_option("--order", ex.order);
  e->add_option("--policy", ex.policy);
  e->add_option("--seed", ex.seed, "policy stream; tree order draw");
  ex.limits.Add(e);
  AddOutputOptions(e, ex.output);
  e->callback([&] { action = [&] { return CmdExact(ex, out, err); }; });

  RatioArgs ratio;
  ratio.workers = default_workers;
  auto* r = app.add_subcommand("ratio", "per-order ratio against the aware benchmark");
  r->add_option("--instance", ratio.instance)->required();
  r->add_option("--policy", ratio.policy)->required();
  r->add_option("--reference", ratio.references,
                "aware reference policy per order (default: exact OPT)");
  r->add_option("--trials", ratio.trials)->check(CLI::PositiveNumber);
  r->add_option("--seed", ratio.seed)->required();
  r->add_option("--workers", ratio.workers);
  r->add_flag("--exact", ratio.exact, "exact evaluation instead of sampling");
  ratio.limits.Add(r);
  AddOutputOptions(r, ratio.output);
  r->callback([&] { action = [&] { return CmdRatio(ratio, out, err); }; });

  Output constants;
  auto* c = app.add_subcommand("constants", "derived constants table");
  AddOutputOptions(c, constants);
  c->callback([&] { action = [&] { return CmdConstants(constants, out, err); }; });

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "set-family and ordering checks");
  v->add_option("--what", ver.what)
      ->required()
      ->check(CLI::IsMember({"u-family", "invariants"}));
  v->add_option("--n", ver.n);
  v->add_option("--alpha", ver.alpha);
  v->add_option("--k1", ver.k1);
  v->add_option("--k3", ver.k3);
  v->add_option("--max-attempts", ver.max_attempts);
  ver.seed_opt = v->add_option("--seed", ver.seed);
  v->add_option("--instance", ver.instance);
  v->add_option("--policy", ver.policies);
  ver.limits.Add(v);
  AddOutputOptions(v, ver.output);
  v->callback([&] {
    action = [&] {
      return ver.what == "u-family" ? VerifyUFamilyCmd(ver, out, err)
                                    : VerifyInvariantsCmd(ver, out, err);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const CheckFailed&) {
    return kExitCheckFailed;
  } catch (const UsageError& ue) {
    err << "usage error: " << ue.what() << "\n";
    return kExitUsage;
  } catch (const Error& oe) {
    err << oe.what() << "\n";
    return ExitCodeFor(oe.code());
  } catch (const std::exception& se) {
    err << "error: " << se.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ocrlab::cli
