#include "ocrlab/montecarlo.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "ocrlab/error.h"
#include "ocrlab/solvers.h"

namespace ocrlab {

// ---------------------------------------------------------------------------
// OrderSource

OrderSource OrderSource::Fixed(ArrivalOrder order,
                               std::optional<std::vector<char>> good) {
  OrderSource s;
  s.kind_ = Kind::kFixed;
  s.fixed_ = std::move(order);
  s.good_ = std::move(good);
  return s;
}

OrderSource OrderSource::Fixed(TreeOrderRealization realization) {
  return Fixed(std::move(realization.order), std::move(realization.good));
}

OrderSource OrderSource::FromInstance(const Instance& instance) {
  const OrderDistribution& dist = instance.orders();
  if (dist.is_generative()) {
    if (dist.generative().generator != "tree") {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown order generator '" + dist.generative().generator +
                      "'");
    }
    OrderSource s;
    s.kind_ = Kind::kTree;
    s.tree_ = &TreeOracleOf(instance);
    return s;
  }
  const auto finite = dist.finite();
  if (finite.size() <= 1) {
    return Fixed(finite.empty() ? IdentityOrder(instance.size())
                                : finite[0].order);
  }
  OrderSource s;
  s.kind_ = Kind::kFinite;
  double acc = 0.0;
  for (const WeightedOrder& w : finite) {
    s.finite_.push_back(w.order);
    acc += w.weight;
    s.cumulative_.push_back(acc);
  }
  return s;
}

OrderSource::Draw OrderSource::Sample(uint64_t seed, uint64_t trial,
                                      TreeOrderRealization& scratch) const {
  switch (kind_) {
    case Kind::kFixed:
      return {&fixed_, good_ ? &*good_ : nullptr};
    case Kind::kFinite: {
      const double u =
          CounterRng(seed, trial, Stream::kOrder).Uniform() * cumulative_.back();
      size_t i = std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                 cumulative_.begin();
      i = std::min(i, finite_.size() - 1);
      return {&finite_[i], nullptr};
    }
    case Kind::kTree:
      scratch = SampleTreeOrder(*tree_, CounterRng(seed, trial, Stream::kOrder));
      return {&scratch.order, &scratch.good};
  }
  return {nullptr, nullptr};
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

constexpr int64_t kBlock = 256;
constexpr int kMaxTraces = 1000;

// Welford accumulator with Chan's merge.
struct Moments {
  int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void Merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

EvalReport ReportFrom(const Moments& m, uint64_t seed) {
  EvalReport r;
  r.trials = m.n;
  r.seed = seed;
  r.mean = m.mean;
  const double var = m.n > 1 ? m.m2 / static_cast<double>(m.n - 1) : 0.0;
  r.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(m.n));
  r.ci_lo = r.mean - 1.96 * r.std_error;
  r.ci_hi = r.mean + 1.96 * r.std_error;
  return r;
}

struct Workspace {
  std::vector<double> values;
  DecisionState state;
  TreeOrderRealization tree;
};

class Runner {
 public:
  Runner(const PolicyFactory& factory, const Instance& instance,
         const OrderSource& orders, int64_t trials, uint64_t seed,
         const SimulateOptions& options)
      : factory_(factory),
        instance_(instance),
        orders_(orders),
        trials_(trials),
        seed_(seed),
        unaware_{&instance.orders()} {
    if (trials < 2) {
      throw Error(ErrorCode::kInvalidArgument, "simulate needs trials >= 2");
    }
    keep_ = static_cast<int>(std::min<int64_t>(
        {static_cast<int64_t>(std::max(options.trace_dump, 0)), kMaxTraces,
         trials}));
    traces_.resize(keep_);
    blocks_.resize((trials + kBlock - 1) / kBlock);
  }

  int64_t num_blocks() const { return static_cast<int64_t>(blocks_.size()); }

  void RunBlock(int64_t b, Workspace& ws) {
    Moments m;
    const int64_t end = std::min(trials_, (b + 1) * kBlock);
    for (int64_t t = b * kBlock; t < end; ++t) m.Add(RunTrial(t, ws));
    blocks_[b] = m;
  }

  SimulationResult Finish() {
    Moments all;
    for (const Moments& m : blocks_) all.Merge(m);
    SimulationResult out;
    out.report = ReportFrom(all, seed_);
    out.traces = std::move(traces_);
    return out;
  }

 private:
  double RunTrial(int64_t t, Workspace& ws) {
    const auto trial = static_cast<uint64_t>(t);
    const OrderSource::Draw draw = orders_.Sample(seed_, trial, ws.tree);
    SampleValuesInto(instance_, CounterRng(seed_, trial, Stream::kValues),
                     ws.values);
    Knowledge knowledge;
    if (factory_.order_aware()) {
      knowledge = AwareKnowledge{draw.order, draw.good};
    } else {
      knowledge = unaware_;
    }
    auto policy = factory_.Create(instance_, knowledge,
                                  CounterRng(seed_, trial, Stream::kPolicy));
    if (t < keep_) {
      traces_[t] = RunPolicy(*policy, instance_, *draw.order, ws.values);
      return traces_[t].total;
    }
    return RunPolicyTotal(*policy, instance_, *draw.order, ws.values, ws.state);
  }

  const PolicyFactory& factory_;
  const Instance& instance_;
  const OrderSource& orders_;
  int64_t trials_;
  uint64_t seed_;
  UnawareKnowledge unaware_;
  int keep_ = 0;
  std::vector<Trace> traces_;
  std::vector<Moments> blocks_;
};

}  // namespace

SimulationResult Simulate(const PolicyFactory& factory, const Instance& instance,
                          const OrderSource& orders, int64_t trials,
                          uint64_t seed, const SimulateOptions& options) {
  Runner runner(factory, instance, orders, trials, seed, options);
  const int workers =
      options.workers > 0 ? options.workers : omp_get_max_threads();
  std::exception_ptr error;
  int64_t error_block = std::numeric_limits<int64_t>::max();
  const int64_t blocks = runner.num_blocks();
#pragma omp parallel num_threads(workers)
  {
    Workspace ws;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < blocks; ++b) {
      try {
        runner.RunBlock(b, ws);
      } catch (...) {
#pragma omp critical(ocrlab_simulate_error)
        {
          // Report the earliest failing block, as a serial run would.
          if (b < error_block) {
            error_block = b;
            error = std::current_exception();
          }
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return runner.Finish();
}

SimulationResult SimulateSerial(const PolicyFactory& factory,
                                const Instance& instance,
                                const OrderSource& orders, int64_t trials,
                                uint64_t seed, const SimulateOptions& options) {
  Runner runner(factory, instance, orders, trials, seed, options);
  Workspace ws;
  for (int64_t b = 0; b < runner.num_blocks(); ++b) runner.RunBlock(b, ws);
  return runner.Finish();
}

EvalReport Summarize(std::span<const double> samples, uint64_t seed) {
  Moments all;
  for (size_t start = 0; start < samples.size(); start += kBlock) {
    Moments m;
    const size_t end = std::min(samples.size(), start + kBlock);
    for (size_t i = start; i < end; ++i) m.Add(samples[i]);
    all.Merge(m);
  }
  return ReportFrom(all, seed);
}

// ---------------------------------------------------------------------------
// Ratios

Interval QuotientInterval(Interval num, Interval den) {
  const double inf = std::numeric_limits<double>::infinity();
  Interval out;
  out.lo = den.hi > 0.0 ? num.lo / den.hi : -inf;
  out.hi = den.lo > 0.0 ? num.hi / den.lo : inf;
  if (num.lo < 0.0 && den.lo > 0.0) out.lo = num.lo / den.lo;
  return out;
}

namespace {

RatioEstimate Combine(const PolicyFactory& factory, const Instance& instance,
                      std::span<const WeightedOrder> orders,
                      const std::vector<double>& den,
                      const std::vector<Interval>& den_ci, bool lower_bound,
                      int64_t trials, uint64_t seed,
                      const SimulateOptions& options) {
  RatioEstimate est;
  est.denominator_is_lower_bound = lower_bound;
  est.min_ratio = std::numeric_limits<double>::infinity();
  for (size_t o = 0; o < orders.size(); ++o) {
    OrderRatioEstimate r;
    r.numerator = Simulate(factory, instance, OrderSource::Fixed(orders[o].order),
                           trials, seed, options)
                      .report;
    r.denominator = den[o];
    r.denominator_ci = den_ci[o];
    if (!(r.denominator > 0.0)) {
      throw Error(ErrorCode::kDivisionByZeroOpt,
                  "denominator is zero on order " + std::to_string(o));
    }
    r.ratio = r.numerator.mean / r.denominator;
    r.ratio_ci = QuotientInterval({r.numerator.ci_lo, r.numerator.ci_hi},
                                  r.denominator_ci);
    if (r.ratio < est.min_ratio) {
      est.min_ratio = r.ratio;
      est.argmin = static_cast<int>(o);
    }
    est.per_order.push_back(r);
  }
  // The min of the ratios lies between the mins of the interval ends.
  est.min_ratio_ci.lo = est.min_ratio_ci.hi =
      std::numeric_limits<double>::infinity();
  for (const auto& r : est.per_order) {
    est.min_ratio_ci.lo = std::min(est.min_ratio_ci.lo, r.ratio_ci.lo);
    est.min_ratio_ci.hi = std::min(est.min_ratio_ci.hi, r.ratio_ci.hi);
  }
  return est;
}

}  // namespace

RatioEstimate EstimateRatioAgainst(const PolicyFactory& factory,
                                   const Instance& instance,
                                   std::span<const WeightedOrder> orders,
                                   std::span<const EvalReport> references,
                                   int64_t trials, uint64_t seed,
                                   const SimulateOptions& options) {
  if (references.size() != orders.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one reference per order needed");
  }
  std::vector<double> den;
  std::vector<Interval> den_ci;
  for (const EvalReport& r : references) {
    den.push_back(r.mean);
    den_ci.push_back({r.ci_lo, r.ci_hi});
  }
  return Combine(factory, instance, orders, den, den_ci, true, trials, seed,
                 options);
}

RatioEstimate EstimateRatio(const PolicyFactory& factory,
                            const Instance& instance,
                            std::span<const WeightedOrder> orders,
                            std::span<const PolicyFactoryPtr> references,
                            int64_t trials, uint64_t seed,
                            const SimulateOptions& options) {
  if (orders.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no orders given");
  }
  if (!references.empty()) {
    if (references.size() != orders.size()) {
      throw Error(ErrorCode::kInvalidArgument, "one reference per order needed");
    }
    std::vector<EvalReport> refs;
    for (size_t o = 0; o < orders.size(); ++o) {
      refs.push_back(Simulate(*references[o], instance,
                              OrderSource::Fixed(orders[o].order), trials, seed,
                              options)
                         .report);
    }
    return EstimateRatioAgainst(factory, instance, orders, refs, trials, seed,
                                options);
  }
  std::vector<double> den;
  std::vector<Interval> den_ci;
  for (const WeightedOrder& w : orders) {
    const double opt =
        instance.feasibility().kind() == OracleKind::kTreePath
            ? OptAwareTreeExact(instance, w.order).value
            : OptAwareExact(instance, w.order).value;
    den.push_back(opt);
    den_ci.push_back({opt, opt});
  }
  return Combine(factory, instance, orders, den, den_ci, false, trials, seed,
                 options);
}

}  // namespace ocrlab
