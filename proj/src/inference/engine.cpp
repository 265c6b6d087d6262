#include "ctf/inference/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "execution.hpp"

namespace ctf {

namespace {

using detail::Execution;
using Clock = std::chrono::steady_clock;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void push_trace(std::vector<TracePoint>& trace, double elapsed, double log_z) {
  if (!trace.empty() && elapsed <= trace.back().elapsed_s) {
    elapsed = std::nextafter(trace.back().elapsed_s, std::numeric_limits<double>::infinity());
  }
  trace.push_back({elapsed, log_z});
}

double effective_sample_fraction(const std::vector<double>& log_w) {
  const double z = log_sum_exp(log_w);
  if (z == kNegInf) return 0.0;
  double s2 = 0.0;
  for (double lw : log_w) {
    if (lw != kNegInf) s2 += std::exp(2.0 * (lw - z));
  }
  return (1.0 / s2) / static_cast<double>(log_w.size());
}

struct Particle {
  std::vector<Value> choices;
  std::size_t factors_done = 0;
  bool finished = false;
  Value result;
  Rng rng;
};

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b) {
  // splitmix64 finalizer chained over the three words; seed_seq is far slower
  // and this runs once per particle per barrier.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return Rng(mix(mix(mix(seed) ^ stream_a) ^ stream_b));
}

double ExactMarginal::probability(const Value& v) const {
  auto it = probs.find(v);
  return it == probs.end() ? 0.0 : it->second;
}

ExactMarginal enumerate(const ModelProgram& model, EnumerateOptions options) {
  std::vector<std::vector<Value>> pending;
  pending.emplace_back();
  std::map<Value, std::vector<double>> by_value;
  std::size_t executions = 0;

  while (!pending.empty()) {
    std::vector<Value> prefix = std::move(pending.back());
    pending.pop_back();
    if (++executions > options.max_executions) {
      throw Error(ErrorCode::NonTerminating,
                  "execution budget of " + std::to_string(options.max_executions) + " exhausted");
    }
    const std::size_t depth = prefix.size();
    Execution::Config cfg;
    cfg.choices = &prefix;
    cfg.branch_on_fresh_choice = true;
    cfg.score_choices = true;
    cfg.prune_impossible = true;
    Execution ex(cfg);
    try {
      Value result = ex.run(model);
      const double lw = ex.log_prior() + ex.factor_sum();
      if (lw != kNegInf) by_value[result].push_back(lw);
    } catch (const Execution::Branch& b) {
      auto support = b.dist.support();
      for (auto it = support.rbegin(); it != support.rend(); ++it) {
        if (b.dist.log_mass(*it) == kNegInf) continue;
        std::vector<Value> next(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(depth));
        next.push_back(*it);
        pending.push_back(std::move(next));
      }
    } catch (const Execution::Prune&) {
    }
  }

  ExactMarginal out;
  out.executions = executions;
  std::vector<double> totals;
  std::vector<std::pair<Value, double>> per_value;
  for (auto& [v, lws] : by_value) {
    const double lz = log_sum_exp(lws);
    totals.push_back(lz);
    per_value.emplace_back(v, lz);
  }
  out.log_z = log_sum_exp(totals);
  if (out.log_z == kNegInf) throw Error(ErrorCode::AllZeroWeights, "model has no execution with positive mass");
  for (auto& [v, lz] : per_value) out.probs.emplace(v, std::exp(lz - out.log_z));
  return out;
}

double total_variation(const ExactMarginal& a, const ExactMarginal& b) {
  double tv = 0.0;
  for (const auto& [v, p] : a.probs) tv += std::abs(p - b.probability(v));
  for (const auto& [v, p] : b.probs) {
    if (!a.probs.count(v)) tv += p;
  }
  return 0.5 * tv;
}

double expectation(const ExactMarginal& m, const std::function<double(const Value&)>& f) {
  double e = 0.0;
  for (const auto& [v, p] : m.probs) e += p * f(v);
  return e;
}

WeightedSampleSet importance_sample(const ModelProgram& model, std::size_t n, std::uint64_t seed,
                                    ImportanceOptions options) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "importance sampling needs n >= 1");
  const auto start = Clock::now();
  const std::size_t every = options.trace_every ? options.trace_every : std::max<std::size_t>(1, n / 100);
  WeightedSampleSet out;
  out.samples.reserve(n);
  std::vector<double> log_w;
  log_w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && options.time_budget_s && seconds_since(start) >= *options.time_budget_s) break;
    Rng rng = make_rng(seed, i);
    std::vector<Value> choices;
    Execution::Config cfg;
    cfg.choices = &choices;
    cfg.rng = &rng;
    Execution ex(cfg);
    Value result = ex.run(model);
    out.samples.push_back({std::move(result), ex.factor_sum()});
    log_w.push_back(ex.factor_sum());
    if ((i + 1) % every == 0 || i + 1 == n) {
      push_trace(out.trace, seconds_since(start),
                 log_sum_exp(log_w) - std::log(static_cast<double>(log_w.size())));
    }
  }
  out.log_z = log_sum_exp(log_w) - std::log(static_cast<double>(log_w.size()));
  if (out.trace.empty() || out.trace.back().log_z != out.log_z) push_trace(out.trace, seconds_since(start), out.log_z);
  return out;
}

WeightedSampleSet sequential_importance_resample(const ModelProgram& model, std::size_t n, std::uint64_t seed,
                                                 SirOptions options) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "SIR needs n >= 2");
  const auto start = Clock::now();
  std::vector<Particle> particles(n);
  for (std::size_t i = 0; i < n; ++i) particles[i].rng = make_rng(seed, 0, i);
  Rng resample_rng = make_rng(seed, 0xfeed, 0);

  WeightedSampleSet out;
  std::vector<double> log_w(n, 0.0);
  std::vector<double> inc(n, 0.0);
  double log_z = 0.0;
  std::uint64_t barrier = 0;

  for (;;) {
    bool any_paused = false;
    for (std::size_t i = 0; i < n; ++i) {
      inc[i] = 0.0;
      Particle& p = particles[i];
      if (p.finished) continue;
      Execution::Config cfg;
      cfg.choices = &p.choices;
      cfg.rng = &p.rng;
      cfg.pause_at_factor = p.factors_done;
      Execution ex(cfg);
      try {
        p.result = ex.run(model);
        p.finished = true;
      } catch (const Execution::Pause&) {
        inc[i] = ex.paused_score();
        ++p.factors_done;
        any_paused = true;
      }
    }
    if (!any_paused) break;

    const double before = log_sum_exp(log_w);
    for (std::size_t i = 0; i < n; ++i) log_w[i] += inc[i];
    const double after = log_sum_exp(log_w);
    ++barrier;
    if (after == kNegInf) {
      log_z = kNegInf;
      push_trace(out.trace, seconds_since(start), log_z);
      break;
    }
    log_z += after - before;
    push_trace(out.trace, seconds_since(start), log_z);

    if (effective_sample_fraction(log_w) < options.ess_threshold || options.ess_threshold >= 1.0) {
      auto parents = resample(log_w, n, options.policy, resample_rng);
      std::vector<Particle> next(n);
      for (std::size_t i = 0; i < n; ++i) {
        next[i].choices = particles[parents[i]].choices;
        next[i].factors_done = particles[parents[i]].factors_done;
        next[i].finished = particles[parents[i]].finished;
        next[i].result = particles[parents[i]].result;
        next[i].rng = make_rng(seed, barrier, i);
      }
      particles = std::move(next);
      std::fill(log_w.begin(), log_w.end(), 0.0);
    }
  }

  out.log_z = log_z;
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (particles[i].finished) out.samples.push_back({particles[i].result, log_w[i]});
  }
  if (out.trace.empty()) push_trace(out.trace, seconds_since(start), log_z);
  return out;
}

double estimate_expectation(const WeightedSampleSet& set, const std::function<double(const Value&)>& f) {
  std::vector<double> lw;
  lw.reserve(set.samples.size());
  for (const auto& s : set.samples) lw.push_back(s.log_weight);
  const double z = log_sum_exp(lw);
  if (z == kNegInf) throw Error(ErrorCode::AllZeroWeights, "no sample has positive weight");
  double acc = 0.0;
  for (const auto& s : set.samples) {
    if (s.log_weight == kNegInf) continue;
    acc += std::exp(s.log_weight - z) * f(s.value);
  }
  return acc;
}

std::vector<std::size_t> resample(const std::vector<double>& log_weights, std::size_t n, ResamplePolicy policy,
                                  Rng& rng) {
  const double z = log_sum_exp(log_weights);
  if (z == kNegInf || std::isnan(z)) throw Error(ErrorCode::AllZeroWeights, "cannot resample zero total weight");
  std::vector<double> cumulative(log_weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    acc += log_weights[i] == kNegInf ? 0.0 : std::exp(log_weights[i] - z);
    cumulative[i] = acc;
  }
  const double total = acc;
  auto last_positive = log_weights.size() - 1;
  while (last_positive > 0 && log_weights[last_positive] == kNegInf) --last_positive;

  std::vector<std::size_t> parents(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto locate = [&](double u) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    return std::min(idx, last_positive);
  };
  if (policy == ResamplePolicy::Systematic) {
    const double step = total / static_cast<double>(n);
    const double u0 = unit(rng) * step;
    for (std::size_t i = 0; i < n; ++i) parents[i] = locate(u0 + static_cast<double>(i) * step);
  } else {
    for (std::size_t i = 0; i < n; ++i) parents[i] = locate(unit(rng) * total);
  }
  return parents;
}

ExecutionRecord record_execution(const ModelProgram& model, Rng& rng) {
  ExecutionRecord rec;
  Execution::Config cfg;
  cfg.choices = &rec.choices;
  cfg.rng = &rng;
  cfg.record_addresses = true;
  Execution ex(cfg);
  rec.result = ex.run(model);
  rec.sample_addresses = std::move(ex.sample_addresses);
  rec.factor_addresses = std::move(ex.factor_addresses);
  rec.factor_scores = std::move(ex.factor_scores);
  return rec;
}

ExecutionRecord replay_execution(const ModelProgram& model, const std::vector<Value>& choices) {
  ExecutionRecord rec;
  rec.choices = choices;
  const std::size_t expected = choices.size();
  Execution::Config cfg;
  cfg.choices = &rec.choices;
  cfg.branch_on_fresh_choice = true;
  cfg.record_addresses = true;
  Execution ex(cfg);
  try {
    rec.result = ex.run(model);
  } catch (const Execution::Branch&) {
    throw Error(ErrorCode::InvalidArgument, "replay ran past the recorded choices");
  }
  if (ex.consumed_choices() != expected) throw Error(ErrorCode::InvalidArgument, "replay did not consume all choices");
  rec.sample_addresses = std::move(ex.sample_addresses);
  rec.factor_addresses = std::move(ex.factor_addresses);
  rec.factor_scores = std::move(ex.factor_scores);
  return rec;
}

}  // namespace ctf
