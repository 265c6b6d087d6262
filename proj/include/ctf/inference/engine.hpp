#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ctf/ir/runtime.hpp"

namespace ctf {

struct WeightedSample {
  Value value;
  double log_weight = 0.0;
};

struct TracePoint {
  double elapsed_s = 0.0;
  double log_z = 0.0;
};

struct WeightedSampleSet {
  std::vector<WeightedSample> samples;
  double log_z = 0.0;
  std::vector<TracePoint> trace;
};

/// Exact distribution over return values, with the unnormalized total mass.
struct ExactMarginal {
  std::map<Value, double> probs;
  double log_z = 0.0;
  std::size_t executions = 0;

  double probability(const Value& v) const;
};

struct EnumerateOptions {
  std::size_t max_executions = 2'000'000;
};

/// Walks the full execution tree. Each execution contributes
/// exp(sum of choice log-masses + sum of factor scores).
/// Throws NonTerminating once the execution budget is exhausted.
ExactMarginal enumerate(const ModelProgram& model, EnumerateOptions options = {});

double total_variation(const ExactMarginal& a, const ExactMarginal& b);
double expectation(const ExactMarginal& m, const std::function<double(const Value&)>& f);

struct ImportanceOptions {
  /// Stop launching new particles once this many seconds have elapsed.
  std::optional<double> time_budget_s;
  /// Trace-point spacing in particles; 0 picks about 100 points per run.
  std::size_t trace_every = 0;
};

/// n independent prior executions, weighted by the sum of their factors.
WeightedSampleSet importance_sample(const ModelProgram& model, std::size_t n, std::uint64_t seed,
                                    ImportanceOptions options = {});

enum class ResamplePolicy { Multinomial, Systematic };

struct SirOptions {
  ResamplePolicy policy = ResamplePolicy::Systematic;
  /// Resample when ESS / n falls below this; any value >= 1 resamples at
  /// every barrier.
  double ess_threshold = 1.0;
};

/// Sequential importance resampling with every factor statement acting as a
/// barrier: all live particles advance to their next factor (or finish), the
/// incremental weights are folded into log Z, and the population is resampled.
WeightedSampleSet sequential_importance_resample(const ModelProgram& model, std::size_t n, std::uint64_t seed,
                                                 SirOptions options = {});

/// Self-normalized estimate sum(w f) / sum(w). Throws AllZeroWeights.
double estimate_expectation(const WeightedSampleSet& set, const std::function<double(const Value&)>& f);

/// Parent indices drawn in proportion to exp(log_weights).
std::vector<std::size_t> resample(const std::vector<double>& log_weights, std::size_t n, ResamplePolicy policy,
                                  Rng& rng);

/// Record of a single execution, for replay and address checks.
struct ExecutionRecord {
  std::vector<Value> choices;
  std::vector<Address> sample_addresses;
  std::vector<Address> factor_addresses;
  std::vector<double> factor_scores;
  Value result;
};

/// Runs once from the prior.
ExecutionRecord record_execution(const ModelProgram& model, Rng& rng);
/// Runs once answering every sample from `choices`.
ExecutionRecord replay_execution(const ModelProgram& model, const std::vector<Value>& choices);

Rng make_rng(std::uint64_t seed, std::uint64_t stream_a = 0, std::uint64_t stream_b = 0);

}  // namespace ctf
