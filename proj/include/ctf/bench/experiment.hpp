#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctf/bench/traces.hpp"

namespace ctf::bench {

enum class ModelKind { Ising, Stereo, Fhmm };
enum class BudgetMode { EqualParticles, EqualTime };

/// One experiment. The JSON form mirrors these fields by name; `condition`
/// is "flat" or "ctf(L)" with L coarsening levels.
struct ExperimentConfig {
  ModelKind model = ModelKind::Ising;

  // ising
  int n = 9;
  double temperature = 1.0;
  // stereo
  int width = 16;
  int height = 8;
  int max_disparity = 4;
  std::uint64_t scene_seed = 1;
  // fhmm
  int M = 4;
  int k = 2;
  int steps = 3;
  std::uint64_t data_seed = 1;

  std::string condition = "flat";
  std::size_t particles = 1000;
  BudgetMode budget_mode = BudgetMode::EqualParticles;
  double time_budget_s = 0.0;
  std::vector<std::uint64_t> seeds{1};
  std::string output;

  /// Levels encoded in `condition` (0 for flat). Throws ConfigError.
  int levels() const;
  bool is_ctf() const;
  /// Throws ConfigError.
  void validate() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

/// A runnable program: SIR when `sequential`, importance sampling otherwise.
/// `score` ranks final states (higher is better).
struct Benchmark {
  ModelProgram program;
  bool sequential = false;
  std::function<double(const Value&)> score;
};

/// The program a config describes. Flat MRF models (Ising, stereo) use
/// importance sampling; the FHMM and every coarse-to-fine program use SIR.
Benchmark make_benchmark(const ExperimentConfig& config);

/// One seed under the config's particle count and budget mode.
RunTrace run_benchmark(const Benchmark& b, const ExperimentConfig& config, std::uint64_t seed);

/// One RunTrace per seed, in seed order. Equal-particles runs are
/// deterministic per seed. Equal-time runs repeat batches of `particles`
/// until the deadline and pool their Z estimates.
std::vector<RunTrace> run_experiment(const ExperimentConfig& config);

}  // namespace ctf::bench
