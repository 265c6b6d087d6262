#include "ctf/bench/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <regex>
#include <set>

#include "ctf/models/fhmm.hpp"
#include "ctf/models/ising.hpp"
#include "ctf/models/stereo.hpp"

namespace ctf::bench {

namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

const char* model_name(ModelKind m) {
  switch (m) {
    case ModelKind::Ising: return "ising";
    case ModelKind::Stereo: return "stereo";
    case ModelKind::Fhmm: return "fhmm";
  }
  return "?";
}

}  // namespace

Benchmark make_benchmark(const ExperimentConfig& c) {
  c.validate();
  const int levels = c.levels();
  auto lift = [&](const LiftableModel& m, const std::shared_ptr<const CoarseningScheme>& s) {
    return c.is_ctf() ? coarse_to_fine_model(m, levels, s) : flat_model(m, s);
  };
  Benchmark b;
  switch (c.model) {
    case ModelKind::Ising: {
      auto s = std::make_shared<const CoarseningScheme>(ising::majority_scheme());
      b.program = lift(ising::ising_model(c.n, c.temperature, s), s);
      const double coupling = 1.0 / c.temperature;
      b.score = [coupling](const Value& v) { return ising::energy(v, coupling); };
      b.sequential = c.is_ctf();
      break;
    }
    case ModelKind::Stereo: {
      auto s = std::make_shared<const CoarseningScheme>(stereo::block_scheme(c.max_disparity));
      auto pair = std::make_shared<const stereo::StereoPair>(
          stereo::synthesize_pair(c.scene_seed, c.width, c.height, c.max_disparity));
      b.program = lift(stereo::stereo_model(*pair, c.max_disparity, s), s);
      b.score = [pair](const Value& v) { return -stereo::energy(v, pair->left, pair->right); };
      b.sequential = c.is_ctf();
      break;
    }
    case ModelKind::Fhmm: {
      auto s = std::make_shared<const CoarseningScheme>(interval_scheme());
      auto p = std::make_shared<const fhmm::FhmmParams>(fhmm::make_params(c.M, c.k, c.steps));
      auto y = std::make_shared<const fhmm::Observations>(fhmm::sample_observations(*p, c.data_seed));
      b.program = lift(fhmm::fhmm_model(*p, *y, s), s);
      b.score = [p, y](const Value& v) {
        double lp = 0.0;
        const auto& hist = v.items();
        for (std::size_t t = 0; t < hist.size(); ++t) {
          for (int j = 0; j < p->k; ++j) {
            const int x = static_cast<int>(hist[t].items()[j].number());
            lp += t == 0 ? -std::log(static_cast<double>(p->M))
                         : std::log(p->trans(static_cast<int>(hist[t - 1].items()[j].number()), x));
            lp += std::log(p->obs(x, (*y)[t][j]));
          }
        }
        return lp;
      };
      b.sequential = true;
      break;
    }
  }
  return b;
}

namespace {

WeightedSampleSet run_once(const Benchmark& b, std::size_t particles, std::uint64_t seed) {
  return b.sequential ? sequential_importance_resample(b.program, particles, seed)
                      : importance_sample(b.program, particles, seed);
}

double best_of(const Benchmark& b, const WeightedSampleSet& set) {
  double best = kNegInf;
  for (const auto& s : set.samples) {
    if (s.log_weight > kNegInf) best = std::max(best, b.score(s.value));
  }
  return best;
}

}  // namespace

RunTrace run_benchmark(const Benchmark& b, const ExperimentConfig& c, std::uint64_t seed) {
  RunTrace r;
  r.seed = seed;
  r.condition = c.condition;
  if (c.budget_mode == BudgetMode::EqualParticles) {
    auto set = run_once(b, c.particles, seed);
    r.points = set.trace;
    if (r.points.empty()) r.points.push_back({0.0, set.log_z});
    r.final_log_z = set.log_z;
    r.best_score = best_of(b, set);
    r.particles_used = c.particles;
    return r;
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> batch_log_z;
  r.best_score = kNegInf;
  for (std::uint64_t batch = 0;; ++batch) {
    const std::uint64_t batch_seed = batch == 0 ? seed : make_rng(seed, batch)();
    auto set = run_once(b, c.particles, batch_seed);
    batch_log_z.push_back(set.log_z);
    r.particles_used += c.particles;
    r.best_score = std::max(r.best_score, best_of(b, set));
    const double pooled = log_sum_exp(batch_log_z) - std::log(static_cast<double>(batch_log_z.size()));
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!r.points.empty() && elapsed <= r.points.back().elapsed_s) {
      elapsed = std::nextafter(r.points.back().elapsed_s, std::numeric_limits<double>::infinity());
    }
    r.points.push_back({elapsed, pooled});
    r.final_log_z = pooled;
    if (elapsed >= c.time_budget_s) break;
  }
  return r;
}

namespace {

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

int ExperimentConfig::levels() const {
  if (condition == "flat") return 0;
  static const std::regex ctf_re(R"(ctf\((\d+)\))");
  std::smatch m;
  if (!std::regex_match(condition, m, ctf_re)) config_error("condition must be 'flat' or 'ctf(L)': " + condition);
  return std::stoi(m[1].str());
}

bool ExperimentConfig::is_ctf() const { return condition != "flat"; }

void ExperimentConfig::validate() const {
  const int l = levels();
  int max_levels = 0;
  try {
    switch (model) {
      case ModelKind::Ising:
        max_levels = ising::max_coarsening_steps(n);
        if (!(temperature > 0.0)) config_error("temperature must be positive");
        break;
      case ModelKind::Stereo:
        max_levels = stereo::max_coarsening_steps(height, width);
        if (max_disparity < 0 || max_disparity >= width) config_error("max_disparity must lie in [0, width)");
        break;
      case ModelKind::Fhmm:
        max_levels = fhmm::max_levels(M);
        if (k < 1 || steps < 1) config_error("k and steps must be positive");
        break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(std::string(model_name(model)) + ": " + e.what());
  }
  if (l > max_levels) {
    config_error("levels " + std::to_string(l) + " exceed the model's " + std::to_string(max_levels));
  }
  const bool sequential = is_ctf() || model == ModelKind::Fhmm;
  if (particles < (sequential ? 2u : 1u)) config_error("too few particles");
  if (seeds.empty()) config_error("no seeds");
  if (budget_mode == BudgetMode::EqualTime && !(time_budget_s > 0.0)) config_error("equal-time needs time_budget_s > 0");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{"model",      "n",         "temperature", "width",         "height",
                                           "max_disparity", "scene_seed", "M",        "k",             "steps",
                                           "data_seed",  "condition", "particles",   "budget_mode",   "time_budget_s",
                                           "seeds",      "output"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) config_error("unknown field '" + key + "'");
  }
  ExperimentConfig c;
  std::string model = "ising";
  read_field(j, "model", model);
  if (model == "ising") c.model = ModelKind::Ising;
  else if (model == "stereo") c.model = ModelKind::Stereo;
  else if (model == "fhmm") c.model = ModelKind::Fhmm;
  else config_error("unknown model '" + model + "'");
  read_field(j, "n", c.n);
  read_field(j, "temperature", c.temperature);
  read_field(j, "width", c.width);
  read_field(j, "height", c.height);
  read_field(j, "max_disparity", c.max_disparity);
  read_field(j, "scene_seed", c.scene_seed);
  read_field(j, "M", c.M);
  read_field(j, "k", c.k);
  read_field(j, "steps", c.steps);
  read_field(j, "data_seed", c.data_seed);
  read_field(j, "condition", c.condition);
  read_field(j, "particles", c.particles);
  std::string budget = "equal-particles";
  read_field(j, "budget_mode", budget);
  if (budget == "equal-particles") c.budget_mode = BudgetMode::EqualParticles;
  else if (budget == "equal-time") c.budget_mode = BudgetMode::EqualTime;
  else config_error("unknown budget_mode '" + budget + "'");
  read_field(j, "time_budget_s", c.time_budget_s);
  read_field(j, "seeds", c.seeds);
  read_field(j, "output", c.output);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  return json{{"model", model_name(model)},
              {"n", n},
              {"temperature", temperature},
              {"width", width},
              {"height", height},
              {"max_disparity", max_disparity},
              {"scene_seed", scene_seed},
              {"M", M},
              {"k", k},
              {"steps", steps},
              {"data_seed", data_seed},
              {"condition", condition},
              {"particles", particles},
              {"budget_mode", budget_mode == BudgetMode::EqualParticles ? "equal-particles" : "equal-time"},
              {"time_budget_s", time_budget_s},
              {"seeds", seeds},
              {"output", output}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::vector<RunTrace> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Benchmark b = make_benchmark(config);
  std::vector<RunTrace> out;
  out.reserve(config.seeds.size());
  for (auto seed : config.seeds) out.push_back(run_benchmark(b, config, seed));
  return out;
}

}  // namespace ctf::bench
