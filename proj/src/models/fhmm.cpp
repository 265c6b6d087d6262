#include "ctf/models/fhmm.hpp"

#include <cmath>
#include <random>

#include "ctf/ir/decorrelate.hpp"

namespace ctf::fhmm {

namespace {

std::vector<double> banded(int M) {
  std::vector<double> m(static_cast<std::size_t>(M) * M);
  for (int i = 0; i < M; ++i) {
    double z = 0.0;
    for (int j = 0; j < M; ++j) z += std::exp2(-std::abs(i - j));
    for (int j = 0; j < M; ++j) m[static_cast<std::size_t>(i) * M + j] = std::exp2(-std::abs(i - j)) / z;
  }
  return m;
}

int draw_row(const FhmmParams& p, const std::vector<double>& m, int from, std::mt19937_64& rng) {
  const auto* row = &m[static_cast<std::size_t>(from - 1) * p.M];
  std::discrete_distribution<int> d(row, row + p.M);
  return d(rng) + 1;
}

/// One chain's forward pass in log space.
double chain_log_z(const FhmmParams& p, const Observations& y, int j) {
  const int M = p.M;
  std::vector<double> alpha(M), next(M);
  for (int s = 1; s <= M; ++s) alpha[s - 1] = p.obs(s, y[0][j]) / M;
  double log_z = 0.0;
  auto renormalize = [&](std::vector<double>& a) {
    double z = 0.0;
    for (double v : a) z += v;
    for (double& v : a) v /= z;
    log_z += std::log(z);
  };
  renormalize(alpha);
  for (int t = 1; t < p.steps; ++t) {
    for (int s2 = 1; s2 <= M; ++s2) {
      double acc = 0.0;
      for (int s1 = 1; s1 <= M; ++s1) acc += alpha[s1 - 1] * p.trans(s1, s2);
      next[s2 - 1] = acc * p.obs(s2, y[t][j]);
    }
    alpha.swap(next);
    renormalize(alpha);
  }
  return log_z;
}

}  // namespace

int max_levels(int M) {
  if (M < 1 || (M & (M - 1)) != 0) throw Error(ErrorCode::NonDyadicM, "M must be a power of two");
  int l = 0;
  while ((1 << l) < M) ++l;
  return l;
}

FhmmParams make_params(int M, int k, int steps) {
  max_levels(M);
  if (k < 1 || steps < 1) throw Error(ErrorCode::ConfigError, "k and steps must be positive");
  FhmmParams p;
  p.M = M;
  p.k = k;
  p.steps = steps;
  p.transition = banded(M);
  p.observation = banded(M);
  return p;
}

Observations sample_observations(const FhmmParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> init(1, p.M);
  std::vector<int> state(p.k);
  for (auto& s : state) s = init(rng);
  Observations y(p.steps, std::vector<int>(p.k));
  for (int t = 0; t < p.steps; ++t) {
    if (t > 0) {
      for (auto& s : state) s = draw_row(p, p.transition, s, rng);
    }
    for (int j = 0; j < p.k; ++j) y[t][j] = draw_row(p, p.observation, state[j], rng);
  }
  return y;
}

void check_observations(const FhmmParams& p, const Observations& y) {
  if (static_cast<int>(y.size()) != p.steps) throw Error(ErrorCode::DimensionMismatch, "need one row per step");
  for (const auto& row : y) {
    if (static_cast<int>(row.size()) != p.k) throw Error(ErrorCode::DimensionMismatch, "need k values per step");
    for (int v : row) {
      if (v < 1 || v > p.M) throw Error(ErrorCode::ObservationOutOfRange, "observation outside [1, M]");
    }
  }
}

double exact_log_z(const FhmmParams& p, const Observations& y) {
  check_observations(p, y);
  const int M = p.M;
  const int k = p.k;
  std::size_t S = 1;
  for (int j = 0; j < k; ++j) S *= static_cast<std::size_t>(M);
  auto digits = [&](std::size_t s) {
    std::vector<int> d(k);
    for (int j = 0; j < k; ++j) {
      d[j] = static_cast<int>(s % M) + 1;
      s /= M;
    }
    return d;
  };
  std::vector<std::vector<int>> states(S);
  for (std::size_t s = 0; s < S; ++s) states[s] = digits(s);
  auto emit = [&](std::size_t s, int t) {
    double e = 1.0;
    for (int j = 0; j < k; ++j) e *= p.obs(states[s][j], y[t][j]);
    return e;
  };
  std::vector<double> alpha(S), next(S);
  double log_z = 0.0;
  auto renormalize = [&](std::vector<double>& a) {
    double z = 0.0;
    for (double v : a) z += v;
    for (double& v : a) v /= z;
    log_z += std::log(z);
  };
  for (std::size_t s = 0; s < S; ++s) alpha[s] = std::pow(1.0 / M, k) * emit(s, 0);
  renormalize(alpha);
  for (int t = 1; t < p.steps; ++t) {
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      double acc = 0.0;
      for (std::size_t s1 = 0; s1 < S; ++s1) {
        double tr = alpha[s1];
        for (int j = 0; j < k; ++j) tr *= p.trans(states[s1][j], states[s2][j]);
        acc += tr;
      }
      next[s2] = acc * emit(s2, t);
    }
    alpha.swap(next);
    renormalize(alpha);
  }
  return log_z;
}

double factorized_log_z(const FhmmParams& p, const Observations& y) {
  check_observations(p, y);
  double total = 0.0;
  for (int j = 0; j < p.k; ++j) total += chain_log_z(p, y, j);
  return total;
}

LiftableModel fhmm_model(const FhmmParams& p, const Observations& y, std::shared_ptr<const CoarseningScheme> scheme) {
  check_observations(p, y);
  auto params = std::make_shared<const FhmmParams>(p);
  std::vector<Value> support;
  for (int v = 1; v <= p.M; ++v) support.emplace_back(v);
  ErpFamily family{[params](const Value& from) {
                     const int i = static_cast<int>(from.number());
                     std::vector<Value> vals;
                     std::vector<double> w;
                     for (int v = 1; v <= params->M; ++v) {
                       vals.emplace_back(v);
                       w.push_back(params->trans(i, v));
                     }
                     return make_discrete(vals, w);
                   },
                   support};
  // One decorrelation per previous state; every row shares the maxent draw.
  auto rows = std::make_shared<std::vector<Decorrelated>>();
  for (int i = 1; i <= p.M; ++i) rows->push_back(decorrelate(family, Value(i)));
  LiftedErp maxent(rows->front().maxent, scheme);
  auto correction = lift_scorer([rows](const std::vector<Value>& a) {
    return (*rows)[static_cast<std::size_t>(a.at(0).number()) - 1].correction(a.at(1));
  });
  // Observations are data, not program constants: each (t, j) gets its own
  // emission scorer with y fixed, lifted over the state argument only.
  std::vector<std::vector<LiftedScorer>> emission(p.steps);
  for (int t = 0; t < p.steps; ++t) {
    for (int j = 0; j < p.k; ++j) {
      const int obs_value = y[t][j];
      emission[t].push_back(lift_scorer([params, obs_value](const std::vector<Value>& a) {
        return std::log(params->obs(static_cast<int>(a.at(0).number()), obs_value));
      }));
    }
  }
  const int k = p.k;
  const int steps = p.steps;
  // Labels are interned once; only the indices vary per call.
  const Site step_site("step"), chain_site("chain"), x_site("x"), correction_site("correction"),
      observe_site("observe");
  return [=](LevelContext& ctx) {
    std::vector<Value> history;
    std::function<void(int, const std::vector<Value>&)> step = [&](int t, const std::vector<Value>& prev) {
      ctx.call(step_site.indexed(t), [&] {
        std::vector<Value> state(k);
        for (int j = 0; j < k; ++j) {
          ctx.call(chain_site.indexed(j), [&] {
            state[j] = ctx.sample(x_site, maxent);
            if (t > 0) ctx.factor(correction_site, ctx.score(correction, {prev[j], state[j]}));
          });
        }
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += ctx.score(emission[t][j], {state[j]});
        ctx.factor(observe_site, s);
        history.emplace_back(Tuple{state});
        if (t + 1 < steps) step(t + 1, state);
      });
    };
    step(0, {});
    return Value(Tuple{std::move(history)});
  };
}

}  // namespace ctf::fhmm
