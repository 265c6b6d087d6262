#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ctf/transform/lifting.hpp"

namespace ctf::fhmm {

/// Banded factorial HMM. States are 1-based. Both matrices have entries
/// proportional to 2^-|i-j|, row-normalized; stored row-major, 0-based.
struct FhmmParams {
  int M = 0;
  int k = 0;
  int steps = 0;
  std::vector<double> transition;
  std::vector<double> observation;

  double trans(int from, int to) const { return transition[static_cast<std::size_t>(from - 1) * M + (to - 1)]; }
  double obs(int state, int y) const { return observation[static_cast<std::size_t>(state - 1) * M + (y - 1)]; }
};

/// steps rows of k observed values in [1, M].
using Observations = std::vector<std::vector<int>>;

/// Throws NonDyadicM unless M is a power of two.
FhmmParams make_params(int M, int k, int steps);

/// Draws hidden chains from the prior (uniform initial state, banded
/// transitions) and emits one observation per substate. Deterministic in seed.
Observations sample_observations(const FhmmParams& p, std::uint64_t seed);

/// Throws ObservationOutOfRange or DimensionMismatch.
void check_observations(const FhmmParams& p, const Observations& y);

/// Forward algorithm over the full M^k joint state. Feasible for small M^k.
double exact_log_z(const FhmmParams& p, const Observations& y);

/// Same quantity as the sum of per-chain forward passes; valid because the
/// chains are independent given the observations' factorization.
double factorized_log_z(const FhmmParams& p, const Observations& y);

/// Number of interval coarsening levels: log2(M).
int max_levels(int M);

/// Each step samples the k substates through the decorrelated transition
/// family (uniform maxent draw plus a lifted correction score), then factors
/// on the observation log-probabilities. Returns the whole state sequence.
LiftableModel fhmm_model(const FhmmParams& p, const Observations& y, std::shared_ptr<const CoarseningScheme> scheme);

}  // namespace ctf::fhmm
