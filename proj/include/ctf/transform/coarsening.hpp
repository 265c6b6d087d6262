#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctf/ir/distribution.hpp"

namespace ctf {

/// How lifted ERPs score a coarse value (the probability of its class of
/// base values).
enum class ScorerMode {
  Exact,    ///< enumerate the refinement tree down to base values
  Sampled,  ///< Monte-Carlo fraction of base draws that coarsen to the value
  User,     ///< delegate to CoarseningScheme::exact_mass
};

/// Paired coarsen/refine maps. Required law:
///   v in refine(V)  <=>  coarsen(v) == V.
struct CoarseningScheme {
  std::function<Value(const Value&)> coarsen;
  std::function<std::vector<Value>(const Value&)> refine;
  /// log of the base mass of every value that coarsens to `coarse` in
  /// `level` steps. Used in ScorerMode::User.
  std::function<double(const Distribution& base, const Value& coarse, int level)> exact_mass;
  ScorerMode scorer = ScorerMode::Exact;
  int scorer_samples = 1000;
};

/// Applies scheme.coarsen `times` times.
Value coarsen_times(const CoarseningScheme& scheme, Value v, int times);

struct InverseLawViolation {
  Value value;
  Value coarse;
  std::string reason;
};

struct InverseLawReport {
  std::size_t values_checked = 0;
  std::size_t refinements_checked = 0;
  std::vector<InverseLawViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks both directions of the inverse law for every value in `domain` and
/// every refinement of every coarse image. Violations are reported, not thrown.
InverseLawReport check_inverse_law(const CoarseningScheme& scheme, const std::vector<Value>& domain);

/// Dyadic interval coarsening on 1-based integers: n -> [lo, lo+1] with lo odd,
/// then widths double while staying aligned. Booleans coarsen to themselves and
/// tuples coarsen element-wise.
CoarseningScheme interval_scheme();

/// Every value is its own coarsening.
CoarseningScheme identity_scheme();

/// Wraps `inner` so that tuples coarsen element-wise and refine to the
/// Cartesian product of element refinements.
CoarseningScheme tuple_transparent(CoarseningScheme inner);

}  // namespace ctf
