#pragma once

#include <memory>
#include <vector>

#include "ctf/ir/runtime.hpp"
#include "ctf/transform/coarsening.hpp"

namespace ctf {

/// log of the base mass of the class of values that coarsen to `coarse` in
/// `level` steps, computed per scheme.scorer. Level 0 is e0.log_mass itself.
/// Throws NegativeLevel.
double get_erp_score(const Distribution& e0, const Value& coarse, int level, const CoarseningScheme& scheme);

/// Values reachable from `coarse` by `level` rounds of (uniform draw o refine),
/// with their probabilities. Throws RefinementExplosion beyond `bound` leaves.
std::vector<std::pair<Value, double>> uniform_refinements(const CoarseningScheme& scheme, const Value& coarse,
                                                          int level, std::size_t bound);

/// An ERP lifted to every coarsening level. Holds the base distribution and
/// caches the coarse-level pushforwards and class scores.
class LiftedErp {
 public:
  LiftedErp(Distribution base, std::shared_ptr<const CoarseningScheme> scheme);

  const Distribution& base() const;
  const CoarseningScheme& scheme() const;

  /// Distribution of cv^level(x0) for x0 ~ base, i.e. q(x_N) at the coarsest level.
  Distribution unconditional(int level) const;
  /// q(x_level | x_{level+1} = coarser): refinements weighted by class score.
  Distribution conditional(int level, const Value& coarser) const;
  /// Cached get_erp_score.
  double score(const Value& coarse, int level) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

struct MarginalizerOptions {
  /// Largest refinement product enumerated exactly; larger spaces are sampled.
  std::size_t exact_bound = std::size_t{1} << 16;
  int samples = 4096;
  /// 0 means unbounded.
  std::size_t cache_capacity = 0;
};

using Primitive = std::function<Value(const std::vector<Value>&)>;
using ScoreFunction = std::function<double(const std::vector<Value>&)>;

/// A deterministic fine-level function lifted to coarse arguments. At level l
/// the lifted call returns a draw from the pushforward of
/// cv^l(f(refined args)), refining each argument by l rounds of uniform
/// choice among its refinements.
class LiftedPrimitive {
 public:
  LiftedPrimitive(Primitive f, MarginalizerOptions options = {});
  /// Applies to coarse values directly; never lifted.
  static LiftedPrimitive polymorphic(Primitive f);

  bool is_polymorphic() const;
  Value fine(const std::vector<Value>& args) const;
  Distribution at_level(const std::vector<Value>& args, int level, const CoarseningScheme& scheme) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

/// A score function lifted by taking the expectation over uniformly drawn
/// refinements of its arguments.
class LiftedScorer {
 public:
  LiftedScorer(ScoreFunction f, MarginalizerOptions options = {});
  static LiftedScorer polymorphic(ScoreFunction f);

  bool is_polymorphic() const;
  double fine(const std::vector<Value>& args) const;
  double at_level(const std::vector<Value>& args, int level, const CoarseningScheme& scheme) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

LiftedPrimitive lift_primitive(Primitive f, MarginalizerOptions options = {});
LiftedScorer lift_scorer(ScoreFunction f, MarginalizerOptions options = {});

/// The view a coarse-to-fine model has of one level pass. Lifted constructs
/// read the current level from the store and key their records by address
/// relative to the pass's base.
class LevelContext {
 public:
  LevelContext(RuntimeHandle& h, const CoarseningScheme& scheme, int num_levels);

  int level() const { return handle_.store().level; }
  int num_levels() const { return num_levels_; }
  RuntimeHandle& handle() { return handle_; }
  Store& store() { return handle_.store(); }
  const CoarseningScheme& scheme() const { return scheme_; }

  /// Lifted constant: cv^level(c).
  Value constant(const Value& c) const;
  /// Lifted ERP draw.
  Value sample(Site site, const LiftedErp& erp);
  /// Lifted (heuristic) factor: emits s minus the next-coarser score stored at
  /// this address, then records s.
  void factor(Site site, double score);
  Value apply(Site site, const LiftedPrimitive& f, const std::vector<Value>& args);
  double score(const LiftedScorer& f, const std::vector<Value>& args);

  /// Unlifted constructs: allowed only at level 0.
  Value sample_unlifted(Site site, const Distribution& d);
  void factor_unlifted(Site site, double score);
  Value apply_unlifted(const Primitive& f, const std::vector<Value>& args);

  template <class F>
  decltype(auto) call(Site site, F&& body) {
    return handle_.call(site, std::forward<F>(body));
  }

  /// Address of an effect at `site`, relative to the current pass base.
  Address relative(Site site) const;

 private:
  void require_fine(const char* what) const;

  RuntimeHandle& handle_;
  const CoarseningScheme& scheme_;
  int num_levels_;
};

using LiftableModel = std::function<Value(LevelContext&)>;

/// Runs `model` once per level N, N-1, ..., 0 against one shared store and
/// returns the level-0 value. The marginal over that value equals the
/// marginal of the level-0 model.
ModelProgram coarse_to_fine_model(LiftableModel model, int num_levels, std::shared_ptr<const CoarseningScheme> scheme);

/// The original program: the lifted model dispatched at level 0 only.
ModelProgram flat_model(LiftableModel model, std::shared_ptr<const CoarseningScheme> scheme = nullptr);

}  // namespace ctf
