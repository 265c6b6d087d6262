#include "ctf/transform/lifting.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <unordered_map>

#include "ctf/inference/engine.hpp"

namespace ctf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Rng seeded_from(std::size_t h, int level) { return make_rng(h, static_cast<std::uint64_t>(level), 0x5eed); }

struct ArgsKey {
  std::vector<Value> args;
  int level;
  const void* scheme;
  bool operator==(const ArgsKey&) const = default;
};

struct ArgsKeyHash {
  std::size_t operator()(const ArgsKey& k) const {
    std::size_t h = hash_combine(static_cast<std::size_t>(k.level), reinterpret_cast<std::uintptr_t>(k.scheme));
    for (const auto& a : k.args) h = hash_combine(h, a.hash());
    return h;
  }
};

template <class Result>
class MarginalCache {
 public:
  explicit MarginalCache(std::size_t capacity) : capacity_(capacity) {}

  template <class Compute>
  Result get(const ArgsKey& key, Compute&& compute) {
    {
      std::lock_guard lock(mu_);
      if (auto it = map_.find(key); it != map_.end()) return it->second;
    }
    Result r = compute();
    std::lock_guard lock(mu_);
    if (capacity_ && map_.size() >= capacity_) map_.clear();
    map_.emplace(key, r);
    return r;
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::unordered_map<ArgsKey, Result, ArgsKeyHash> map_;
};

Value draw_refinement(const CoarseningScheme& scheme, Value v, int level, Rng& rng) {
  for (int i = 0; i < level; ++i) {
    auto r = scheme.refine(v);
    if (r.empty()) throw Error(ErrorCode::EmptyRefinement, "no refinements of " + v.to_string());
    std::uniform_int_distribution<std::size_t> pick(0, r.size() - 1);
    v = std::move(r[pick(rng)]);
  }
  return v;
}

/// Calls visit(fine_args, probability) over the joint refinement distribution
/// of `args`, exactly when the product space fits `options.exact_bound` and by
/// deterministic sampling otherwise.
template <class Visit>
void for_each_refined(const std::vector<Value>& args, int level, const CoarseningScheme& scheme,
                      const MarginalizerOptions& options, Visit&& visit) {
  std::vector<std::vector<std::pair<Value, double>>> leaves;
  bool exact = true;
  std::size_t product = 1;
  try {
    for (const auto& a : args) {
      leaves.push_back(uniform_refinements(scheme, a, level, options.exact_bound));
      product *= leaves.back().size();
      if (product > options.exact_bound) {
        exact = false;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RefinementExplosion) throw;
    exact = false;
  }

  std::vector<Value> fine(args.size());
  if (exact) {
    if (product == 0) throw Error(ErrorCode::EmptyRefinement, "an argument has no refinements");
    std::vector<std::size_t> idx(args.size(), 0);
    for (;;) {
      double p = 1.0;
      for (std::size_t i = 0; i < args.size(); ++i) {
        fine[i] = leaves[i][idx[i]].first;
        p *= leaves[i][idx[i]].second;
      }
      visit(fine, p);
      std::size_t k = 0;
      while (k < args.size() && ++idx[k] == leaves[k].size()) idx[k++] = 0;
      if (k == args.size()) break;
    }
    return;
  }
  std::size_t h = static_cast<std::size_t>(level);
  for (const auto& a : args) h = hash_combine(h, a.hash());
  Rng rng = seeded_from(h, level);
  const double p = 1.0 / options.samples;
  for (int s = 0; s < options.samples; ++s) {
    for (std::size_t i = 0; i < args.size(); ++i) fine[i] = draw_refinement(scheme, args[i], level, rng);
    visit(fine, p);
  }
}

/// cv^level pushforward of a base distribution. Sampling is literal (draw a
/// base value and coarsen); the table is built only if support/log_mass is
/// asked for.
class PushforwardDistribution final : public DistributionImpl {
 public:
  PushforwardDistribution(Distribution base, std::shared_ptr<const CoarseningScheme> scheme, int level)
      : base_(std::move(base)), scheme_(std::move(scheme)), level_(level) {}

  std::vector<Value> support() const override {
    const auto& t = table();
    if (!t.enumerable) throw Error(ErrorCode::NotEnumerable, "base support is not enumerable");
    return t.values;
  }

  double log_mass(const Value& v) const override {
    const auto& t = table();
    if (!t.enumerable) return get_erp_score(base_, v, level_, *scheme_);
    auto it = t.index.find(v);
    return it == t.index.end() ? kNegInf : t.log_probs[it->second];
  }

  Value sample(Rng& rng) const override {
    return coarsen_times(*scheme_, base_.sample(rng), level_);
  }

 private:
  struct Table {
    bool enumerable = false;
    std::vector<Value> values;
    std::vector<double> log_probs;
    std::unordered_map<Value, std::size_t, ValueHash> index;
  };

  const Table& table() const {
    std::call_once(once_, [&] {
      std::vector<Value> base_support;
      try {
        base_support = base_.support();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotEnumerable) throw;
        return;
      }
      std::map<Value, std::vector<double>> grouped;
      for (const auto& x : base_support) {
        const double lp = base_.log_mass(x);
        if (lp == kNegInf) continue;
        grouped[coarsen_times(*scheme_, x, level_)].push_back(lp);
      }
      for (auto& [v, lps] : grouped) {
        table_.index.emplace(v, table_.values.size());
        table_.values.push_back(v);
        table_.log_probs.push_back(log_sum_exp(lps));
      }
      table_.enumerable = true;
    });
    return table_;
  }

  Distribution base_;
  std::shared_ptr<const CoarseningScheme> scheme_;
  int level_;
  mutable std::once_flag once_;
  mutable Table table_;
};

}  // namespace

double get_erp_score(const Distribution& e0, const Value& coarse, int level, const CoarseningScheme& scheme) {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  if (level == 0) return e0.log_mass(coarse);
  switch (scheme.scorer) {
    case ScorerMode::User:
      if (!scheme.exact_mass) throw Error(ErrorCode::InvalidArgument, "user scorer mode without exact_mass");
      return scheme.exact_mass(e0, coarse, level);
    case ScorerMode::Sampled: {
      const int k = scheme.scorer_samples;
      if (k < 1) throw Error(ErrorCode::InvalidArgument, "sampled scorer needs k >= 1");
      Rng rng = seeded_from(coarse.hash(), level);
      int hits = 0;
      for (int i = 0; i < k; ++i) {
        if (coarsen_times(scheme, e0.sample(rng), level) == coarse) ++hits;
      }
      const auto refinements = static_cast<double>(scheme.refine(coarse).size());
      const double eps = 1.0 / (k * std::max(1.0, refinements));
      return std::log(static_cast<double>(hits) / k + eps);
    }
    case ScorerMode::Exact:
      break;
  }
  std::vector<Value> frontier{coarse};
  for (int i = 0; i < level; ++i) {
    std::vector<Value> next;
    for (const auto& v : frontier) {
      auto r = scheme.refine(v);
      for (auto& w : r) next.push_back(std::move(w));
    }
    frontier = std::move(next);
  }
  std::vector<double> lps;
  lps.reserve(frontier.size());
  for (const auto& x : frontier) lps.push_back(e0.log_mass(x));
  return log_sum_exp(lps);
}

std::vector<std::pair<Value, double>> uniform_refinements(const CoarseningScheme& scheme, const Value& coarse,
                                                          int level, std::size_t bound) {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  std::vector<std::pair<Value, double>> frontier{{coarse, 1.0}};
  for (int i = 0; i < level; ++i) {
    std::vector<std::pair<Value, double>> next;
    for (const auto& [v, p] : frontier) {
      auto r = scheme.refine(v);
      if (r.empty()) throw Error(ErrorCode::EmptyRefinement, "no refinements of " + v.to_string());
      const double q = p / static_cast<double>(r.size());
      for (auto& w : r) next.emplace_back(std::move(w), q);
      if (next.size() > bound) {
        throw Error(ErrorCode::RefinementExplosion, "more than " + std::to_string(bound) + " refinements");
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

// ---------------------------------------------------------------------------

struct LiftedErp::State {
  Distribution base;
  std::shared_ptr<const CoarseningScheme> scheme;
  std::mutex mu;
  std::unordered_map<int, Distribution> unconditional;
  std::unordered_map<Value, std::unordered_map<int, double>, ValueHash> scores;
};

LiftedErp::LiftedErp(Distribution base, std::shared_ptr<const CoarseningScheme> scheme)
    : state_(std::make_shared<State>()) {
  state_->base = std::move(base);
  state_->scheme = std::move(scheme);
}

const Distribution& LiftedErp::base() const { return state_->base; }
const CoarseningScheme& LiftedErp::scheme() const { return *state_->scheme; }

Distribution LiftedErp::unconditional(int level) const {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  if (level == 0) return state_->base;
  std::lock_guard lock(state_->mu);
  auto it = state_->unconditional.find(level);
  if (it == state_->unconditional.end()) {
    it = state_->unconditional
             .emplace(level, Distribution(std::make_shared<PushforwardDistribution>(state_->base, state_->scheme, level)))
             .first;
  }
  return it->second;
}

Distribution LiftedErp::conditional(int level, const Value& coarser) const {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  LiftedErp self = *this;
  return lazy([self, level, coarser] {
    auto candidates = self.scheme().refine(coarser);
    if (candidates.empty()) throw Error(ErrorCode::EmptyRefinement, "no refinements of " + coarser.to_string());
    std::vector<double> lw;
    lw.reserve(candidates.size());
    for (const auto& c : candidates) lw.push_back(self.score(c, level));
    try {
      return make_discrete_log(std::move(candidates), std::move(lw), false);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AllZeroWeights) {
        throw Error(ErrorCode::AllZeroScores, "every refinement of " + coarser.to_string() + " has zero mass");
      }
      throw;
    }
  });
}

double LiftedErp::score(const Value& coarse, int level) const {
  const auto& scheme = *state_->scheme;
  if (level == 0 || scheme.scorer == ScorerMode::User) return get_erp_score(state_->base, coarse, level, scheme);
  {
    std::lock_guard lock(state_->mu);
    if (auto it = state_->scores.find(coarse); it != state_->scores.end()) {
      if (auto jt = it->second.find(level); jt != it->second.end()) return jt->second;
    }
  }
  const double s = get_erp_score(state_->base, coarse, level, scheme);
  std::lock_guard lock(state_->mu);
  state_->scores[coarse][level] = s;
  return s;
}

// ---------------------------------------------------------------------------

struct LiftedPrimitive::State {
  Primitive f;
  MarginalizerOptions options;
  bool polymorphic = false;
  MarginalCache<Distribution> cache{0};

  State(Primitive fn, MarginalizerOptions opts, bool poly)
      : f(std::move(fn)), options(opts), polymorphic(poly), cache(opts.cache_capacity) {}
};

LiftedPrimitive::LiftedPrimitive(Primitive f, MarginalizerOptions options)
    : state_(std::make_shared<State>(std::move(f), options, false)) {}

LiftedPrimitive LiftedPrimitive::polymorphic(Primitive f) {
  LiftedPrimitive p(std::move(f));
  p.state_->polymorphic = true;
  return p;
}

bool LiftedPrimitive::is_polymorphic() const { return state_->polymorphic; }
Value LiftedPrimitive::fine(const std::vector<Value>& args) const { return state_->f(args); }

Distribution LiftedPrimitive::at_level(const std::vector<Value>& args, int level,
                                       const CoarseningScheme& scheme) const {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  auto& st = *state_;
  return st.cache.get(ArgsKey{args, level, &scheme}, [&] {
    std::map<Value, double> mass;
    for_each_refined(args, level, scheme, st.options, [&](const std::vector<Value>& fine_args, double p) {
      mass[coarsen_times(scheme, st.f(fine_args), level)] += p;
    });
    std::vector<Value> values;
    std::vector<double> weights;
    for (auto& [v, p] : mass) {
      values.push_back(v);
      weights.push_back(p);
    }
    return make_discrete(std::move(values), weights);
  });
}

struct LiftedScorer::State {
  ScoreFunction f;
  MarginalizerOptions options;
  bool polymorphic = false;
  MarginalCache<double> cache{0};

  State(ScoreFunction fn, MarginalizerOptions opts, bool poly)
      : f(std::move(fn)), options(opts), polymorphic(poly), cache(opts.cache_capacity) {}
};

LiftedScorer::LiftedScorer(ScoreFunction f, MarginalizerOptions options)
    : state_(std::make_shared<State>(std::move(f), options, false)) {}

LiftedScorer LiftedScorer::polymorphic(ScoreFunction f) {
  LiftedScorer s(std::move(f));
  s.state_->polymorphic = true;
  return s;
}

bool LiftedScorer::is_polymorphic() const { return state_->polymorphic; }
double LiftedScorer::fine(const std::vector<Value>& args) const { return state_->f(args); }

double LiftedScorer::at_level(const std::vector<Value>& args, int level, const CoarseningScheme& scheme) const {
  if (level < 0) throw Error(ErrorCode::NegativeLevel, "level " + std::to_string(level));
  auto& st = *state_;
  return st.cache.get(ArgsKey{args, level, &scheme}, [&] {
    double e = 0.0;
    for_each_refined(args, level, scheme, st.options,
                     [&](const std::vector<Value>& fine_args, double p) { e += p * st.f(fine_args); });
    return e;
  });
}

LiftedPrimitive lift_primitive(Primitive f, MarginalizerOptions options) {
  return LiftedPrimitive(std::move(f), options);
}

LiftedScorer lift_scorer(ScoreFunction f, MarginalizerOptions options) { return LiftedScorer(std::move(f), options); }

// ---------------------------------------------------------------------------

LevelContext::LevelContext(RuntimeHandle& h, const CoarseningScheme& scheme, int num_levels)
    : handle_(h), scheme_(scheme), num_levels_(num_levels) {}

Value LevelContext::constant(const Value& c) const {
  try {
    return coarsen_times(scheme_, c, level());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CoarsenFailure) throw;
    throw Error(ErrorCode::CoarsenFailure, e.what());
  }
}

Address LevelContext::relative(Site site) const {
  Address rel = address_relative(handle_.current_address(), handle_.store().base);
  rel.path.push_back(site);
  return rel;
}

Value LevelContext::sample(Site site, const LiftedErp& erp) {
  const int lvl = level();
  Address rel = relative(site);
  const Value* coarser = store().find_value(rel, lvl + 1);
  Distribution d = coarser ? erp.conditional(lvl, *coarser) : erp.unconditional(lvl);
  Value v = handle_.sample(site, d);
  store().put_value(rel, lvl, v);
  return v;
}

void LevelContext::factor(Site site, double score) {
  const int lvl = level();
  Address rel = relative(site);
  const double coarser = store().find_score(rel, lvl + 1).value_or(0.0);
  double emitted = score - coarser;
  if (coarser == kNegInf) {
    if (score != kNegInf) {
      throw Error(ErrorCode::InvalidArgument, "coarse factor at " + rel.to_string() + " was -inf but finer is finite");
    }
    emitted = kNegInf;
  }
  handle_.factor(site, emitted);
  store().put_score(rel, lvl, score);
}

Value LevelContext::apply(Site site, const LiftedPrimitive& f, const std::vector<Value>& args) {
  const int lvl = level();
  if (lvl == 0 || f.is_polymorphic()) return f.fine(args);
  return handle_.sample(site, f.at_level(args, lvl, scheme_));
}

double LevelContext::score(const LiftedScorer& f, const std::vector<Value>& args) {
  const int lvl = level();
  if (lvl == 0 || f.is_polymorphic()) return f.fine(args);
  return f.at_level(args, lvl, scheme_);
}

void LevelContext::require_fine(const char* what) const {
  if (level() > 0) {
    throw Error(ErrorCode::UnregisteredConstruct,
                std::string(what) + " reached at level " + std::to_string(level()) + " without a lifted version");
  }
}

Value LevelContext::sample_unlifted(Site site, const Distribution& d) {
  require_fine("sample");
  return handle_.sample(site, d);
}

void LevelContext::factor_unlifted(Site site, double score) {
  require_fine("factor");
  handle_.factor(site, score);
}

Value LevelContext::apply_unlifted(const Primitive& f, const std::vector<Value>& args) {
  require_fine("primitive");
  return f(args);
}

ModelProgram coarse_to_fine_model(LiftableModel model, int num_levels, std::shared_ptr<const CoarseningScheme> scheme) {
  if (num_levels < 0) throw Error(ErrorCode::NegativeLevel, "negative level count");
  if (!scheme) scheme = std::make_shared<const CoarseningScheme>(identity_scheme());
  return [model = std::move(model), num_levels, scheme](RuntimeHandle& h) {
    Value out;
    for (int level = num_levels; level >= 0; --level) {
      h.store().level = level;
      out = h.call(Site("level", level), [&] {
        h.store().base = h.current_address();
        LevelContext ctx(h, *scheme, num_levels);
        return model(ctx);
      });
    }
    return out;
  };
}

ModelProgram flat_model(LiftableModel model, std::shared_ptr<const CoarseningScheme> scheme) {
  return coarse_to_fine_model(std::move(model), 0, std::move(scheme));
}

}  // namespace ctf
