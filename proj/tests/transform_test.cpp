#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "ctf/inference/engine.hpp"
#include "ctf/models/observe_seven.hpp"
#include "ctf/transform/lifting.hpp"

using namespace ctf;

namespace {

Value iv(std::int64_t lo, std::int64_t hi) { return Value(IntInterval{lo, hi}); }

std::shared_ptr<const CoarseningScheme> intervals() { return std::make_shared<CoarseningScheme>(interval_scheme()); }

// Plain program written directly against the runtime, used as the oracle.
ModelProgram observe_seven_plain() {
  return [](RuntimeHandle& h) {
    auto u = uniform_int(1, 8);
    Value x = h.sample("x", u);
    Value y = h.sample("y", u);
    Value pick = h.sample("coin", bernoulli(0.5)).boolean() ? x : y;
    h.factor("near", -3.0 * std::abs(pick.number() - 7.0));
    return Value(Tuple{{x, y}});
  };
}

// Brute-force pushforward of uniform{1..8} through `level` interval steps.
std::map<Value, double> pushforward_uniform8(int level) {
  auto s = interval_scheme();
  std::map<Value, double> out;
  for (int v = 1; v <= 8; ++v) out[coarsen_times(s, Value(v), level)] += 1.0 / 8.0;
  return out;
}

// Lists of four values; coarsening averages adjacent pairs, halving the length.
CoarseningScheme pair_mean_scheme() {
  CoarseningScheme s;
  s.coarsen = [](const Value& v) -> Value {
    const auto& xs = v.items();
    if (xs.size() < 2) throw Error(ErrorCode::FullyCoarsened, "single-element list");
    std::vector<Value> out;
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) out.emplace_back((xs[i].number() + xs[i + 1].number()) / 2.0);
    return Value(Tuple{out});
  };
  s.refine = [](const Value& v) -> std::vector<Value> {
    const auto& xs = v.items();
    // Element grid at the refined level: multiples of 1/2^(levels above fine).
    const double step = xs.size() == 2 ? 1.0 : 0.5;
    std::vector<std::vector<std::pair<double, double>>> options;
    for (const auto& m : xs) {
      std::vector<std::pair<double, double>> pairs;
      for (double a = 0.0; a <= 2.0; a += step) {
        const double b = 2.0 * m.number() - a;
        if (b < 0.0 || b > 2.0 || std::fmod(b, step) != 0.0) continue;
        pairs.emplace_back(a, b);
      }
      options.push_back(pairs);
    }
    std::vector<Value> out;
    std::vector<Value> cur;
    auto rec = [&](auto&& self, std::size_t i) -> void {
      if (i == options.size()) {
        out.emplace_back(Tuple{cur});
        return;
      }
      for (auto [a, b] : options[i]) {
        cur.emplace_back(a);
        cur.emplace_back(b);
        self(self, i + 1);
        cur.pop_back();
        cur.pop_back();
      }
    };
    rec(rec, 0);
    return out;
  };
  return s;
}

Distribution uniform_lists() {
  std::vector<Value> lists;
  for (int i = 0; i < 81; ++i) {
    lists.emplace_back(Tuple{{Value(i % 3), Value(i / 3 % 3), Value(i / 9 % 3), Value(i / 27)}});
  }
  return uniform(lists);
}

double list_mean(const Value& v) {
  double s = 0.0;
  for (const auto& x : v.items()) s += x.number();
  return s / static_cast<double>(v.items().size());
}

}  // namespace

TEST_CASE("lifted constants") {
  auto s = intervals();
  ModelProgram probe = [s](RuntimeHandle& h) {
    LevelContext ctx(h, *s, 2);
    h.store().level = 2;
    Value at2 = ctx.constant(Value(7));
    h.store().level = 0;
    Value at0 = ctx.constant(Value(7));
    return Value(Tuple{{at2, at0}});
  };
  Rng rng = make_rng(1);
  auto rec = record_execution(probe, rng);
  CHECK(rec.result.items()[0] == iv(5, 8));
  CHECK(rec.result.items()[1] == Value(7));
}

TEST_CASE("interval coarsening") {
  auto s = interval_scheme();
  CHECK(s.coarsen(Value(5)) == iv(5, 6));
  CHECK(coarsen_times(s, Value(5), 2) == iv(5, 8));
  CHECK(coarsen_times(s, Value(Tuple{{Value(5), Value(11), Value(56)}}), 1) ==
        Value(Tuple{{iv(5, 6), iv(11, 12), iv(55, 56)}}));
  // Aligned dyadic blocks: 11 and 56 land in [9,12] and [53,56] at width 4.
  CHECK(coarsen_times(s, Value(Tuple{{Value(5), Value(11), Value(56)}}), 2) ==
        Value(Tuple{{iv(5, 8), iv(9, 12), iv(53, 56)}}));
  CHECK(s.refine(iv(5, 6)) == std::vector<Value>{Value(5), Value(6)});
  CHECK(s.refine(iv(5, 8)) == std::vector<Value>{iv(5, 6), iv(7, 8)});
  CHECK(s.coarsen(Value(true)) == Value(true));
}

TEST_CASE("lifted ERP: coarsest draw is the pushforward") {
  LiftedErp erp(uniform_int(1, 8), intervals());
  auto top = erp.unconditional(2);
  CHECK(top.support().size() == 2);
  for (const auto& [v, p] : pushforward_uniform8(2)) CHECK(std::exp(top.log_mass(v)) == doctest::Approx(p));
  CHECK(std::exp(top.log_mass(iv(1, 4))) == doctest::Approx(0.5));
  auto refine = erp.conditional(0, iv(5, 6));
  CHECK(std::exp(refine.log_mass(Value(5))) == doctest::Approx(0.5));
  CHECK(std::exp(refine.log_mass(Value(6))) == doctest::Approx(0.5));
  CHECK(refine.log_mass(Value(7)) == -INFINITY);
  auto fine = erp.unconditional(0);
  for (int v = 1; v <= 8; ++v) CHECK(fine.log_mass(Value(v)) == doctest::Approx(std::log(1.0 / 8.0)));
}

TEST_CASE("lifted ERP: conditionals weight refinements by class mass") {
  std::vector<Value> vals;
  std::vector<double> w;
  for (int v = 1; v <= 4; ++v) {
    vals.emplace_back(v);
    w.push_back(v);
  }
  LiftedErp erp(make_discrete(vals, w), intervals());
  auto d = erp.conditional(1, iv(1, 4));
  // Class masses: [1,2] -> 3/10, [3,4] -> 7/10.
  CHECK(std::exp(d.log_mass(iv(1, 2))) == doctest::Approx(0.3));
  CHECK(std::exp(d.log_mass(iv(3, 4))) == doctest::Approx(0.7));
}

TEST_CASE("get_erp_score") {
  auto s = interval_scheme();
  auto base = uniform_int(1, 8);
  CHECK(get_erp_score(base, iv(5, 8), 2, s) == doctest::Approx(std::log(0.5)));
  CHECK(get_erp_score(base, Value(3), 0, s) == doctest::Approx(std::log(1.0 / 8.0)));
  CHECK_THROWS_AS(get_erp_score(base, Value(3), -1, s), Error);
  auto sampled = s;
  sampled.scorer = ScorerMode::Sampled;
  sampled.scorer_samples = 100000;
  CHECK(std::exp(get_erp_score(base, iv(5, 8), 2, sampled)) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("lifted factors telescope across levels") {
  const std::map<int, double> per_level{{2, -2.0}, {1, -3.0}, {0, -4.5}};
  LiftableModel m = [&](LevelContext& ctx) {
    ctx.factor("f", per_level.at(ctx.level()));
    return Value(0);
  };
  auto prog = coarse_to_fine_model(m, 2, intervals());
  Rng rng = make_rng(3);
  auto rec = record_execution(prog, rng);
  REQUIRE(rec.factor_scores.size() == 3);
  CHECK(rec.factor_scores[0] == doctest::Approx(-2.0));
  CHECK(rec.factor_scores[1] == doctest::Approx(-1.0));
  CHECK(rec.factor_scores[2] == doctest::Approx(-1.5));
  double total = 0.0;
  for (double x : rec.factor_scores) total += x;
  CHECK(total == doctest::Approx(-4.5));
}

TEST_CASE("lifted primitives") {
  auto s = interval_scheme();
  auto plus = lift_primitive([](const std::vector<Value>& a) { return Value(a[0].number() + a[1].number()); });
  auto at0 = plus.at_level({Value(2), Value(3)}, 0, s);
  CHECK(at0.support() == std::vector<Value>{Value(5)});

  auto ident = identity_scheme();
  auto either = lift_primitive([](const std::vector<Value>& a) { return Value(a[0].boolean() || a[1].boolean()); });
  auto d = either.at_level({Value(true), Value(false)}, 3, ident);
  CHECK(std::exp(d.log_mass(Value(true))) == doctest::Approx(1.0));

  // Wrapped spins coarsen to an empty tuple; bare numbers stay fine.
  CoarseningScheme spins;
  spins.coarsen = [](const Value& v) -> Value {
    if (v.is<Tuple>()) return Value(Tuple{});
    return v;
  };
  spins.refine = [](const Value& v) -> std::vector<Value> {
    if (v.is<Tuple>() && v.items().empty()) return {Value(Tuple{{Value(-1)}}), Value(Tuple{{Value(1)}})};
    return {v};
  };
  auto product = lift_primitive(
      [](const std::vector<Value>& a) { return Value(a[0].items()[0].number() * a[1].items()[0].number()); });
  auto pd = product.at_level({Value(Tuple{}), Value(Tuple{})}, 1, spins);
  CHECK(std::exp(pd.log_mass(Value(1))) == doctest::Approx(0.5));
  CHECK(std::exp(pd.log_mass(Value(-1))) == doctest::Approx(0.5));
}

TEST_CASE("lifted scorers take the expectation over refinements") {
  auto s = interval_scheme();
  auto dist7 = lift_scorer([](const std::vector<Value>& a) { return std::abs(a[0].number() - 7.0); });
  CHECK(dist7.at_level({iv(5, 6)}, 1, s) == doctest::Approx(1.5));
  CHECK(dist7.at_level({Value(4)}, 0, s) == doctest::Approx(3.0));
  auto flat = lift_scorer([](const std::vector<Value>&) { return -2.0; });
  CHECK(flat.at_level({iv(1, 8)}, 3, s) == doctest::Approx(-2.0));

  MarginalizerOptions tiny;
  tiny.exact_bound = 4;
  tiny.samples = 20000;
  auto sampled = lift_scorer([](const std::vector<Value>& a) { return a[0].number(); }, tiny);
  CHECK(sampled.at_level({iv(1, 8)}, 3, s) == doctest::Approx(4.5).epsilon(0.02));
}

TEST_CASE("coarse-to-fine preserves the observe-seven marginal") {
  auto s = intervals();
  auto lifted = models::observe_seven_model(s);
  auto oracle = enumerate(observe_seven_plain());
  auto flat = enumerate(flat_model(lifted, s));
  CHECK(total_variation(oracle, flat) < 1e-12);
  CHECK(flat.log_z == doctest::Approx(oracle.log_z));
  for (int n : {1, 2, 3}) {
    auto ctf = enumerate(coarse_to_fine_model(lifted, n, s));
    CAPTURE(n);
    CHECK(total_variation(oracle, ctf) < 1e-9);
    CHECK(ctf.log_z == doctest::Approx(oracle.log_z).epsilon(1e-9));
  }
}

TEST_CASE("coarse-to-fine with zero levels is the original model") {
  auto s = intervals();
  auto lifted = models::observe_seven_model(s);
  auto zero = enumerate(coarse_to_fine_model(lifted, 0, s));
  auto flat = enumerate(flat_model(lifted, s));
  CHECK(total_variation(zero, flat) == 0.0);
}

TEST_CASE("a lone lifted ERP keeps its base marginal") {
  auto s = intervals();
  LiftedErp erp(uniform_int(1, 8), s);
  LiftableModel m = [erp](LevelContext& ctx) { return ctx.sample("x", erp); };
  for (int n : {1, 2, 3}) {
    auto e = enumerate(coarse_to_fine_model(m, n, s));
    for (int v = 1; v <= 8; ++v) CHECK(std::abs(e.probability(Value(v)) - 0.125) < 1e-12);
  }
}

TEST_CASE("unlifted constructs are rejected above level 0") {
  auto s = intervals();
  LiftableModel m = [](LevelContext& ctx) { return ctx.sample_unlifted("x", uniform_int(1, 4)); };
  CHECK_NOTHROW(enumerate(flat_model(m, s)));
  try {
    enumerate(coarse_to_fine_model(m, 1, s));
    FAIL("expected UnregisteredConstruct");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnregisteredConstruct);
  }
}

TEST_CASE("inverse law: interval scheme over [1, 256] at every level") {
  auto s = interval_scheme();
  std::vector<Value> domain;
  for (int v = 1; v <= 256; ++v) domain.emplace_back(v);
  for (int level = 0; level < 8; ++level) {
    auto report = check_inverse_law(s, domain);
    CAPTURE(level);
    CHECK(report.ok());
    CHECK(report.values_checked == domain.size());
    std::vector<Value> next;
    for (const auto& v : domain) {
      Value c = s.coarsen(v);
      if (next.empty() || next.back() != c) next.push_back(c);
    }
    domain = next;
  }
  CHECK(domain.size() == 1);
  CHECK(domain[0] == iv(1, 256));
}

TEST_CASE("inverse law: a broken refinement is reported once") {
  auto s = interval_scheme();
  auto broken = s;
  broken.refine = [s](const Value& v) {
    if (v == iv(7, 8)) return std::vector<Value>{Value(7)};
    return s.refine(v);
  };
  std::vector<Value> domain;
  for (int v = 1; v <= 8; ++v) domain.emplace_back(v);
  auto report = check_inverse_law(broken, domain);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].value == Value(8));
}

TEST_CASE("polymorphic scorer on pair-mean coarsened lists") {
  auto s = std::make_shared<CoarseningScheme>(pair_mean_scheme());
  std::vector<Value> domain = uniform_lists().support();
  CHECK(check_inverse_law(*s, domain).ok());

  LiftedErp lists(uniform_lists(), s);
  auto mean_score = LiftedScorer::polymorphic(
      [](const std::vector<Value>& a) { return -std::pow(list_mean(a[0]) - 1.5, 2.0); });
  LiftableModel m = [=](LevelContext& ctx) {
    Value v = ctx.sample("xs", lists);
    ctx.factor("mean", ctx.score(mean_score, {v}));
    return v;
  };
  ModelProgram oracle = [](RuntimeHandle& h) {
    Value v = h.sample("xs", uniform_lists());
    h.factor("mean", -std::pow(list_mean(v) - 1.5, 2.0));
    return v;
  };
  auto truth = enumerate(oracle);
  for (int n : {1, 2}) {
    auto e = enumerate(coarse_to_fine_model(m, n, s));
    CAPTURE(n);
    CHECK(total_variation(truth, e) < 1e-9);
  }
}
