#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ctf/inference/engine.hpp"
#include "ctf/models/fhmm.hpp"
#include "ctf/models/ising.hpp"
#include "ctf/models/matrix_io.hpp"
#include "ctf/models/stereo.hpp"

using namespace ctf;

namespace {

IntMatrix filled(int n, int v) { return IntMatrix(n, n, v); }

IntMatrix checkerboard(int n) {
  IntMatrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m.at(r, c) = (r + c) % 2 == 0 ? 1 : -1;
  }
  return m;
}

// Boltzmann weights over all 3x3 lattices, computed without the model code.
std::map<Value, double> boltzmann3(double coupling) {
  std::map<Value, double> out;
  double z = 0.0;
  for (int mask = 0; mask < 512; ++mask) {
    IntMatrix m(3, 3);
    for (int i = 0; i < 9; ++i) m.data[i] = (mask >> i) & 1 ? 1 : -1;
    int sum = 0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (c < 2) sum += m.at(r, c) * m.at(r, c + 1);
        if (r < 2) sum += m.at(r, c) * m.at(r + 1, c);
      }
    }
    const double w = std::exp(coupling * sum);
    out[Value(m)] = w;
    z += w;
  }
  for (auto& [v, w] : out) w /= z;
  return out;
}

double tv_to(const ExactMarginal& m, const std::map<Value, double>& ref) {
  double tv = 0.0;
  for (const auto& [v, p] : ref) tv += std::abs(m.probability(v) - p);
  for (const auto& [v, p] : m.probs) {
    if (!ref.count(v)) tv += p;
  }
  return tv / 2.0;
}

std::shared_ptr<const CoarseningScheme> share(CoarseningScheme s) {
  return std::make_shared<const CoarseningScheme>(std::move(s));
}

}  // namespace

TEST_CASE("ising energy") {
  CHECK(ising::energy(Value(filled(3, 1)), 1.0) == 12.0);
  CHECK(ising::energy(Value(checkerboard(3)), 1.0) == -12.0);
  auto coarse = ising::majority_coarsen_step(ising::to_partial(filled(3, 1)));
  CHECK(ising::energy(Value(coarse), 1.0) == 0.0);
  CHECK(ising::energy(Value(filled(3, -1)), 0.5) == 6.0);
}

TEST_CASE("ising energy is flip invariant and agrees on fully fine partial lattices") {
  Rng rng = make_rng(11);
  auto d = ising::uniform_spins(9);
  for (int i = 0; i < 50; ++i) {
    IntMatrix m = d.sample(rng).as<IntMatrix>();
    IntMatrix flipped = m;
    for (int& s : flipped.data) s = -s;
    CHECK(ising::energy(Value(m), 0.7) == ising::energy(Value(flipped), 0.7));
    CHECK(ising::energy(Value(ising::to_partial(m)), 0.7) == ising::energy(Value(m), 0.7));
  }
}

TEST_CASE("mixed-level ising adjacency") {
  // 9x9, one block at the top-left coarsened to +1, the rest +1 fine.
  auto l = ising::majority_coarsen_step(ising::to_partial(filled(9, 1)));
  // Fine pairs: 144 total minus 12 inside the block minus 6 crossing its boundary.
  // Coarse cell pairs once with each of the 6 fine cells across its boundary.
  CHECK(ising::energy(Value(l), 1.0) == 144 - 12 - 6 + 6);
  // Fully coarse 9x9: a single n/9 cell with no neighbours.
  auto p = ising::to_partial(filled(9, 1));
  for (int i = 0; i < ising::max_coarsening_steps(9); ++i) p = ising::majority_coarsen_step(p);
  CHECK(ising::energy(Value(p), 1.0) == 0.0);
  CHECK_THROWS_AS(ising::majority_coarsen_step(p), Error);
}

TEST_CASE("majority coarsening") {
  CHECK(ising::majority_refine(1).size() == 256);
  CHECK(ising::majority_refine(-1).size() == 256);
  CHECK(ising::max_coarsening_steps(27) == 90);
  CHECK(ising::max_coarsening_steps(9) == 10);
  CHECK(ising::max_coarsening_steps(3) == 1);
  CHECK_THROWS_AS(ising::max_coarsening_steps(4), Error);
  CHECK(ising::block_mode(std::vector<int>(9, 1)) == 1);
  const auto& plus = ising::majority_refine(1);
  CHECK(std::find(plus.begin(), plus.end(), std::vector<int>(9, 1)) != plus.end());
}

TEST_CASE("majority scheme inverse law over every 3x3 block") {
  auto s = ising::majority_scheme();
  auto report = check_inverse_law(s, ising::uniform_spins(3).support());
  CHECK(report.ok());
  CHECK(report.values_checked == 512);
  CHECK(report.refinements_checked == 512);
}

TEST_CASE("majority scheme inverse law on a 9x9 partial lattice chain") {
  auto s = ising::majority_scheme();
  Rng rng = make_rng(5);
  Value v = ising::uniform_spins(9).sample(rng);
  for (int step = 0; step < ising::max_coarsening_steps(9); ++step) {
    Value c = s.coarsen(v);
    auto refs = s.refine(c);
    CHECK(refs.size() == 256);
    CHECK(std::find(refs.begin(), refs.end(), v) != refs.end());
    for (const auto& w : refs) CHECK(s.coarsen(w) == c);
    v = c;
  }
}

TEST_CASE("majority class score matches a brute-force count") {
  auto s = ising::majority_scheme();
  auto base = ising::uniform_spins(3);
  Value coarse = s.coarsen(Value(filled(3, 1)));
  CHECK(std::exp(get_erp_score(base, coarse, 1, s)) == doctest::Approx(0.5));
}

TEST_CASE("ising model enumerates to the Boltzmann distribution") {
  auto s = share(ising::majority_scheme());
  auto flat = enumerate(flat_model(ising::ising_model(3, 1.0, s), s));
  CHECK(flat.probs.size() == 512);
  CHECK(tv_to(flat, boltzmann3(1.0)) < 1e-12);
  auto ctf = enumerate(coarse_to_fine_model(ising::ising_model(3, 1.0, s), 1, s));
  CHECK(total_variation(flat, ctf) < 1e-9);
  CHECK(ctf.log_z == doctest::Approx(flat.log_z));
}

TEST_CASE("ising approaches uniform as temperature grows") {
  auto s = share(ising::majority_scheme());
  std::map<Value, double> uniform;
  for (const auto& [v, p] : boltzmann3(0.0)) uniform[v] = p;
  double prev = 1.0;
  for (double t : {1.0, 3.0, 10.0, 15.0}) {
    auto e = enumerate(flat_model(ising::ising_model(3, t, s), s));
    const double tv = tv_to(e, uniform);
    CAPTURE(t);
    CHECK(tv < prev);
    CHECK(std::abs(tv - 0.5 * [&] {
      double acc = 0.0;
      for (const auto& [v, p] : boltzmann3(1.0 / t)) acc += std::abs(p - 1.0 / 512.0);
      return acc;
    }()) < 1e-12);
    prev = tv;
  }
  // With J = 1/T the 3x3 lattice is within 0.1 of uniform from about T = 15
  // (TV is 0.1346 at T = 10).
  CHECK(prev < 0.1);
}

TEST_CASE("ising configuration errors") {
  auto s = share(ising::majority_scheme());
  CHECK_THROWS_AS(ising::ising_model(4, 1.0, s), Error);
  CHECK_THROWS_AS(ising::ising_model(3, 0.0, s), Error);
  CHECK_THROWS_AS(ising::uniform_spins(5).support(), Error);
}

TEST_CASE("stereo smoothing and data cost") {
  CHECK(stereo::smoothing(3, 7) == 5.0);
  CHECK(stereo::smoothing(3, 4) == 1.0);
  CHECK(stereo::smoothing(7, 3) == stereo::smoothing(3, 7));
  stereo::Image l(1, 1, 10.0), r(1, 1, 13.0);
  CHECK(stereo::data_cost(l, r, 0, 0, 0.0) == 3.0);
  // Interpolated neighbourhood: right row 0, 20; at d = 0.5 the window
  // [0, 1] reaches 20, so the nearest value to 12 is 12 itself.
  stereo::Image l2(1, 2, 12.0), r2(1, 2);
  r2.at(0, 0) = 0.0;
  r2.at(0, 1) = 20.0;
  CHECK(stereo::data_cost(l2, r2, 0, 0, 0.5) == 0.0);
  CHECK(stereo::data_cost(l2, r2, 0, 0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("stereo energy") {
  auto pair = stereo::synthesize_pair(3, 8, 4, 0);
  CHECK(pair.left == pair.right);
  CHECK(stereo::energy(Value(IntMatrix(4, 8, 0)), pair.left, pair.right) == 0.0);
  CHECK_THROWS_AS(stereo::energy(Value(IntMatrix(4, 6, 0)), pair.left, pair.right), Error);
}

TEST_CASE("synthetic stereo pairs") {
  auto a = stereo::synthesize_pair(9, 16, 8, 4);
  auto b = stereo::synthesize_pair(9, 16, 8, 4);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
  CHECK(a.disparity == b.disparity);
  CHECK_THROWS_AS(stereo::synthesize_pair(1, 4, 4, 4), Error);
  int better = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto p = stereo::synthesize_pair(seed, 16, 8, 4);
    const double truth = stereo::energy(Value(p.disparity), p.left, p.right);
    const double zero = stereo::energy(Value(IntMatrix(8, 16, 0)), p.left, p.right);
    better += truth <= zero ? 1 : 0;
  }
  CHECK(better == 20);
}

TEST_CASE("block summaries") {
  auto s = stereo::summarize(2, 2, 2, 2);
  CHECK(s.mean == 2.0);
  CHECK(s.std == 0.0);
  CHECK(stereo::refine_summary(s, 4) == std::vector<std::array<int, 4>>{{2, 2, 2, 2}});
  auto t = stereo::summarize(1, 3, 1, 3);
  CHECK(t.mean == 2.0);
  CHECK(t.std == 1.0);
  std::size_t brute = 0;
  for (int i = 0; i < 625; ++i) {
    const int a = i % 5, b = i / 5 % 5, c = i / 25 % 5, d = i / 125;
    const double mean = (a + b + c + d) / 4.0;
    const double var = ((a - mean) * (a - mean) + (b - mean) * (b - mean) + (c - mean) * (c - mean) +
                        (d - mean) * (d - mean)) / 4.0;
    if (mean == 2.0 && std::abs(std::sqrt(var) - 1.0) < 1e-12) ++brute;
  }
  CHECK(stereo::refine_summary(t, 4).size() == brute);
  CHECK(stereo::refine_summary(BlockSummary{2.0, 0.3}, 4).empty());
}

TEST_CASE("block scheme inverse law over disparities 0..4") {
  auto s = stereo::block_scheme(4);
  auto report = check_inverse_law(s, stereo::uniform_disparity(2, 2, 4).support());
  CHECK(report.ok());
  CHECK(report.values_checked == 625);
  CHECK(report.refinements_checked == 625);
}

TEST_CASE("block class score agrees with enumeration") {
  auto s = stereo::block_scheme(2);
  auto base = stereo::uniform_disparity(2, 4, 2);
  std::map<Value, double> mass;
  for (const auto& v : base.support()) mass[coarsen_times(s, v, 2)] += std::exp(base.log_mass(v));
  for (const auto& [c, m] : mass) {
    CHECK(std::exp(get_erp_score(base, c, 2, s)) == doctest::Approx(m));
    auto exact = s;
    exact.scorer = ScorerMode::Exact;
    CHECK(std::exp(get_erp_score(base, c, 2, exact)) == doctest::Approx(m));
  }
}

TEST_CASE("stereo model: coarse-to-fine keeps the marginal") {
  auto pair = stereo::synthesize_pair(4, 4, 2, 2);
  auto s = share(stereo::block_scheme(2));
  auto flat = enumerate(flat_model(stereo::stereo_model(pair, 2, s), s));
  for (int n : {1, 2}) {
    auto ctf = enumerate(coarse_to_fine_model(stereo::stereo_model(pair, 2, s), n, s));
    CHECK(total_variation(flat, ctf) < 1e-9);
  }
}

TEST_CASE("fhmm parameters") {
  auto p = fhmm::make_params(4, 1, 1);
  const double row[] = {0.5, 1.0, 0.5, 0.25};
  for (int j = 1; j <= 4; ++j) CHECK(p.trans(2, j) == doctest::Approx(row[j - 1] / 2.25));
  for (int M = 2; M <= 256; M *= 2) {
    auto q = fhmm::make_params(M, 3, 1);
    for (int i = 1; i <= M; ++i) {
      double st = 0.0, so = 0.0;
      for (int j = 1; j <= M; ++j) {
        st += q.trans(i, j);
        so += q.obs(i, j);
      }
      CHECK(std::abs(st - 1.0) < 1e-12);
      CHECK(std::abs(so - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS_AS(fhmm::make_params(6, 1, 1), Error);
  try {
    fhmm::make_params(12, 1, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonDyadicM);
  }
  try {
    fhmm::check_observations(p, {{5}});
    FAIL("expected ObservationOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ObservationOutOfRange);
  }
}

TEST_CASE("fhmm forward algorithm agrees with enumeration") {
  auto s = share(interval_scheme());
  struct Case {
    int M, k, steps;
  };
  for (auto c : {Case{2, 1, 2}, Case{2, 2, 3}, Case{4, 1, 3}, Case{4, 2, 2}, Case{2, 3, 2}}) {
    auto p = fhmm::make_params(c.M, c.k, c.steps);
    auto y = fhmm::sample_observations(p, 17);
    auto e = enumerate(flat_model(fhmm::fhmm_model(p, y, s), s));
    CAPTURE(c.M);
    CAPTURE(c.k);
    CAPTURE(c.steps);
    CHECK(std::abs(fhmm::exact_log_z(p, y) - e.log_z) < 1e-10);
    CHECK(std::abs(fhmm::factorized_log_z(p, y) - e.log_z) < 1e-10);
  }
}

TEST_CASE("fhmm coarse-to-fine keeps the marginal") {
  auto s = share(interval_scheme());
  auto p = fhmm::make_params(4, 1, 3);
  auto y = fhmm::sample_observations(p, 3);
  auto flat = enumerate(flat_model(fhmm::fhmm_model(p, y, s), s));
  for (int n : {1, 2}) {
    auto ctf = enumerate(coarse_to_fine_model(fhmm::fhmm_model(p, y, s), n, s));
    CHECK(total_variation(flat, ctf) < 1e-9);
    CHECK(ctf.log_z == doctest::Approx(flat.log_z));
  }
}

TEST_CASE("matrix text round trip") {
  std::vector<std::vector<double>> m{{1.0, 2.5, -3.0}, {0.1, 1e-300, 255.0}};
  std::stringstream ss;
  models::write_matrix(ss, m);
  CHECK(models::read_matrix(ss) == m);
  std::stringstream bad("1 2 x\n");
  CHECK_THROWS_AS(models::read_matrix(bad), Error);
}
