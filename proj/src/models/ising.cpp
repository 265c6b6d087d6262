#include "ctf/models/ising.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ctf::ising {

namespace {

int fine_blocks(int n) { return (n / 3) * (n / 3); }
int coarse_blocks(int n) { return n % 9 == 0 ? (n / 9) * (n / 9) : 0; }

void check_spins(const IntMatrix& m) {
  if (m.rows != m.cols) throw Error(ErrorCode::DimensionMismatch, "spin lattice must be square");
  for (int s : m.data) {
    if (s != 1 && s != -1) throw Error(ErrorCode::CoarsenFailure, "spins must be +1 or -1");
  }
}

PartialCoarseLattice as_partial(const Value& v) {
  if (v.is<IntMatrix>()) {
    check_spins(v.as<IntMatrix>());
    return to_partial(v.as<IntMatrix>());
  }
  if (v.is<PartialCoarseLattice>()) return v.as<PartialCoarseLattice>();
  throw Error(ErrorCode::CoarsenFailure, "majority scheme cannot act on " + v.to_string());
}

int count_resolved(const PartialCoarseLattice& l) {
  int total = 0;
  for (std::size_t s = 0; s < l.scales.size(); ++s) {
    const auto& m = l.scales[s];
    for (int r = 0; r < m.rows; ++r) {
      for (int c = 0; c < m.cols; ++c) total += resolved(l, static_cast<int>(s), r, c) ? 1 : 0;
    }
  }
  return total;
}

}  // namespace

int max_coarsening_steps(int n) {
  if (n <= 0 || n % 3 != 0) throw Error(ErrorCode::NotDivisible, "lattice side must be divisible by 3");
  return fine_blocks(n) + coarse_blocks(n);
}

PartialCoarseLattice to_partial(const IntMatrix& spins) {
  const int n = spins.rows;
  if (n % 3 != 0) throw Error(ErrorCode::NotDivisible, "lattice side must be divisible by 3");
  PartialCoarseLattice l;
  l.n = n;
  l.scales.push_back(spins);
  l.scales.emplace_back(n / 3, n / 3, 0);
  if (n % 9 == 0) l.scales.emplace_back(n / 9, n / 9, 0);
  return l;
}

bool resolved(const PartialCoarseLattice& l, int scale, int r, int c) {
  const int k1 = fine_blocks(l.n);
  const int side1 = l.n / 3;
  const int done1 = std::min(l.coarsened, k1);
  const int done2 = std::max(0, l.coarsened - k1);
  auto scale2_done = [&](int r2, int c2) { return r2 * (l.n / 9) + c2 < done2; };
  auto scale1_done = [&](int r1, int c1) { return r1 * side1 + c1 < done1; };
  switch (scale) {
    case 0:
      return !scale1_done(r / 3, c / 3);
    case 1:
      return scale1_done(r, c) && !(coarse_blocks(l.n) > 0 && scale2_done(r / 3, c / 3));
    case 2:
      return scale2_done(r, c);
    default:
      return false;
  }
}

int block_mode(const std::vector<int>& nine) {
  int sum = 0;
  for (int s : nine) sum += s;
  return sum > 0 ? 1 : -1;
}

PartialCoarseLattice majority_coarsen_step(const PartialCoarseLattice& in) {
  const int n = in.n;
  if (in.coarsened >= max_coarsening_steps(n)) {
    throw Error(ErrorCode::FullyCoarsened, "no block left to coarsen");
  }
  PartialCoarseLattice out = in;
  const int k1 = fine_blocks(n);
  const int b = in.coarsened;
  const bool to_scale1 = b < k1;
  const int from = to_scale1 ? 0 : 1;
  const int side = to_scale1 ? n / 3 : n / 9;
  const int idx = to_scale1 ? b : b - k1;
  const int br = idx / side;
  const int bc = idx % side;
  std::vector<int> nine;
  nine.reserve(9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      int& cell = out.scales[from].at(br * 3 + r, bc * 3 + c);
      nine.push_back(cell);
      cell = 0;
    }
  }
  out.scales[from + 1].at(br, bc) = block_mode(nine);
  ++out.coarsened;
  return out;
}

const std::vector<std::vector<int>>& majority_refine(int spin) {
  static const auto table = [] {
    std::vector<std::vector<std::vector<int>>> t(2);
    for (int mask = 0; mask < 512; ++mask) {
      std::vector<int> block(9);
      for (int i = 0; i < 9; ++i) block[i] = (mask >> i) & 1 ? 1 : -1;
      t[block_mode(block) > 0 ? 1 : 0].push_back(block);
    }
    return t;
  }();
  if (spin != 1 && spin != -1) throw Error(ErrorCode::EmptyRefinement, "spin must be +1 or -1");
  return table[spin > 0 ? 1 : 0];
}

CoarseningScheme majority_scheme() {
  CoarseningScheme s;
  s.coarsen = [](const Value& v) -> Value { return Value(majority_coarsen_step(as_partial(v))); };
  s.refine = [](const Value& v) -> std::vector<Value> {
    if (!v.is<PartialCoarseLattice>()) throw Error(ErrorCode::EmptyRefinement, "nothing to refine in " + v.to_string());
    const auto& l = v.as<PartialCoarseLattice>();
    if (l.coarsened == 0) throw Error(ErrorCode::EmptyRefinement, "lattice is fully fine");
    const int n = l.n;
    const int k1 = fine_blocks(n);
    const int b = l.coarsened - 1;
    const bool from_scale1 = b < k1;
    const int to = from_scale1 ? 0 : 1;
    const int side = from_scale1 ? n / 3 : n / 9;
    const int idx = from_scale1 ? b : b - k1;
    const int br = idx / side;
    const int bc = idx % side;
    const int spin = l.scales[to + 1].at(br, bc);
    std::vector<Value> out;
    out.reserve(256);
    for (const auto& block : majority_refine(spin)) {
      PartialCoarseLattice w = l;
      w.coarsened = b;
      w.scales[to + 1].at(br, bc) = 0;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) w.scales[to].at(br * 3 + r, bc * 3 + c) = block[r * 3 + c];
      }
      if (w.coarsened == 0) out.emplace_back(std::move(w.scales[0]));
      else out.emplace_back(std::move(w));
    }
    return out;
  };
  s.exact_mass = [](const Distribution&, const Value& coarse, int) {
    return -static_cast<double>(count_resolved(as_partial(coarse))) * std::numbers::ln2;
  };
  s.scorer = ScorerMode::User;
  return s;
}

Distribution uniform_spins(int n) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "lattice side must be positive");
  const double lp = -static_cast<double>(n) * n * std::numbers::ln2;
  auto support = [n]() -> std::vector<Value> {
    if (n * n > 16) throw Error(ErrorCode::NotEnumerable, "2^(n*n) lattices is too many to list");
    std::vector<Value> out;
    const int cells = n * n;
    for (long mask = 0; mask < (1L << cells); ++mask) {
      IntMatrix m(n, n);
      for (int i = 0; i < cells; ++i) m.data[i] = (mask >> i) & 1 ? 1 : -1;
      out.emplace_back(std::move(m));
    }
    return out;
  };
  auto log_mass = [n, lp](const Value& v) {
    if (!v.is<IntMatrix>()) return -std::numeric_limits<double>::infinity();
    const auto& m = v.as<IntMatrix>();
    if (m.rows != n || m.cols != n) return -std::numeric_limits<double>::infinity();
    for (int s : m.data) {
      if (s != 1 && s != -1) return -std::numeric_limits<double>::infinity();
    }
    return lp;
  };
  auto sampler = [n](Rng& rng) {
    IntMatrix m(n, n);
    for (auto& s : m.data) s = (rng() & 1) ? 1 : -1;
    return Value(std::move(m));
  };
  return from_functions(support, log_mass, sampler);
}

double energy(const Value& lattice, double coupling) {
  if (lattice.is<IntMatrix>()) {
    const auto& m = lattice.as<IntMatrix>();
    long sum = 0;
    for (int r = 0; r < m.rows; ++r) {
      for (int c = 0; c < m.cols; ++c) {
        if (c + 1 < m.cols) sum += m.at(r, c) * m.at(r, c + 1);
        if (r + 1 < m.rows) sum += m.at(r, c) * m.at(r + 1, c);
      }
    }
    return coupling * static_cast<double>(sum);
  }
  if (!lattice.is<PartialCoarseLattice>()) throw Error(ErrorCode::TypeMismatch, "not a spin lattice");
  const auto& l = lattice.as<PartialCoarseLattice>();
  const int n = l.n;
  const int n1 = n / 3;
  const int n2 = n / 9;
  // Owner of each fine position: the resolved cell covering it, encoded as a
  // single id (fine cells first, then scale-1, then scale-2).
  std::vector<int> owner(static_cast<std::size_t>(n) * n);
  std::vector<int> spin_of(static_cast<std::size_t>(n) * n + n1 * n1 + n2 * n2 + 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int id = -1;
      if (resolved(l, 0, r, c)) {
        id = r * n + c;
        spin_of[id] = l.scales[0].at(r, c);
      } else if (resolved(l, 1, r / 3, c / 3)) {
        id = n * n + (r / 3) * n1 + c / 3;
        spin_of[id] = l.scales[1].at(r / 3, c / 3);
      } else if (l.scales.size() > 2 && resolved(l, 2, r / 9, c / 9)) {
        id = n * n + n1 * n1 + (r / 9) * n2 + c / 9;
        spin_of[id] = l.scales[2].at(r / 9, c / 9);
      } else {
        throw Error(ErrorCode::UnresolvedLattice, "cell has no resolved value at any scale");
      }
      owner[static_cast<std::size_t>(r) * n + c] = id;
    }
  }
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(2) * n * n);
  auto add = [&](int a, int b) {
    if (a == b) return;
    pairs.emplace_back(std::min(a, b), std::max(a, b));
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int a = owner[static_cast<std::size_t>(r) * n + c];
      if (c + 1 < n) add(a, owner[static_cast<std::size_t>(r) * n + c + 1]);
      if (r + 1 < n) add(a, owner[static_cast<std::size_t>(r + 1) * n + c]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  long sum = 0;
  for (auto [a, b] : pairs) sum += spin_of[a] * spin_of[b];
  return coupling * static_cast<double>(sum);
}

LiftableModel ising_model(int n, double temperature, std::shared_ptr<const CoarseningScheme> scheme) {
  if (n <= 0 || n % 3 != 0) throw Error(ErrorCode::NotDivisible, "lattice side must be divisible by 3");
  if (!(temperature > 0.0)) throw Error(ErrorCode::ConfigError, "temperature must be positive");
  const double coupling = 1.0 / temperature;
  LiftedErp spins(uniform_spins(n), std::move(scheme));
  auto hamiltonian = LiftedScorer::polymorphic(
      [coupling](const std::vector<Value>& args) { return energy(args.at(0), coupling); });
  return [spins, hamiltonian](LevelContext& ctx) {
    Value lattice = ctx.sample("spins", spins);
    ctx.factor("energy", ctx.score(hamiltonian, {lattice}));
    return lattice;
  };
}

}  // namespace ctf::ising
