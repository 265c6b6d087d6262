#include "ctf/models/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <utility>

namespace ctf::stereo {

namespace {

int clamp_col(long x, int cols) { return static_cast<int>(std::clamp<long>(x, 0, cols - 1)); }

double interpolate(const Image& img, int r, double x) {
  x = std::clamp(x, 0.0, static_cast<double>(img.cols - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int x1 = std::min(x0 + 1, img.cols - 1);
  const double t = x - x0;
  return (1.0 - t) * img.at(r, x0) + t * img.at(r, x1);
}

void check_dims(int rows, int cols, const Image& left, const Image& right) {
  if (left.rows != right.rows || left.cols != right.cols || rows != left.rows || cols != left.cols) {
    throw Error(ErrorCode::DimensionMismatch, "disparity map and images must share dimensions");
  }
}

PartialDisparityMap as_partial(const Value& v) {
  if (v.is<PartialDisparityMap>()) return v.as<PartialDisparityMap>();
  if (!v.is<IntMatrix>()) throw Error(ErrorCode::CoarsenFailure, "block scheme cannot act on " + v.to_string());
  const auto& m = v.as<IntMatrix>();
  if (m.rows % 2 != 0 || m.cols % 2 != 0) throw Error(ErrorCode::NotDivisible, "map dimensions must be even");
  PartialDisparityMap p;
  p.fine = m;
  p.blocks.assign(static_cast<std::size_t>(m.rows / 2) * (m.cols / 2), BlockSummary{});
  return p;
}

}  // namespace

StereoPair synthesize_pair(std::uint64_t seed, int width, int height, int max_disparity) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image must be non-empty");
  if (max_disparity < 0 || max_disparity >= width) {
    throw Error(ErrorCode::InvalidArgument, "max disparity must lie in [0, width)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> disp(0, max_disparity);
  StereoPair out;
  out.disparity = IntMatrix(height, width, disp(rng));
  for (int k = 0; k < 2; ++k) {
    std::uniform_int_distribution<int> row(0, height - 1);
    std::uniform_int_distribution<int> col(0, width - 1);
    int r0 = row(rng), r1 = row(rng), c0 = col(rng), c1 = col(rng);
    if (r0 > r1) std::swap(r0, r1);
    if (c0 > c1) std::swap(c0, c1);
    const int d = disp(rng);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) out.disparity.at(r, c) = d;
    }
  }
  std::uniform_real_distribution<double> intensity(0.0, 255.0);
  out.left = Image(height, width);
  for (auto& p : out.left.px) p = std::round(intensity(rng));
  out.right = Image(height, width);
  for (int r = 0; r < height; ++r) {
    for (int x = 0; x < width; ++x) {
      out.right.at(r, x) = out.left.at(r, clamp_col(static_cast<long>(x) - out.disparity.at(r, x), width));
    }
  }
  return out;
}

double smoothing(double dp, double dq) { return std::min((dp - dq) * (dp - dq), kMaxSmoothing); }

double data_cost(const Image& left, const Image& right, int r, int c, double d) {
  const double target = left.at(r, c);
  const double lo = c + d - 0.5;
  const double hi = c + d + 0.5;
  double vmin = std::min(interpolate(right, r, lo), interpolate(right, r, hi));
  double vmax = std::max(interpolate(right, r, lo), interpolate(right, r, hi));
  // The interpolant is piecewise linear, so its range over [lo, hi] is
  // spanned by the endpoints and the integer knots in between.
  for (long x = static_cast<long>(std::ceil(lo)); x <= static_cast<long>(std::floor(hi)); ++x) {
    const double v = right.at(r, clamp_col(x, right.cols));
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (target < vmin) return vmin - target;
  if (target > vmax) return target - vmax;
  return 0.0;
}

double energy(const Value& map, const Image& left, const Image& right) {
  if (map.is<IntMatrix>()) {
    const auto& d = map.as<IntMatrix>();
    check_dims(d.rows, d.cols, left, right);
    double h = 0.0;
    for (int r = 0; r < d.rows; ++r) {
      for (int c = 0; c < d.cols; ++c) {
        h += data_cost(left, right, r, c, d.at(r, c));
        if (c + 1 < d.cols) h += smoothing(d.at(r, c), d.at(r, c + 1));
        if (r + 1 < d.rows) h += smoothing(d.at(r, c), d.at(r + 1, c));
      }
    }
    return h;
  }
  if (!map.is<PartialDisparityMap>()) throw Error(ErrorCode::TypeMismatch, "not a disparity map");
  const auto& p = map.as<PartialDisparityMap>();
  const int rows = p.fine.rows;
  const int cols = p.fine.cols;
  check_dims(rows, cols, left, right);
  const int bcols = cols / 2;
  auto block_of = [&](int r, int c) { return (r / 2) * bcols + c / 2; };
  auto coarse = [&](int r, int c) { return block_of(r, c) < p.coarsened; };
  std::vector<double> d(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      d[static_cast<std::size_t>(r) * cols + c] =
          coarse(r, c) ? p.blocks[block_of(r, c)].mean : static_cast<double>(p.fine.at(r, c));
    }
  }
  auto pair_cost = [&](int r0, int c0, int r1, int c1) {
    if (coarse(r0, c0) && block_of(r0, c0) == block_of(r1, c1)) {
      const double sd = p.blocks[block_of(r0, c0)].std;
      return std::min(2.0 * sd * sd, kMaxSmoothing);
    }
    return smoothing(d[static_cast<std::size_t>(r0) * cols + c0], d[static_cast<std::size_t>(r1) * cols + c1]);
  };
  double h = 0.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      h += data_cost(left, right, r, c, d[static_cast<std::size_t>(r) * cols + c]);
      if (c + 1 < cols) h += pair_cost(r, c, r, c + 1);
      if (r + 1 < rows) h += pair_cost(r, c, r + 1, c);
    }
  }
  return h;
}

BlockSummary summarize(int a, int b, int c, int d) {
  const long s = static_cast<long>(a) + b + c + d;
  const long sq = static_cast<long>(a) * a + static_cast<long>(b) * b + static_cast<long>(c) * c +
                  static_cast<long>(d) * d;
  const long q = 4 * sq - s * s;
  return BlockSummary{static_cast<double>(s) / 4.0, std::sqrt(static_cast<double>(q)) / 4.0};
}

const std::vector<std::array<int, 4>>& refine_summary(const BlockSummary& s, int max_disparity) {
  using Table = std::map<std::pair<double, double>, std::vector<std::array<int, 4>>>;
  static std::mutex mu;
  static std::map<int, Table> tables;
  static const std::vector<std::array<int, 4>> empty;
  if (max_disparity < 0) throw Error(ErrorCode::InvalidArgument, "negative disparity range");
  std::lock_guard lock(mu);
  auto [it, fresh] = tables.try_emplace(max_disparity);
  if (fresh) {
    const int k = max_disparity + 1;
    for (int i = 0; i < k * k * k * k; ++i) {
      const std::array<int, 4> b{i % k, (i / k) % k, (i / (k * k)) % k, i / (k * k * k)};
      const auto sum = summarize(b[0], b[1], b[2], b[3]);
      it->second[{sum.mean, sum.std}].push_back(b);
    }
  }
  auto found = it->second.find({s.mean, s.std});
  return found == it->second.end() ? empty : found->second;
}

int max_coarsening_steps(int rows, int cols) {
  if (rows <= 0 || cols <= 0 || rows % 2 != 0 || cols % 2 != 0) {
    throw Error(ErrorCode::NotDivisible, "map dimensions must be positive and even");
  }
  return (rows / 2) * (cols / 2);
}

CoarseningScheme block_scheme(int max_disparity) {
  CoarseningScheme s;
  s.coarsen = [](const Value& v) -> Value {
    PartialDisparityMap p = as_partial(v);
    const int bcols = p.fine.cols / 2;
    if (p.coarsened >= max_coarsening_steps(p.fine.rows, p.fine.cols)) {
      throw Error(ErrorCode::FullyCoarsened, "no block left to summarize");
    }
    const int r = (p.coarsened / bcols) * 2;
    const int c = (p.coarsened % bcols) * 2;
    p.blocks[p.coarsened] = summarize(p.fine.at(r, c), p.fine.at(r, c + 1), p.fine.at(r + 1, c), p.fine.at(r + 1, c + 1));
    p.fine.at(r, c) = p.fine.at(r, c + 1) = p.fine.at(r + 1, c) = p.fine.at(r + 1, c + 1) = 0;
    ++p.coarsened;
    return Value(std::move(p));
  };
  s.refine = [max_disparity](const Value& v) -> std::vector<Value> {
    if (!v.is<PartialDisparityMap>()) throw Error(ErrorCode::EmptyRefinement, "nothing to refine in a fine map");
    const auto& p = v.as<PartialDisparityMap>();
    if (p.coarsened == 0) throw Error(ErrorCode::EmptyRefinement, "map is fully fine");
    const int b = p.coarsened - 1;
    const int bcols = p.fine.cols / 2;
    const int r = (b / bcols) * 2;
    const int c = (b % bcols) * 2;
    const auto& blocks = refine_summary(p.blocks[b], max_disparity);
    if (blocks.empty()) throw Error(ErrorCode::EmptyRefinement, "no integer block has this summary");
    std::vector<Value> out;
    out.reserve(blocks.size());
    for (const auto& blk : blocks) {
      PartialDisparityMap w = p;
      w.coarsened = b;
      w.blocks[b] = BlockSummary{};
      w.fine.at(r, c) = blk[0];
      w.fine.at(r, c + 1) = blk[1];
      w.fine.at(r + 1, c) = blk[2];
      w.fine.at(r + 1, c + 1) = blk[3];
      if (b == 0) out.emplace_back(std::move(w.fine));
      else out.emplace_back(std::move(w));
    }
    return out;
  };
  s.exact_mass = [max_disparity](const Distribution&, const Value& coarse, int) {
    const PartialDisparityMap p = as_partial(coarse);
    const double per_pixel = std::log(static_cast<double>(max_disparity + 1));
    const int fine_pixels = p.fine.rows * p.fine.cols - 4 * p.coarsened;
    double lp = -per_pixel * fine_pixels;
    for (int b = 0; b < p.coarsened; ++b) {
      const auto n = refine_summary(p.blocks[b], max_disparity).size();
      if (n == 0) return -std::numeric_limits<double>::infinity();
      lp += std::log(static_cast<double>(n)) - 4.0 * per_pixel;
    }
    return lp;
  };
  s.scorer = ScorerMode::User;
  return s;
}

Distribution uniform_disparity(int rows, int cols, int max_disparity) {
  if (rows <= 0 || cols <= 0 || max_disparity < 0) throw Error(ErrorCode::InvalidArgument, "bad disparity domain");
  const double lp = -static_cast<double>(rows) * cols * std::log(static_cast<double>(max_disparity + 1));
  auto support = [rows, cols, max_disparity]() -> std::vector<Value> {
    const double count = std::pow(max_disparity + 1.0, rows * cols);
    if (count > 70000.0) throw Error(ErrorCode::NotEnumerable, "too many disparity maps to list");
    std::vector<Value> out;
    const int k = max_disparity + 1;
    for (long i = 0; i < static_cast<long>(count); ++i) {
      IntMatrix m(rows, cols);
      long x = i;
      for (auto& e : m.data) {
        e = static_cast<int>(x % k);
        x /= k;
      }
      out.emplace_back(std::move(m));
    }
    return out;
  };
  auto log_mass = [rows, cols, max_disparity, lp](const Value& v) {
    if (!v.is<IntMatrix>()) return -std::numeric_limits<double>::infinity();
    const auto& m = v.as<IntMatrix>();
    if (m.rows != rows || m.cols != cols) return -std::numeric_limits<double>::infinity();
    for (int e : m.data) {
      if (e < 0 || e > max_disparity) return -std::numeric_limits<double>::infinity();
    }
    return lp;
  };
  auto sampler = [rows, cols, max_disparity](Rng& rng) {
    std::uniform_int_distribution<int> d(0, max_disparity);
    IntMatrix m(rows, cols);
    for (auto& e : m.data) e = d(rng);
    return Value(std::move(m));
  };
  return from_functions(support, log_mass, sampler);
}

LiftableModel stereo_model(StereoPair pair, int max_disparity, std::shared_ptr<const CoarseningScheme> scheme) {
  check_dims(pair.left.rows, pair.left.cols, pair.left, pair.right);
  if (max_disparity < 0 || max_disparity >= pair.left.cols) {
    throw Error(ErrorCode::ConfigError, "max disparity must lie in [0, width)");
  }
  LiftedErp maps(uniform_disparity(pair.left.rows, pair.left.cols, max_disparity), std::move(scheme));
  auto images = std::make_shared<const StereoPair>(std::move(pair));
  auto score = LiftedScorer::polymorphic(
      [images](const std::vector<Value>& args) { return -energy(args.at(0), images->left, images->right); });
  return [maps, score](LevelContext& ctx) {
    Value d = ctx.sample("disparity", maps);
    ctx.factor("energy", ctx.score(score, {d}));
    return d;
  };
}

}  // namespace ctf::stereo
