#include "ctf/bench/traces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ctf::bench {

namespace {

double parse_real(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

double interpolate(const std::vector<TracePoint>& pts, double t) {
  if (t <= pts.front().elapsed_s) return pts.front().log_z;
  if (t >= pts.back().elapsed_s) return pts.back().log_z;
  auto hi = std::lower_bound(pts.begin(), pts.end(), t,
                             [](const TracePoint& p, double x) { return p.elapsed_s < x; });
  auto lo = hi - 1;
  const double span = hi->elapsed_s - lo->elapsed_s;
  const double w = (t - lo->elapsed_s) / span;
  if (std::isinf(lo->log_z) || std::isinf(hi->log_z)) return w < 1.0 ? lo->log_z : hi->log_z;
  return (1.0 - w) * lo->log_z + w * hi->log_z;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunTrace>& traces) {
  out << "seed,condition,barrier,elapsed_s,logZ\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      out << t.seed << ',' << t.condition << ',' << i << ',' << t.points[i].elapsed_s << ',' << t.points[i].log_z
          << '\n';
    }
  }
}

std::vector<RunTrace> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "seed,condition,barrier,elapsed_s,logZ") {
    throw Error(ErrorCode::ParseError, "missing CSV header");
  }
  std::vector<RunTrace> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 5) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 5 columns");
    std::uint64_t seed = 0;
    std::size_t barrier = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(cols[0], &used);
      if (used != cols[0].size()) throw std::invalid_argument("seed");
      barrier = std::stoull(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("barrier");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad integer field");
    }
    const TracePoint p{parse_real(cols[3], lineno), parse_real(cols[4], lineno)};
    if (barrier == 0 || out.empty() || out.back().seed != seed || out.back().condition != cols[1]) {
      if (barrier != 0) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": run must start at barrier 0");
      out.push_back(RunTrace{seed, cols[1], {}, 0.0, 0.0, 0});
    } else if (barrier != out.back().points.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": barriers out of order");
    }
    out.back().points.push_back(p);
    out.back().final_log_z = p.log_z;
  }
  return out;
}

void write_csv_file(const std::string& path, const std::vector<RunTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  write_csv(out, traces);
}

std::vector<RunTrace> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read_csv(in);
}

std::vector<double> time_grid(const std::vector<RunTrace>& traces, std::size_t points) {
  if (traces.empty()) throw Error(ErrorCode::EmptyTraces, "no traces");
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "a grid needs at least two points");
  double t_max = 0.0;
  for (const auto& t : traces) {
    if (!t.points.empty()) t_max = std::max(t_max, t.points.back().elapsed_s);
  }
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

std::vector<ConditionSummary> summarize(const std::vector<RunTrace>& traces, const std::vector<double>& grid) {
  if (traces.empty()) throw Error(ErrorCode::EmptyTraces, "no traces");
  std::map<std::string, std::vector<const RunTrace*>> groups;
  for (const auto& t : traces) {
    if (t.points.empty()) throw Error(ErrorCode::EmptyTraces, "run for seed " + std::to_string(t.seed) + " is empty");
    groups[t.condition].push_back(&t);
  }
  std::vector<ConditionSummary> out;
  for (const auto& [cond, runs] : groups) {
    ConditionSummary s;
    s.condition = cond;
    s.grid = grid;
    const auto n = static_cast<double>(runs.size());
    for (double t : grid) {
      std::vector<double> ys;
      for (const auto* r : runs) ys.push_back(interpolate(r->points, t));
      double mean = 0.0;
      for (double y : ys) mean += y / n;
      double var = 0.0;
      if (runs.size() > 1) {
        for (double y : ys) var += (y - mean) * (y - mean);
        var /= n - 1.0;
      }
      s.mean.push_back(mean);
      s.stderr_.push_back(runs.size() > 1 ? std::sqrt(var / n) : 0.0);
    }
    for (const auto* r : runs) s.finals[r->seed] = r->points.back().log_z;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ConditionSummary> summarize(const std::vector<RunTrace>& traces, std::size_t grid_points) {
  return summarize(traces, time_grid(traces, grid_points));
}

Comparison compare(const ConditionSummary& a, const ConditionSummary& b) {
  if (a.grid != b.grid) throw Error(ErrorCode::GridMismatch, "summaries use different time grids");
  if (a.finals.empty() || b.finals.empty()) throw Error(ErrorCode::EmptyTraces, "no runs to compare");
  auto mean_of = [](const std::map<std::uint64_t, double>& m) {
    double s = 0.0;
    for (const auto& [seed, v] : m) s += v;
    return s / static_cast<double>(m.size());
  };
  Comparison c;
  c.gap = mean_of(b.finals) - mean_of(a.finals);
  double wins = 0.0;
  auto score = [](double x, double y) { return y > x ? 1.0 : (y == x ? 0.5 : 0.0); };
  for (const auto& [seed, va] : a.finals) {
    auto it = b.finals.find(seed);
    if (it == b.finals.end()) continue;
    wins += score(va, it->second);
    ++c.pairs;
  }
  if (c.pairs == 0) {
    for (const auto& [sa, va] : a.finals) {
      for (const auto& [sb, vb] : b.finals) {
        wins += score(va, vb);
        ++c.pairs;
      }
    }
  }
  c.win_rate = wins / static_cast<double>(c.pairs);
  return c;
}

}  // namespace ctf::bench
