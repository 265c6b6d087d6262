#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ctf/inference/engine.hpp"

namespace ctf::bench {

/// One inference run: log Z after each barrier (or trace point), plus the
/// best model score among the final particles.
struct RunTrace {
  std::uint64_t seed = 0;
  std::string condition;
  std::vector<TracePoint> points;
  double final_log_z = 0.0;
  double best_score = 0.0;
  std::size_t particles_used = 0;
};

/// CSV with header seed,condition,barrier,elapsed_s,logZ. Reals are written
/// with round-trip precision.
void write_csv(std::ostream& out, const std::vector<RunTrace>& traces);
/// Throws ParseError. Only the CSV columns are restored; final_log_z is the
/// last logZ of each run.
std::vector<RunTrace> read_csv(std::istream& in);

void write_csv_file(const std::string& path, const std::vector<RunTrace>& traces);
std::vector<RunTrace> read_csv_file(const std::string& path);

struct ConditionSummary {
  std::string condition;
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> stderr_;
  /// Final log Z per seed.
  std::map<std::uint64_t, double> finals;
};

/// `points` evenly spaced times from 0 to the longest run's last time.
std::vector<double> time_grid(const std::vector<RunTrace>& traces, std::size_t points);

/// Interpolates each run linearly onto `grid` (holding the end values outside
/// its span) and reports per-condition mean and standard error. Throws
/// EmptyTraces.
std::vector<ConditionSummary> summarize(const std::vector<RunTrace>& traces, const std::vector<double>& grid);
std::vector<ConditionSummary> summarize(const std::vector<RunTrace>& traces, std::size_t grid_points);

struct Comparison {
  /// mean final log Z of b minus that of a.
  double gap = 0.0;
  /// Fraction of seeds where b ends higher; ties count one half.
  double win_rate = 0.0;
  std::size_t pairs = 0;
};

/// Pairs runs by seed; with no shared seed every cross pair counts.
/// Throws GridMismatch.
Comparison compare(const ConditionSummary& a, const ConditionSummary& b);

}  // namespace ctf::bench
