#pragma once

#include "smc/problem.hpp"
#include "smc/solver.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace smc {

enum class Direction { Up, Down };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

struct SweepOptions {
  std::size_t predicate = 0;
  Direction direction = Direction::Up;
  double step = 1e-2;
  double lo = 0.0;
  double hi = 1.0;
  /// Keep solving past the first UNSAT point (to inspect the whole curve).
  bool full_range = false;
  SolverConfig solver;
};

struct SweepPoint {
  double q;
  Status status;
  Stats stats;
};

struct SweepResult {
  /// Last satisfiable threshold before the first non-SAT point.
  std::optional<double> best_threshold;
  std::vector<bool> best_model;
  std::vector<SweepPoint> trace;
};

/// Solves the problem at q = lo, lo + step, ... (or hi, hi - step, ...)
/// with the chosen predicate's threshold replaced by q, read in that
/// predicate's threshold mode. Every point is a fresh solve. Throws
/// std::invalid_argument on a bad range, step or predicate index.
SweepResult sweep(const SmcProblem &p, const SweepOptions &options);

/// Number of status changes along the trace.
std::size_t count_flips(const std::vector<SweepPoint> &trace);

/// Header `q,status,decisions,conflicts,wall_time`.
void write_trace_csv(std::ostream &out, const std::vector<SweepPoint> &trace);

} // namespace smc
