#include "smc/sweep.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace smc {

std::string_view to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

Direction parse_direction(std::string_view text) {
  if (text == "up")
    return Direction::Up;
  if (text == "down")
    return Direction::Down;
  throw std::invalid_argument("unknown direction `" + std::string(text) + "`");
}

SweepResult sweep(const SmcProblem &p, const SweepOptions &o) {
  if (!(o.step > 0.0) || !std::isfinite(o.step))
    throw std::invalid_argument("sweep: step must be positive");
  if (!(o.lo < o.hi))
    throw std::invalid_argument("sweep: need lo < hi");
  if (o.predicate >= p.predicates.size())
    throw std::invalid_argument("sweep: predicate index out of range");

  // Grid points are computed by multiplication so they do not drift; the
  // slack admits hi itself when (hi - lo) / step is integral.
  const auto points = static_cast<std::size_t>(std::floor((o.hi - o.lo) / o.step + 1e-9)) + 1;
  SmcProblem work = p;
  SweepResult r;
  bool stopped = false;
  for (std::size_t i = 0; i < points; ++i) {
    double q = o.direction == Direction::Up ? o.lo + static_cast<double>(i) * o.step
                                            : o.hi - static_cast<double>(i) * o.step;
    work.predicates[o.predicate].threshold = q;
    SolveResult s = solve(work, o.solver);
    r.trace.push_back({q, s.status, s.stats});
    if (s.status == Status::Sat) {
      if (!stopped) {
        r.best_threshold = q;
        r.best_model = std::move(s.model);
      }
    } else {
      stopped = true;
      if (!o.full_range)
        break;
    }
  }
  return r;
}

std::size_t count_flips(const std::vector<SweepPoint> &trace) {
  std::size_t flips = 0;
  for (std::size_t i = 1; i < trace.size(); ++i)
    flips += trace[i].status != trace[i - 1].status;
  return flips;
}

void write_trace_csv(std::ostream &out, const std::vector<SweepPoint> &trace) {
  out << "q,status,decisions,conflicts,wall_time\n";
  auto precision = out.precision(10);
  for (const SweepPoint &pt : trace)
    out << pt.q << ',' << to_string(pt.status) << ',' << pt.stats.decisions << ','
        << pt.stats.conflicts() << ',' << pt.stats.wall_time << '\n';
  out.precision(precision);
}

} // namespace smc
