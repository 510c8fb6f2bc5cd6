#include "smc/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smc {

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
  case Comparator::GE:
    return "ge";
  case Comparator::GT:
    return "gt";
  case Comparator::LE:
    return "le";
  case Comparator::LT:
    return "lt";
  }
  return "?";
}

Comparator parse_comparator(std::string_view text) {
  if (text == "ge")
    return Comparator::GE;
  if (text == "gt")
    return Comparator::GT;
  if (text == "le")
    return Comparator::LE;
  if (text == "lt")
    return Comparator::LT;
  throw std::invalid_argument("unknown comparator '" + std::string(text) + "'");
}

std::string_view to_string(ThresholdMode mode) {
  return mode == ThresholdMode::Absolute ? "absolute" : "partition_fraction";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "absolute")
    return ThresholdMode::Absolute;
  if (text == "partition_fraction")
    return ThresholdMode::PartitionFraction;
  throw std::invalid_argument("unknown threshold mode '" + std::string(text) + "'");
}

bool compare(double value, Comparator cmp, double threshold) {
  switch (cmp) {
  case Comparator::GE:
    return value >= threshold;
  case Comparator::GT:
    return value > threshold;
  case Comparator::LE:
    return value <= threshold;
  case Comparator::LT:
    return value < threshold;
  }
  return false;
}

DomainThreshold::DomainThreshold(double linear_threshold, NumericMode mode) {
  if (mode == NumericMode::Linear) {
    value_ = linear_threshold;
  } else if (linear_threshold < 0.0) {
    below_all_ = true;
    value_ = -std::numeric_limits<double>::infinity();
  } else {
    value_ = std::log(linear_threshold);
  }
}

bool DomainThreshold::holds(double value, Comparator cmp) const {
  if (below_all_)
    return cmp == Comparator::GE || cmp == Comparator::GT;
  return compare(value, cmp, value_);
}

DomainThreshold::Outcome DomainThreshold::entail(Bounds b, Comparator cmp) const {
  // GE/GT are monotone increasing in the value, LE/LT decreasing.
  const bool increasing = cmp == Comparator::GE || cmp == Comparator::GT;
  const double best = increasing ? b.ub : b.lb;
  const double worst = increasing ? b.lb : b.ub;
  if (holds(worst, cmp))
    return Outcome::True;
  if (!holds(best, cmp))
    return Outcome::False;
  return Outcome::Unknown;
}

double PredicateSpec::resolved_threshold() const {
  if (threshold_mode == ThresholdMode::Absolute)
    return threshold;
  return threshold * partition(*circuit);
}

std::vector<std::uint32_t> PredicateSpec::shared_circuit_vars() const {
  std::vector<std::uint32_t> out;
  out.reserve(shared.size());
  for (const SharedVar &s : shared)
    out.push_back(s.circuit_var);
  return out;
}

void SmcProblem::check() const {
  for (const Clause &c : cnf.clauses)
    for (Literal l : c)
      if (l.var() >= cnf.num_vars)
        throw std::invalid_argument("clause literal out of range");
  for (std::size_t j = 0; j < predicates.size(); ++j) {
    const PredicateSpec &p = predicates[j];
    const std::string where = "predicate " + std::to_string(j) + ": ";
    if (!p.circuit)
      throw std::invalid_argument(where + "missing circuit");
    std::vector<char> seen_c(p.circuit->num_vars(), 0);
    std::vector<char> seen_f(cnf.num_vars, 0);
    for (const SharedVar &s : p.shared) {
      if (s.circuit_var >= p.circuit->num_vars())
        throw std::invalid_argument(where + "shared circuit variable out of range");
      if (s.formula_var >= cnf.num_vars)
        throw std::invalid_argument(where + "shared formula variable out of range");
      if (seen_c[s.circuit_var]++ || seen_f[s.formula_var]++)
        throw std::invalid_argument(where + "shared map is not injective");
    }
    if (p.b && p.b->var() >= cnf.num_vars)
      throw std::invalid_argument(where + "b literal out of range");
    if (!std::isfinite(p.threshold))
      throw std::invalid_argument(where + "threshold is not finite");
    require_valid(*p.circuit);
  }
}

} // namespace smc
