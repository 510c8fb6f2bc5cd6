#pragma once

#include "smc/circuit.hpp"
#include "smc/compile.hpp"
#include "smc/formula.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smc {

enum class Comparator { GE, GT, LE, LT };
enum class ThresholdMode { Absolute, PartitionFraction };

std::string_view to_string(Comparator cmp);
Comparator parse_comparator(std::string_view text);
std::string_view to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

/// Exact comparison `value cmp threshold`, both in the linear domain.
bool compare(double value, Comparator cmp, double threshold);

/// A threshold prepared for comparison against values in a numeric mode.
class DomainThreshold {
public:
  DomainThreshold(double linear_threshold, NumericMode mode);

  /// `value cmp threshold`, where value is in the mode's domain.
  bool holds(double value, Comparator cmp) const;

  enum class Outcome { True, False, Unknown };
  /// Decides `v cmp threshold` for every v in [lb, ub] when possible.
  Outcome entail(Bounds b, Comparator cmp) const;

private:
  double value_;
  bool below_all_ = false; // linear threshold < 0 in log mode
};

struct SharedVar {
  std::uint32_t circuit_var;
  Var formula_var;
  friend bool operator==(const SharedVar &, const SharedVar &) = default;
};

/// b <=> (sum over latent vars of circuit cmp threshold). Without b the
/// predicate is hard.
struct PredicateSpec {
  std::shared_ptr<const Circuit> circuit;
  std::vector<SharedVar> shared;
  std::optional<Literal> b;
  Comparator cmp = Comparator::GE;
  double threshold = 0.0;
  ThresholdMode threshold_mode = ThresholdMode::Absolute;
  /// Factor graph the circuit was compiled from, when known. Used by the
  /// oracle to cross-check marginals by enumeration.
  std::shared_ptr<const FactorGraph> source;

  /// Threshold in the linear domain after applying the partition fraction.
  double resolved_threshold() const;
  std::vector<std::uint32_t> shared_circuit_vars() const;
};

struct SmcProblem {
  CnfFormula cnf;
  std::vector<PredicateSpec> predicates;

  /// Throws std::invalid_argument when the problem is malformed.
  void check() const;
};

} // namespace smc
