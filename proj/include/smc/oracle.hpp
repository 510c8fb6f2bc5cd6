#pragma once

#include "smc/problem.hpp"
#include "smc/solver.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace smc {

enum class MarginalPath {
  Circuit,    // circuit marginal (same arithmetic as the solver)
  Enumeration // factor-graph enumeration; needs PredicateSpec::source
};

struct OracleOptions {
  std::uint32_t cap = 24;
  NumericMode mode = NumericMode::Linear;
  MarginalPath path = MarginalPath::Circuit;
  /// Stop collecting models after this many (counting continues).
  std::size_t max_models = std::size_t(-1);
};

struct OracleResult {
  Status status = Status::Unsat;
  std::uint64_t model_count = 0;
  std::vector<std::vector<bool>> models;
};

/// Enumerates every assignment of the formula variables and keeps those that
/// satisfy all clauses and every predicate biconditional.
OracleResult brute_solve(const SmcProblem &p, const OracleOptions &options = {});

struct PredicateCheck {
  double marginal;  // linear domain
  double threshold; // resolved, linear domain
  bool holds;       // marginal cmp threshold
  std::optional<bool> b_value;
  bool consistent;
};

struct VerificationReport {
  std::vector<std::size_t> violated_clauses;
  std::vector<PredicateCheck> predicates;
  bool pass = false;
};

/// Checks a full model against the clauses and the predicate semantics.
/// Throws std::invalid_argument when the model size differs from the
/// formula's variable count.
VerificationReport verify(const SmcProblem &p, std::span<const bool> model,
                          NumericMode mode = NumericMode::Linear,
                          MarginalPath path = MarginalPath::Circuit);
VerificationReport verify(const SmcProblem &p, const std::vector<bool> &model,
                          NumericMode mode = NumericMode::Linear,
                          MarginalPath path = MarginalPath::Circuit);

} // namespace smc
