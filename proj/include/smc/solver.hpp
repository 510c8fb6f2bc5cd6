#pragma once

#include "smc/circuit.hpp"
#include "smc/formula.hpp"
#include "smc/problem.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace smc {

struct SolverConfig {
  /// Bound propagation on partial assignments. When off, a predicate is
  /// checked by its exact marginal once all its shared variables are set.
  bool ulw_enabled = true;
  NumericMode numeric_mode = NumericMode::Linear;
  /// Conflicts per Luby unit; 0 disables restarts.
  std::uint32_t restart_base = 100;
  double var_decay = 0.95;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> conflict_budget;
  std::optional<double> time_budget_seconds;
  /// Keep a copy of every derived clause (learned and probabilistic).
  bool record_derived = false;
};

enum class Status { Sat, Unsat, BudgetExhausted };

std::string_view to_string(Status s);

struct Stats {
  std::uint64_t decisions = 0;
  std::uint64_t boolean_propagations = 0;
  std::uint64_t boolean_conflicts = 0;
  std::uint64_t prob_conflicts = 0;
  std::uint64_t prob_entailments = 0;
  std::uint64_t learned_clauses = 0;
  std::uint64_t restarts = 0;
  std::uint64_t max_decision_level = 0;
  double wall_time = 0.0; // seconds

  std::uint64_t conflicts() const { return boolean_conflicts + prob_conflicts; }
  /// Counter equality, ignoring wall time.
  bool same_counters(const Stats &o) const;
};

/// `c stat <name> <value>` lines.
void write_stats(std::ostream &out, const Stats &s);

struct SolveResult {
  Status status = Status::Unsat;
  std::vector<bool> model; // indexed by Var when Sat
  Stats stats;
  std::vector<Clause> derived; // filled when record_derived
};

enum class PredicateOutcome { EntailedTrue, EntailedFalse, Undecided, Conflict };

/// Combines the truth of the inequality (as decided from bounds) with the
/// status of the linking literal; hard predicates pass Value::True.
PredicateOutcome evaluate_predicate(DomainThreshold::Outcome truth, Value b_status);

/// (lit) or the empty prefix for hard predicates, followed by the negation of
/// every shared variable currently fixed in `bounds`, mapped to formula vars.
Clause probabilistic_conflict_clause(const PredicateSpec &pred, const BoundState &bounds,
                                     std::optional<Literal> lead);

/// CDCL search over the Boolean formula with probabilistic predicates
/// propagated through circuit bounds.
class Solver {
public:
  Solver(const SmcProblem &problem, SolverConfig config = {});

  SolveResult solve();

  struct Conflict {
    Clause clause;
    std::optional<std::size_t> predicate; // source predicate, if any
  };

  // Step-level interface, used by solve() and exposed for testing.

  /// Loads unit clauses at level 0. Returns false if the problem is UNSAT
  /// before any search.
  bool initialize();
  /// Boolean unit propagation then predicate bound updates, to fixpoint.
  std::optional<Conflict> propagate();
  /// Opens a new decision level and makes `lit` true.
  void assume(Literal lit);
  /// Next decision literal, or nullopt when every variable is assigned.
  std::optional<Literal> decide();
  /// First-UIP analysis. The conflict must contain a literal at the current
  /// level. Returns the learned clause (asserting literal first) and the
  /// backjump level.
  std::pair<Clause, std::uint32_t> analyze(std::span<const Literal> conflict);
  void backtrack(std::uint32_t level);
  /// Adds a learned clause after backtracking and asserts its first literal.
  void learn(Clause clause);

  const PartialAssignment &assignment() const { return assign_; }
  std::uint32_t decision_level() const { return assign_.decision_level(); }
  Bounds predicate_bounds(std::size_t j) const;
  bool predicate_decided(std::size_t j) const;
  const Stats &stats() const { return stats_; }

private:
  struct StoredClause {
    Clause lits;
    bool learnt;
  };
  struct Watcher {
    std::uint32_t cref;
    Literal blocker;
  };
  struct PredicateState {
    const PredicateSpec *spec;
    BoundState bounds;
    DomainThreshold threshold;
    std::vector<std::int32_t> circuit_var_of; // by formula var, -1 if not shared
    std::size_t head = 0;
    std::int64_t decided_level = -1;
    bool dirty = true;
  };

  static constexpr std::int32_t kNoReason = -1;

  void enqueue(Literal lit, std::int32_t reason);
  std::optional<std::uint32_t> propagate_boolean();
  std::optional<Conflict> propagate_predicates(bool &enqueued);
  DomainThreshold::Outcome predicate_truth(PredicateState &ps) const;
  Clause shared_negation(const PredicateState &ps, std::optional<Literal> lead) const;
  std::span<const Literal> reason_lits(Var v) const;
  void attach(std::uint32_t cref);
  void record(const Clause &c);

  void bump(Var v);
  void decay();
  void heap_insert(Var v);
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  Var heap_pop();

  const SmcProblem &problem_;
  SolverConfig config_;
  std::uint32_t nvars_;
  PartialAssignment assign_;
  std::vector<std::int32_t> reason_;
  std::vector<StoredClause> clauses_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<Clause> prob_reasons_;
  std::vector<Var> prob_reason_var_;
  std::vector<Literal> units_;
  bool empty_clause_ = false;
  std::size_t qhead_ = 0;
  std::vector<PredicateState> preds_;

  std::vector<double> activity_;
  double var_inc_ = 1.0;
  std::vector<bool> phase_;
  std::vector<Var> heap_;
  std::vector<std::int32_t> heap_pos_;
  std::vector<char> seen_;

  Stats stats_;
  std::vector<Clause> derived_;
};

/// Convenience wrapper: Solver(problem, config).solve().
SolveResult solve(const SmcProblem &problem, const SolverConfig &config = {});

/// Luby sequence, 1-based: 1 1 2 1 1 2 4 ...
std::uint64_t luby(std::uint64_t i);

} // namespace smc
