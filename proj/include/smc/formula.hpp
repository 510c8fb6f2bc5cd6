#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smc {

/// 0-based variable index. DIMACS and every file format use index + 1.
using Var = std::uint32_t;

enum class Value : std::uint8_t { False, True, Unassigned };

inline constexpr Value to_value(bool b) { return b ? Value::True : Value::False; }

class Literal {
public:
  constexpr Literal() = default;

  static constexpr Literal positive(Var v) { return Literal{v << 1}; }
  static constexpr Literal negative(Var v) { return Literal{(v << 1) | 1U}; }
  static constexpr Literal make(Var v, bool sign) {
    return sign ? positive(v) : negative(v);
  }
  /// Signed DIMACS integer; 0 is not a literal.
  static Literal from_dimacs(int lit);

  constexpr Var var() const { return code_ >> 1; }
  /// true = positive polarity.
  constexpr bool sign() const { return (code_ & 1U) == 0; }
  constexpr std::uint32_t code() const { return code_; }
  int to_dimacs() const;

  constexpr Literal operator~() const { return Literal{code_ ^ 1U}; }
  friend constexpr auto operator<=>(Literal, Literal) = default;

private:
  constexpr explicit Literal(std::uint32_t code) : code_(code) {}
  std::uint32_t code_ = 0;
};

using Clause = std::vector<Literal>;

struct CnfFormula {
  std::uint32_t num_vars = 0;
  std::vector<Clause> clauses;

  friend bool operator==(const CnfFormula &, const CnfFormula &) = default;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Assignment with a decision-level trail. Levels never decrease along the
/// trail; each variable appears on it at most once.
class PartialAssignment {
public:
  PartialAssignment() = default;
  explicit PartialAssignment(std::uint32_t num_vars)
      : values_(num_vars, Value::Unassigned), levels_(num_vars, 0) {}

  std::uint32_t num_vars() const {
    return static_cast<std::uint32_t>(values_.size());
  }
  Value value(Var v) const { return values_[v]; }
  Value value(Literal l) const {
    Value v = values_[l.var()];
    if (v == Value::Unassigned || l.sign())
      return v;
    return v == Value::True ? Value::False : Value::True;
  }
  bool is_true(Literal l) const { return value(l) == Value::True; }
  bool is_false(Literal l) const { return value(l) == Value::False; }
  bool assigned(Var v) const { return values_[v] != Value::Unassigned; }
  std::uint32_t level(Var v) const { return levels_[v]; }

  std::uint32_t decision_level() const {
    return static_cast<std::uint32_t>(trail_lim_.size());
  }
  void new_decision_level() {
    trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
  }
  /// Makes `l` true at the current decision level.
  void assign(Literal l);
  /// Pops every assignment made above `level`.
  void backtrack(std::uint32_t level);

  std::span<const Literal> trail() const { return trail_; }
  /// Trail index where `level` begins (level >= 1).
  std::uint32_t level_start(std::uint32_t level) const {
    return trail_lim_[level - 1];
  }
  std::span<const Value> values() const { return values_; }

private:
  std::vector<Value> values_;
  std::vector<std::uint32_t> levels_;
  std::vector<Literal> trail_;
  std::vector<std::uint32_t> trail_lim_;
};

/// Builds a fully assigned PartialAssignment (all at level 0).
PartialAssignment make_assignment(std::uint32_t num_vars,
                                  std::span<const Literal> literals);

enum class ClauseStatusKind { Satisfied, Falsified, Unit, Unresolved };

struct ClauseStatus {
  ClauseStatusKind kind;
  Literal unit{}; // valid iff kind == Unit
};

ClauseStatus clause_status(std::span<const Literal> clause,
                           const PartialAssignment &a);

enum class FormulaStatus { Satisfied, Falsified, Unknown };

FormulaStatus eval_formula(const CnfFormula &f, const PartialAssignment &a);

/// Removes duplicate literals; returns false if the clause is a tautology.
bool normalize_clause(Clause &clause);

CnfFormula parse_dimacs(std::istream &in);
CnfFormula parse_dimacs(std::string_view text);
void write_dimacs(std::ostream &out, const CnfFormula &f);
std::string to_dimacs(const CnfFormula &f);

} // namespace smc
