#include "smc/formula.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace smc {

Literal Literal::from_dimacs(int lit) {
  if (lit == 0)
    throw std::invalid_argument("0 is not a DIMACS literal");
  Var v = static_cast<Var>(lit > 0 ? lit : -static_cast<long long>(lit)) - 1;
  return make(v, lit > 0);
}

int Literal::to_dimacs() const {
  int idx = static_cast<int>(var()) + 1;
  return sign() ? idx : -idx;
}

void PartialAssignment::assign(Literal l) {
  assert(values_[l.var()] == Value::Unassigned);
  values_[l.var()] = to_value(l.sign());
  levels_[l.var()] = decision_level();
  trail_.push_back(l);
}

void PartialAssignment::backtrack(std::uint32_t level) {
  if (level >= decision_level())
    return;
  std::uint32_t keep = trail_lim_[level];
  for (std::size_t i = trail_.size(); i > keep; --i)
    values_[trail_[i - 1].var()] = Value::Unassigned;
  trail_.resize(keep);
  trail_lim_.resize(level);
}

PartialAssignment make_assignment(std::uint32_t num_vars,
                                  std::span<const Literal> literals) {
  PartialAssignment a(num_vars);
  for (Literal l : literals)
    if (!a.assigned(l.var()))
      a.assign(l);
  return a;
}

ClauseStatus clause_status(std::span<const Literal> clause,
                           const PartialAssignment &a) {
  std::size_t unassigned = 0;
  Literal last{};
  for (Literal l : clause) {
    switch (a.value(l)) {
    case Value::True:
      return {ClauseStatusKind::Satisfied};
    case Value::Unassigned:
      ++unassigned;
      last = l;
      break;
    case Value::False:
      break;
    }
  }
  if (unassigned == 0)
    return {ClauseStatusKind::Falsified};
  if (unassigned == 1)
    return {ClauseStatusKind::Unit, last};
  return {ClauseStatusKind::Unresolved};
}

FormulaStatus eval_formula(const CnfFormula &f, const PartialAssignment &a) {
  bool unknown = false;
  for (const Clause &c : f.clauses) {
    switch (clause_status(c, a).kind) {
    case ClauseStatusKind::Falsified:
      return FormulaStatus::Falsified;
    case ClauseStatusKind::Satisfied:
      break;
    default:
      unknown = true;
    }
  }
  return unknown ? FormulaStatus::Unknown : FormulaStatus::Satisfied;
}

bool normalize_clause(Clause &clause) {
  std::vector<Literal> sorted = clause;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].var() == sorted[i - 1].var() && sorted[i] != sorted[i - 1])
      return false;
  // Keep first-occurrence order.
  Clause out;
  out.reserve(clause.size());
  for (Literal l : clause)
    if (std::find(out.begin(), out.end(), l) == out.end())
      out.push_back(l);
  clause = std::move(out);
  return true;
}

namespace {

bool parse_int(std::string_view tok, long long &out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

} // namespace

CnfFormula parse_dimacs(std::istream &in) {
  CnfFormula f;
  bool have_header = false;
  long long declared_clauses = 0;
  long long seen_clauses = 0;
  Clause current;
  bool open_clause = false;
  std::string line;
  std::size_t lineno = 0;

  auto fail = [&](const std::string &msg) {
    throw ParseError("dimacs line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos)
      continue;
    char lead = line[first];
    if (lead == 'c')
      continue;
    if (lead == '%')
      break;
    if (lead == 'p') {
      if (have_header)
        fail("duplicate header");
      std::istringstream hs(line.substr(first));
      std::string p, fmt, nv, nc, extra;
      long long vars = 0, clauses = 0;
      if (!(hs >> p >> fmt >> nv >> nc) || p != "p" || fmt != "cnf" ||
          !parse_int(nv, vars) || !parse_int(nc, clauses) || vars < 0 ||
          clauses < 0 || vars > std::numeric_limits<std::int32_t>::max() ||
          (hs >> extra))
        fail("malformed header");
      f.num_vars = static_cast<std::uint32_t>(vars);
      declared_clauses = clauses;
      have_header = true;
      continue;
    }
    if (!have_header)
      fail("clause before header");
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      long long lit = 0;
      if (!parse_int(tok, lit))
        fail("bad token '" + tok + "'");
      if (lit == 0) {
        ++seen_clauses;
        if (normalize_clause(current))
          f.clauses.push_back(std::move(current));
        current.clear();
        open_clause = false;
        continue;
      }
      long long mag = lit < 0 ? -lit : lit;
      if (mag > static_cast<long long>(f.num_vars))
        fail("literal " + tok + " out of range");
      current.push_back(Literal::from_dimacs(static_cast<int>(lit)));
      open_clause = true;
    }
  }
  if (!have_header)
    throw ParseError("dimacs: missing 'p cnf' header");
  if (open_clause) {
    ++seen_clauses;
    if (normalize_clause(current))
      f.clauses.push_back(std::move(current));
  }
  if (seen_clauses != declared_clauses)
    throw ParseError("dimacs: header declares " +
                     std::to_string(declared_clauses) + " clauses, found " +
                     std::to_string(seen_clauses));
  return f;
}

CnfFormula parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

void write_dimacs(std::ostream &out, const CnfFormula &f) {
  out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for (const Clause &c : f.clauses) {
    for (Literal l : c)
      out << l.to_dimacs() << ' ';
    out << "0\n";
  }
}

std::string to_dimacs(const CnfFormula &f) {
  std::ostringstream out;
  write_dimacs(out, f);
  return out.str();
}

} // namespace smc
