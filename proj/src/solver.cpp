#include "smc/solver.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>

namespace smc {

std::string_view to_string(Status s) {
  switch (s) {
  case Status::Sat:
    return "SAT";
  case Status::Unsat:
    return "UNSAT";
  case Status::BudgetExhausted:
    return "BUDGET";
  }
  return "?";
}

bool Stats::same_counters(const Stats &o) const {
  return decisions == o.decisions && boolean_propagations == o.boolean_propagations &&
         boolean_conflicts == o.boolean_conflicts && prob_conflicts == o.prob_conflicts &&
         prob_entailments == o.prob_entailments && learned_clauses == o.learned_clauses &&
         restarts == o.restarts && max_decision_level == o.max_decision_level;
}

void write_stats(std::ostream &out, const Stats &s) {
  out << "c stat decisions " << s.decisions << '\n'
      << "c stat boolean_propagations " << s.boolean_propagations << '\n'
      << "c stat boolean_conflicts " << s.boolean_conflicts << '\n'
      << "c stat prob_conflicts " << s.prob_conflicts << '\n'
      << "c stat prob_entailments " << s.prob_entailments << '\n'
      << "c stat learned_clauses " << s.learned_clauses << '\n'
      << "c stat restarts " << s.restarts << '\n'
      << "c stat max_decision_level " << s.max_decision_level << '\n'
      << "c stat wall_time " << s.wall_time << '\n';
}

std::uint64_t luby(std::uint64_t i) {
  // Find the finite subsequence containing index i and its position in it.
  std::uint64_t size = 1, seq = 0;
  while (size < i + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  std::uint64_t x = i - 1;
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return std::uint64_t{1} << seq;
}

PredicateOutcome evaluate_predicate(DomainThreshold::Outcome truth, Value b_status) {
  if (truth == DomainThreshold::Outcome::Unknown)
    return PredicateOutcome::Undecided;
  const bool holds = truth == DomainThreshold::Outcome::True;
  if (b_status != Value::Unassigned && (b_status == Value::True) != holds)
    return PredicateOutcome::Conflict;
  return holds ? PredicateOutcome::EntailedTrue : PredicateOutcome::EntailedFalse;
}

Clause probabilistic_conflict_clause(const PredicateSpec &pred, const BoundState &bounds,
                                     std::optional<Literal> lead) {
  Clause out;
  if (lead)
    out.push_back(*lead);
  for (const BoundState::AssignedVar &a : bounds.assigned()) {
    auto it = std::find_if(pred.shared.begin(), pred.shared.end(),
                           [&](const SharedVar &s) { return s.circuit_var == a.var; });
    assert(it != pred.shared.end());
    out.push_back(Literal::make(it->formula_var, !a.value));
  }
  return out;
}

// ---------------------------------------------------------------------------

Solver::Solver(const SmcProblem &problem, SolverConfig config)
    : problem_(problem), config_(config), nvars_(problem.cnf.num_vars),
      assign_(problem.cnf.num_vars), reason_(nvars_, kNoReason), watches_(2 * nvars_),
      activity_(nvars_, 0.0), phase_(nvars_, false), heap_pos_(nvars_, -1),
      seen_(nvars_, 0) {
  problem.check();
  for (const Clause &c : problem.cnf.clauses) {
    Clause lits = c;
    if (!normalize_clause(lits))
      continue;
    if (lits.empty()) {
      empty_clause_ = true;
    } else if (lits.size() == 1) {
      units_.push_back(lits.front());
    } else {
      clauses_.push_back({std::move(lits), false});
      attach(static_cast<std::uint32_t>(clauses_.size() - 1));
    }
  }
  for (const PredicateSpec &p : problem.predicates) {
    std::vector<std::uint32_t> shared = p.shared_circuit_vars();
    PredicateState ps{&p, BoundState(*p.circuit, shared, config_.numeric_mode),
                      DomainThreshold(p.resolved_threshold(), config_.numeric_mode),
                      std::vector<std::int32_t>(nvars_, -1)};
    for (const SharedVar &s : p.shared)
      ps.circuit_var_of[s.formula_var] = static_cast<std::int32_t>(s.circuit_var);
    preds_.push_back(std::move(ps));
  }
  // Seeded tie-breaking of the initial variable order.
  if (config_.seed != 0) {
    std::mt19937_64 rng(config_.seed);
    std::uniform_real_distribution<double> jitter(0.0, 1e-6);
    for (double &a : activity_)
      a = jitter(rng);
  }
  for (Var v = 0; v < nvars_; ++v)
    heap_insert(v);
}

void Solver::attach(std::uint32_t cref) {
  const Clause &c = clauses_[cref].lits;
  watches_[c[0].code()].push_back({cref, c[1]});
  watches_[c[1].code()].push_back({cref, c[0]});
}

void Solver::record(const Clause &c) {
  if (config_.record_derived)
    derived_.push_back(c);
}

void Solver::enqueue(Literal lit, std::int32_t reason) {
  assign_.assign(lit);
  reason_[lit.var()] = reason;
}

std::span<const Literal> Solver::reason_lits(Var v) const {
  std::int32_t r = reason_[v];
  if (r >= 0)
    return clauses_[static_cast<std::size_t>(r)].lits;
  assert(r <= -2);
  return prob_reasons_[static_cast<std::size_t>(-2 - r)];
}

Bounds Solver::predicate_bounds(std::size_t j) const { return preds_[j].bounds.root_bounds(); }

bool Solver::predicate_decided(std::size_t j) const { return preds_[j].decided_level >= 0; }

bool Solver::initialize() {
  if (empty_clause_)
    return false;
  for (Literal u : units_) {
    Value v = assign_.value(u);
    if (v == Value::False)
      return false;
    if (v == Value::Unassigned)
      enqueue(u, kNoReason);
  }
  return true;
}

void Solver::assume(Literal lit) {
  assign_.new_decision_level();
  enqueue(lit, kNoReason);
  stats_.max_decision_level =
      std::max<std::uint64_t>(stats_.max_decision_level, assign_.decision_level());
}

std::optional<std::uint32_t> Solver::propagate_boolean() {
  auto trail = [&] { return assign_.trail(); };
  while (qhead_ < trail().size()) {
    Literal p = trail()[qhead_++];
    Literal false_lit = ~p;
    std::vector<Watcher> &ws = watches_[false_lit.code()];
    std::size_t i = 0, j = 0;
    while (i < ws.size()) {
      Watcher w = ws[i];
      if (assign_.is_true(w.blocker)) {
        ws[j++] = ws[i++];
        continue;
      }
      Clause &c = clauses_[w.cref].lits;
      if (c[0] == false_lit)
        std::swap(c[0], c[1]);
      ++i;
      Literal first = c[0];
      if (first != w.blocker && assign_.is_true(first)) {
        ws[j++] = {w.cref, first};
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.size(); ++k) {
        if (!assign_.is_false(c[k])) {
          std::swap(c[1], c[k]);
          watches_[c[1].code()].push_back({w.cref, first});
          moved = true;
          break;
        }
      }
      if (moved)
        continue;
      ws[j++] = {w.cref, first};
      if (assign_.is_false(first)) {
        while (i < ws.size())
          ws[j++] = ws[i++];
        ws.resize(j);
        qhead_ = trail().size();
        return w.cref;
      }
      enqueue(first, static_cast<std::int32_t>(w.cref));
      ++stats_.boolean_propagations;
    }
    ws.resize(j);
  }
  return std::nullopt;
}

DomainThreshold::Outcome Solver::predicate_truth(PredicateState &ps) const {
  const PredicateSpec &spec = *ps.spec;
  if (config_.ulw_enabled)
    return ps.threshold.entail(ps.bounds.root_bounds(), spec.cmp);
  std::vector<Value> cv(spec.circuit->num_vars(), Value::Unassigned);
  for (const SharedVar &s : spec.shared) {
    Value v = assign_.value(s.formula_var);
    if (v == Value::Unassigned)
      return DomainThreshold::Outcome::Unknown;
    cv[s.circuit_var] = v;
  }
  double m = marginal(*spec.circuit, cv, config_.numeric_mode);
  return ps.threshold.holds(m, spec.cmp) ? DomainThreshold::Outcome::True
                                         : DomainThreshold::Outcome::False;
}

Clause Solver::shared_negation(const PredicateState &ps, std::optional<Literal> lead) const {
  if (config_.ulw_enabled)
    return probabilistic_conflict_clause(*ps.spec, ps.bounds, lead);
  Clause out;
  if (lead)
    out.push_back(*lead);
  for (const SharedVar &s : ps.spec->shared)
    out.push_back(Literal::make(s.formula_var, !assign_.is_true(Literal::positive(s.formula_var))));
  return out;
}

std::optional<Solver::Conflict> Solver::propagate_predicates(bool &enqueued) {
  const std::uint32_t level = assign_.decision_level();
  for (std::size_t j = 0; j < preds_.size(); ++j) {
    PredicateState &ps = preds_[j];
    if (ps.decided_level >= 0)
      continue;
    // enqueue() below may grow the trail; re-read it each step.
    for (; ps.head < assign_.trail().size(); ++ps.head) {
      Literal lit = assign_.trail()[ps.head];
      std::int32_t cv = ps.circuit_var_of[lit.var()];
      if (cv < 0)
        continue;
      ps.dirty = true;
      if (config_.ulw_enabled)
        ps.bounds.assign(static_cast<std::uint32_t>(cv), lit.sign(), assign_.level(lit.var()));
    }
    if (!ps.dirty)
      continue;
    ps.dirty = false;
    DomainThreshold::Outcome truth = predicate_truth(ps);
    const std::optional<Literal> &b = ps.spec->b;
    Value b_status = b ? assign_.value(*b) : Value::True;
    PredicateOutcome out = evaluate_predicate(truth, b_status);
    if (out == PredicateOutcome::Undecided)
      continue;
    const bool holds = truth == DomainThreshold::Outcome::True;
    std::optional<Literal> implied;
    if (b)
      implied = holds ? *b : ~*b;
    if (out == PredicateOutcome::Conflict) {
      ++stats_.prob_conflicts;
      Conflict c{shared_negation(ps, implied), j};
      record(c.clause);
      return c;
    }
    ++stats_.prob_entailments;
    ps.decided_level = level;
    if (b_status == Value::Unassigned) {
      Clause reason = shared_negation(ps, implied);
      record(reason);
      prob_reasons_.push_back(std::move(reason));
      prob_reason_var_.push_back(implied->var());
      enqueue(*implied, -2 - static_cast<std::int32_t>(prob_reasons_.size() - 1));
      enqueued = true;
    }
  }
  return std::nullopt;
}

std::optional<Solver::Conflict> Solver::propagate() {
  for (;;) {
    if (auto cref = propagate_boolean()) {
      ++stats_.boolean_conflicts;
      return Conflict{clauses_[*cref].lits, std::nullopt};
    }
    bool enqueued = false;
    if (auto c = propagate_predicates(enqueued))
      return c;
    if (!enqueued)
      return std::nullopt;
  }
}

void Solver::backtrack(std::uint32_t level) {
  if (level >= assign_.decision_level())
    return;
  for (std::size_t i = assign_.trail().size(); i > assign_.level_start(level + 1); --i) {
    Literal l = assign_.trail()[i - 1];
    phase_[l.var()] = l.sign();
    reason_[l.var()] = kNoReason;
    heap_insert(l.var());
  }
  assign_.backtrack(level);
  const std::size_t size = assign_.trail().size();
  qhead_ = std::min(qhead_, size);
  while (!prob_reason_var_.empty() && !assign_.assigned(prob_reason_var_.back())) {
    prob_reasons_.pop_back();
    prob_reason_var_.pop_back();
  }
  for (PredicateState &ps : preds_) {
    if (ps.decided_level > static_cast<std::int64_t>(level))
      ps.decided_level = -1;
    ps.head = std::min(ps.head, size);
    ps.bounds.backtrack(level);
    ps.dirty = true;
  }
}

std::pair<Clause, std::uint32_t> Solver::analyze(std::span<const Literal> conflict) {
  const std::uint32_t current = assign_.decision_level();
  Clause learnt{Literal{}};
  int path = 0;
  std::optional<Literal> p;
  std::size_t index = assign_.trail().size();
  std::span<const Literal> clause = conflict;
  std::vector<Var> to_clear;

  for (;;) {
    for (Literal q : clause) {
      if (p && q == *p)
        continue;
      Var v = q.var();
      if (seen_[v] || assign_.level(v) == 0)
        continue;
      seen_[v] = 1;
      to_clear.push_back(v);
      bump(v);
      if (assign_.level(v) >= current)
        ++path;
      else
        learnt.push_back(q);
    }
    assert(path > 0);
    do {
      --index;
    } while (!seen_[assign_.trail()[index].var()]);
    p = assign_.trail()[index];
    seen_[p->var()] = 0;
    if (--path == 0)
      break;
    clause = reason_lits(p->var());
  }
  learnt[0] = ~*p;
  for (Var v : to_clear)
    seen_[v] = 0;
  decay();

  std::uint32_t backjump = 0;
  if (learnt.size() > 1) {
    std::size_t best = 1;
    for (std::size_t i = 2; i < learnt.size(); ++i)
      if (assign_.level(learnt[i].var()) > assign_.level(learnt[best].var()))
        best = i;
    std::swap(learnt[1], learnt[best]);
    backjump = assign_.level(learnt[1].var());
  }
  return {std::move(learnt), backjump};
}

void Solver::learn(Clause clause) {
  ++stats_.learned_clauses;
  record(clause);
  Literal asserting = clause.front();
  if (clause.size() == 1) {
    enqueue(asserting, kNoReason);
    return;
  }
  clauses_.push_back({std::move(clause), true});
  auto cref = static_cast<std::uint32_t>(clauses_.size() - 1);
  attach(cref);
  enqueue(asserting, static_cast<std::int32_t>(cref));
}

std::optional<Literal> Solver::decide() {
  while (!heap_.empty()) {
    Var v = heap_pop();
    if (!assign_.assigned(v))
      return Literal::make(v, phase_[v]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Activity heap (max-heap on activity, ties broken by lower index).

namespace {
bool before(const std::vector<double> &act, Var a, Var b) {
  return act[a] > act[b] || (act[a] == act[b] && a < b);
}
} // namespace

void Solver::heap_up(std::size_t i) {
  Var v = heap_[i];
  while (i > 0) {
    std::size_t parent = (i - 1) / 2;
    if (!before(activity_, v, heap_[parent]))
      break;
    heap_[i] = heap_[parent];
    heap_pos_[heap_[i]] = static_cast<std::int32_t>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int32_t>(i);
}

void Solver::heap_down(std::size_t i) {
  Var v = heap_[i];
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= heap_.size())
      break;
    if (child + 1 < heap_.size() && before(activity_, heap_[child + 1], heap_[child]))
      ++child;
    if (!before(activity_, heap_[child], v))
      break;
    heap_[i] = heap_[child];
    heap_pos_[heap_[i]] = static_cast<std::int32_t>(i);
    i = child;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int32_t>(i);
}

void Solver::heap_insert(Var v) {
  if (heap_pos_[v] >= 0)
    return;
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

Var Solver::heap_pop() {
  Var top = heap_.front();
  heap_pos_[top] = -1;
  Var last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    heap_[0] = last;
    heap_down(0);
  }
  return top;
}

void Solver::bump(Var v) {
  activity_[v] += var_inc_;
  if (activity_[v] > 1e100) {
    for (double &a : activity_)
      a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_pos_[v] >= 0)
    heap_up(static_cast<std::size_t>(heap_pos_[v]));
}

void Solver::decay() { var_inc_ /= config_.var_decay; }

// ---------------------------------------------------------------------------

SolveResult Solver::solve() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  SolveResult result;
  auto finish = [&](Status s) {
    result.status = s;
    stats_.wall_time = elapsed();
    result.stats = stats_;
    if (s == Status::Sat) {
      result.model.resize(nvars_);
      for (Var v = 0; v < nvars_; ++v)
        result.model[v] = assign_.value(v) == Value::True;
    }
    result.derived = derived_;
    return result;
  };

  if (!initialize())
    return finish(Status::Unsat);

  std::uint64_t restart_index = 1;
  std::uint64_t conflicts_since_restart = 0;
  std::uint64_t total_conflicts = 0;

  for (;;) {
    std::optional<Conflict> conflict = propagate();
    if (conflict) {
      ++total_conflicts;
      ++conflicts_since_restart;
      std::uint32_t max_level = 0;
      for (Literal l : conflict->clause)
        max_level = std::max(max_level, assign_.level(l.var()));
      if (max_level == 0)
        return finish(Status::Unsat);
      // A predicate conflict may only involve earlier levels.
      if (max_level < assign_.decision_level())
        backtrack(max_level);
      auto [learnt, level] = analyze(conflict->clause);
      backtrack(level);
      learn(std::move(learnt));
      if (config_.conflict_budget && total_conflicts >= *config_.conflict_budget)
        return finish(Status::BudgetExhausted);
      if (config_.time_budget_seconds && elapsed() > *config_.time_budget_seconds)
        return finish(Status::BudgetExhausted);
      continue;
    }
    if (config_.restart_base > 0 &&
        conflicts_since_restart >= luby(restart_index) * config_.restart_base) {
      ++stats_.restarts;
      ++restart_index;
      conflicts_since_restart = 0;
      backtrack(0);
      continue;
    }
    std::optional<Literal> next = decide();
    if (!next)
      return finish(Status::Sat);
    ++stats_.decisions;
    assume(*next);
  }
}

SolveResult solve(const SmcProblem &problem, const SolverConfig &config) {
  return Solver(problem, config).solve();
}

} // namespace smc
