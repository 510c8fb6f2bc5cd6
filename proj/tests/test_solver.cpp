#include "smc/solver.hpp"

#include "smc/oracle.hpp"
#include "support/instances.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace smc;
using namespace smc::testing;

namespace {

bool model_has(const std::vector<bool> &model, int d) {
  Literal l = lit(d);
  return model[l.var()] == l.sign();
}

bool satisfies(const std::vector<bool> &model, const Clause &c) {
  for (Literal l : c)
    if (model[l.var()] == l.sign())
      return true;
  return false;
}

} // namespace

TEST(Solve, MotivatingExampleSat) {
  SmcProblem p = motivating_problem(0.5);
  SolveResult r = solve(p);
  ASSERT_EQ(r.status, Status::Sat);
  EXPECT_TRUE(model_has(r.model, 6));
  EXPECT_TRUE(model_has(r.model, -5));
  EXPECT_TRUE(model_has(r.model, 3));
  EXPECT_TRUE(model_has(r.model, 4));
  VerificationReport v = verify(p, r.model);
  EXPECT_TRUE(v.pass);
  EXPECT_NEAR(v.predicates[1].marginal, 1.0, 1e-12);
}

TEST(Solve, MotivatingExampleUnsatAboveOne) {
  SmcProblem p = motivating_problem(1.5);
  EXPECT_EQ(solve(p).status, Status::Unsat);
  EXPECT_EQ(solve(p, SolverConfig{.ulw_enabled = false}).status, Status::Unsat);
  EXPECT_EQ(brute_solve(p).status, Status::Unsat);
}

TEST(Solve, PlainSat) {
  SmcProblem p;
  p.cnf = CnfFormula{1, {{lit(1)}, {lit(-1)}}};
  EXPECT_EQ(solve(p).status, Status::Unsat);
  p.cnf = CnfFormula{3, {{lit(1), lit(2)}, {lit(-1), lit(3)}, {lit(-3), lit(-2)}}};
  SolveResult r = solve(p);
  ASSERT_EQ(r.status, Status::Sat);
  for (const Clause &c : p.cnf.clauses)
    EXPECT_TRUE(satisfies(r.model, c));
  p.cnf = CnfFormula{1, {{}}};
  EXPECT_EQ(solve(p).status, Status::Unsat);
}

TEST(Propagate, UnitClause) {
  SmcProblem p;
  p.cnf = CnfFormula{2, {{lit(-1), lit(2)}}};
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  EXPECT_FALSE(s.propagate());
  s.assume(lit(1));
  EXPECT_FALSE(s.propagate());
  EXPECT_TRUE(s.assignment().is_true(lit(2)));
}

TEST(Propagate, EarlyProbabilisticConflict) {
  // Route 1 alone: b1 (var 5) <=> marginal over x3,x4 >= 0.5.
  SmcProblem p = motivating_problem(0.5);
  p.cnf.clauses.clear();
  p.predicates.resize(1);
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  EXPECT_FALSE(s.propagate());
  s.assume(lit(5));
  EXPECT_FALSE(s.propagate());
  EXPECT_EQ(s.predicate_bounds(0), (Bounds{1.0, 0.0}));
  s.assume(lit(1));
  auto conflict = s.propagate();
  ASSERT_TRUE(conflict);
  EXPECT_EQ(conflict->predicate, std::optional<std::size_t>{0});
  EXPECT_NEAR(s.predicate_bounds(0).ub, 0.2, 1e-15);
  EXPECT_FALSE(s.assignment().assigned(lit(2).var()));
  EXPECT_EQ(conflict->clause, (Clause{lit(-5), lit(-1)}));
}

TEST(Propagate, NoUlwWaitsForFullAssignment) {
  SmcProblem p = motivating_problem(0.5);
  p.cnf.clauses.clear();
  p.predicates.resize(1);
  Solver s(p, SolverConfig{.ulw_enabled = false});
  ASSERT_TRUE(s.initialize());
  s.assume(lit(5));
  EXPECT_FALSE(s.propagate());
  s.assume(lit(1));
  EXPECT_FALSE(s.propagate());
  s.assume(lit(2));
  auto conflict = s.propagate();
  ASSERT_TRUE(conflict);
  EXPECT_EQ(conflict->clause, (Clause{lit(-5), lit(-1), lit(-2)}));
}

TEST(Propagate, PredicateWithoutSharedVarsDecidedAtLevelZero) {
  SmcProblem p = motivating_problem(0.5);
  p.cnf.clauses.clear();
  p.predicates.resize(1);
  p.predicates[0].shared.clear();
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  EXPECT_FALSE(s.propagate());
  EXPECT_TRUE(s.predicate_decided(0));
  EXPECT_TRUE(s.assignment().is_true(lit(5))); // partition 1.0 >= 0.5
  EXPECT_EQ(s.assignment().level(lit(5).var()), 0U);
}

TEST(Propagate, EntailedPredicatePropagatesB) {
  SmcProblem p = motivating_problem(0.3);
  p.cnf.clauses.clear();
  p.predicates.resize(1);
  // x1 = T, x2 = F gives exactly 0.1, which clears q = 0.05.
  p.predicates[0].threshold = 0.05;
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  EXPECT_FALSE(s.propagate());
  EXPECT_FALSE(s.assignment().assigned(lit(5).var()));
  s.assume(lit(1));
  EXPECT_FALSE(s.propagate());
  EXPECT_FALSE(s.assignment().assigned(lit(5).var()));
  s.assume(lit(-2));
  EXPECT_FALSE(s.propagate());
  EXPECT_NEAR(s.predicate_bounds(0).lb, 0.1, 1e-15);
  EXPECT_TRUE(s.assignment().is_true(lit(5)));
  EXPECT_TRUE(s.predicate_decided(0));
  s.backtrack(0);
  EXPECT_FALSE(s.predicate_decided(0));
  EXPECT_FALSE(s.assignment().assigned(lit(5).var()));
}

TEST(EvaluatePredicate, Rules) {
  DomainThreshold q(0.5, NumericMode::Linear);
  auto truth = [&](double ub, double lb) { return q.entail({ub, lb}, Comparator::GE); };
  EXPECT_EQ(evaluate_predicate(truth(0.7, 0.6), Value::Unassigned),
            PredicateOutcome::EntailedTrue);
  EXPECT_EQ(evaluate_predicate(truth(0.2, 0.0), Value::True), PredicateOutcome::Conflict);
  EXPECT_EQ(evaluate_predicate(truth(1.0, 0.0), Value::True), PredicateOutcome::Undecided);
  EXPECT_EQ(evaluate_predicate(truth(0.2, 0.0), Value::False),
            PredicateOutcome::EntailedFalse);
  EXPECT_EQ(evaluate_predicate(truth(0.9, 0.6), Value::False), PredicateOutcome::Conflict);
}

TEST(EvaluatePredicate, Strictness) {
  DomainThreshold q(0.5, NumericMode::Linear);
  Bounds exact{0.5, 0.5};
  using O = DomainThreshold::Outcome;
  EXPECT_EQ(q.entail(exact, Comparator::GE), O::True);
  EXPECT_EQ(q.entail(exact, Comparator::GT), O::False);
  EXPECT_EQ(q.entail(exact, Comparator::LE), O::True);
  EXPECT_EQ(q.entail(exact, Comparator::LT), O::False);
  EXPECT_EQ(q.entail({0.6, 0.5}, Comparator::GT), O::Unknown);
  EXPECT_EQ(q.entail({0.5, 0.4}, Comparator::LT), O::Unknown);
  EXPECT_EQ(q.entail({0.5, 0.4}, Comparator::LE), O::True);
  DomainThreshold neg(-1.0, NumericMode::Log);
  EXPECT_EQ(neg.entail({-std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()},
                       Comparator::GT),
            O::True);
}

TEST(ConflictClause, HardPredicateOmitsB) {
  Circuit c = pc_example();
  PredicateSpec pred{std::make_shared<const Circuit>(c), {{0, 0}, {1, 1}}};
  BoundState s(*pred.circuit, pred.shared_circuit_vars());
  s.assign(0, true, 1);
  s.assign(1, false, 2);
  EXPECT_EQ(probabilistic_conflict_clause(pred, s, std::nullopt),
            (Clause{lit(-1), lit(2)}));
  BoundState fresh(*pred.circuit, pred.shared_circuit_vars());
  EXPECT_TRUE(probabilistic_conflict_clause(pred, fresh, std::nullopt).empty());
}

TEST(ConflictClause, ViolatedHardPredicateAtLevelZeroIsUnsat) {
  SmcProblem p = motivating_problem(2.0);
  p.cnf.clauses.clear();
  p.predicates.resize(1);
  p.predicates[0].b.reset();
  p.predicates[0].shared.clear();
  SolveResult r = solve(p);
  EXPECT_EQ(r.status, Status::Unsat);
  EXPECT_EQ(r.stats.decisions, 0U);
  EXPECT_EQ(r.stats.prob_conflicts, 1U);
}

TEST(Analyze, TwoLevelConflict) {
  // Level 1: x1. Level 2: x2 -> x3 (-1 -2 3), x4 (-2 4); conflict (-3 -4 -1).
  SmcProblem p;
  p.cnf = CnfFormula{4, {{lit(-1), lit(-2), lit(3)}, {lit(-2), lit(4)},
                         {lit(-3), lit(-4), lit(-1)}}};
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  s.assume(lit(1));
  ASSERT_FALSE(s.propagate());
  s.assume(lit(2));
  auto conflict = s.propagate();
  ASSERT_TRUE(conflict);
  auto [learnt, level] = s.analyze(conflict->clause);
  int at_conflict_level = 0;
  for (Literal l : learnt)
    at_conflict_level += s.assignment().level(l.var()) == 2;
  EXPECT_EQ(at_conflict_level, 1);
  EXPECT_EQ(learnt.front(), lit(-2));
  EXPECT_EQ(level, 1U);
  s.backtrack(level);
  s.learn(learnt);
  EXPECT_FALSE(s.propagate());
  EXPECT_TRUE(s.assignment().is_true(lit(-2)));
}

TEST(Analyze, UnitConflictAtLevelZero) {
  SmcProblem p;
  p.cnf = CnfFormula{1, {{lit(1)}, {lit(-1)}}};
  Solver s(p);
  EXPECT_FALSE(s.initialize());
}

TEST(Decide, PicksUnassignedAndLastVariable) {
  SmcProblem p;
  p.cnf = CnfFormula{3, {}};
  Solver s(p);
  ASSERT_TRUE(s.initialize());
  auto first = s.decide();
  ASSERT_TRUE(first);
  EXPECT_FALSE(s.assignment().assigned(first->var()));
  s.assume(Literal::positive(0));
  s.assume(Literal::positive(1));
  auto last = s.decide();
  ASSERT_TRUE(last);
  EXPECT_EQ(last->var(), 2U);
  s.assume(*last);
  EXPECT_FALSE(s.decide());
}

TEST(Solve, DeterministicForFixedSeed) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20; ++i) {
    SmcProblem p = random_smc(rng);
    for (std::uint64_t seed : {0ULL, 7ULL}) {
      SolverConfig cfg{.seed = seed};
      SolveResult a = solve(p, cfg), b = solve(p, cfg);
      EXPECT_EQ(a.status, b.status);
      EXPECT_EQ(a.model, b.model);
      EXPECT_TRUE(a.stats.same_counters(b.stats));
    }
  }
}

TEST(Solve, BudgetExhausted) {
  // Pigeonhole 5 into 4 needs many conflicts.
  SmcProblem p;
  const int holes = 4, pigeons = 5;
  p.cnf.num_vars = holes * pigeons;
  auto x = [&](int i, int h) { return Literal::positive(static_cast<Var>(i * holes + h)); };
  for (int i = 0; i < pigeons; ++i) {
    Clause c;
    for (int h = 0; h < holes; ++h)
      c.push_back(x(i, h));
    p.cnf.clauses.push_back(c);
  }
  for (int h = 0; h < holes; ++h)
    for (int i = 0; i < pigeons; ++i)
      for (int j = i + 1; j < pigeons; ++j)
        p.cnf.clauses.push_back({~x(i, h), ~x(j, h)});
  EXPECT_EQ(solve(p, SolverConfig{.conflict_budget = 3}).status, Status::BudgetExhausted);
  EXPECT_EQ(solve(p).status, Status::Unsat);
}

TEST(Solve, AgreesWithOracleAndLearnsSoundClauses) {
  std::mt19937_64 rng(2024);
  int sat = 0, unsat = 0;
  for (int i = 0; i < 150; ++i) {
    SmcProblem p = random_smc(rng);
    OracleResult truth = brute_solve(p);
    for (bool ulw : {true, false}) {
      SolverConfig cfg{.ulw_enabled = ulw, .restart_base = 5, .record_derived = true};
      SolveResult r = solve(p, cfg);
      ASSERT_EQ(r.status, truth.status) << "instance " << i << " ulw " << ulw;
      if (r.status == Status::Sat)
        EXPECT_TRUE(verify(p, r.model).pass);
      for (const Clause &c : r.derived)
        for (const auto &model : truth.models)
          ASSERT_TRUE(satisfies(model, c)) << "unsound derived clause, instance " << i;
    }
    (truth.status == Status::Sat ? sat : unsat)++;
  }
  EXPECT_GT(sat, 20);
  EXPECT_GT(unsat, 20);
}

TEST(Solve, LogModeAgreesWithOracle) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 60; ++i) {
    SmcProblem p = random_smc(rng);
    OracleResult truth = brute_solve(p, OracleOptions{.mode = NumericMode::Log});
    SolveResult r = solve(p, SolverConfig{.numeric_mode = NumericMode::Log});
    ASSERT_EQ(r.status, truth.status) << i;
    if (r.status == Status::Sat)
      EXPECT_TRUE(verify(p, r.model, NumericMode::Log).pass);
  }
}

TEST(Luby, Prefix) {
  std::vector<std::uint64_t> seq;
  for (std::uint64_t i = 1; i <= 15; ++i)
    seq.push_back(luby(i));
  EXPECT_EQ(seq, (std::vector<std::uint64_t>{1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8}));
}
