// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include "smc/compile.hpp"
#include "smc/oracle.hpp"
#include "smc/problems.hpp"
#include "smc/solver.hpp"
#include "smc/sweep.hpp"
#include "support/generators.hpp"
#include "support/instances.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace smc;
using namespace smc::testing;

namespace {

constexpr double kExampleTol = 1e-12;     // absolute, example circuit values
constexpr double kRelTol = 1e-9;         // relative, bounds and compilation
constexpr double kSweepStep = 1e-2;      // supply sweep step
constexpr double kPartitionTol = 1e-9;   // normalised networks

constexpr int kBoundCircuits = 200;
constexpr int kAgreementInstances = 120;
constexpr int kCompileGraphs = 50;
constexpr int kCompileQueries = 200;
constexpr int kAblationInstances = 20;
constexpr int kAblationStrict = 5;

struct Verdict {
  bool pass;
  std::string detail;
};

// lo <= hi up to a relative tolerance.
bool le_tol(double lo, double hi) {
  return lo <= hi || rel_err(lo, hi) <= kRelTol;
}

Verdict example_circuit() {
  Circuit c = pc_example();
  std::vector<Value> joint{Value::True, Value::False, Value::True, Value::True};
  std::vector<Value> query{Value::Unassigned, Value::Unassigned, Value::True, Value::True};
  double j = evaluate_joint(c, joint), m = marginal(c, query);
  std::ostringstream d;
  d << "joint " << j << ", marginal " << m;
  return {std::abs(j - 0.1) <= kExampleTol && std::abs(m - 1.0) <= kExampleTol, d.str()};
}

Verdict motivating_example() {
  SmcProblem sat = motivating_problem(0.5), unsat = motivating_problem(1.5);
  SolveResult a = solve(sat), b = solve(unsat);
  OracleResult oa = brute_solve(sat), ob = brute_solve(unsat);
  bool ok = a.status == Status::Sat && a.model[5] && !a.model[4] && verify(sat, a.model).pass &&
            b.status == Status::Unsat && oa.status == Status::Sat &&
            ob.status == Status::Unsat &&
            std::find(oa.models.begin(), oa.models.end(), a.model) != oa.models.end();
  std::ostringstream d;
  d << "q=0.5 " << to_string(a.status) << " (b1=" << a.model[4] << ", b2=" << a.model[5]
    << "), q=1.5 " << to_string(b.status) << ", oracle " << oa.model_count << "/"
    << ob.model_count << " models";
  return {ok, d.str()};
}

Verdict bound_soundness() {
  std::mt19937_64 rng(1001);
  std::size_t checks = 0, failures = 0;
  for (int i = 0; i < kBoundCircuits; ++i) {
    auto nv = std::uniform_int_distribution<std::uint32_t>(1, 10)(rng);
    // The generator's node budget is soft; resample to stay within 60.
    Circuit c = CircuitGenerator(rng, nv, 60).make();
    while (c.size() > 60)
      c = CircuitGenerator(rng, nv, 60).make();
    if (!validate(c).ok()) {
      ++failures;
      continue;
    }
    for (int path = 0; path < 3; ++path) {
      std::vector<std::uint32_t> vars(nv);
      std::iota(vars.begin(), vars.end(), 0U);
      std::shuffle(vars.begin(), vars.end(), rng);
      // The last path shares every variable so the full assignment is exact.
      std::size_t ns = path == 2 ? nv : std::uniform_int_distribution<std::size_t>(0, nv)(rng);
      std::vector<std::uint32_t> shared(vars.begin(), vars.begin() + static_cast<long>(ns));
      BoundState s(c, shared);
      std::vector<Value> partial(nv, Value::Unassigned);
      auto check = [&] {
        Bounds b = s.root_bounds();
        MinMax mm = brute_minmax(c, shared, partial);
        ++checks;
        if (!(le_tol(b.lb, mm.min) && mm.min <= mm.max && le_tol(mm.max, b.ub)))
          ++failures;
      };
      check();
      for (std::size_t k = 0; k < ns; ++k) {
        bool val = std::bernoulli_distribution(0.5)(rng);
        s.assign(shared[k], val, static_cast<std::uint32_t>(k + 1));
        partial[shared[k]] = to_value(val);
        check();
      }
      Bounds b = s.root_bounds();
      double exact = brute_marginal(c, partial);
      if (rel_err(b.ub, exact) > kRelTol || rel_err(b.lb, exact) > kRelTol)
        ++failures;
    }
  }
  std::ostringstream d;
  d << kBoundCircuits << " circuits, " << checks << " partial assignments, " << failures
    << " violations";
  return {failures == 0, d.str()};
}

CnfFormula random_generator_cnf(std::mt19937_64 &rng, std::uint32_t max_vars) {
  for (;;) {
    CnfFormula f;
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0:
      f = gen_kcolor({1, std::uniform_int_distribution<std::uint32_t>(2, 4)(rng), 3}, rng());
      break;
    case 1:
      f = gen_kcolor({2, 2, std::uniform_int_distribution<std::uint32_t>(2, 3)(rng)}, rng());
      break;
    case 2: {
      GraphSpec g{3, {}};
      for (std::uint32_t u = 0; u < 3; ++u)
        for (std::uint32_t v = u + 1; v < 3; ++v)
          if (std::bernoulli_distribution(0.7)(rng))
            g.edges.emplace_back(u, v);
      f = encode_hamiltonian_path(g);
      break;
    }
    case 3: {
      std::vector<std::vector<std::uint32_t>> nets{{2, 2}, {2, 3}, {3, 3}, {2, 2, 2}, {2, 1, 2}};
      auto layers = nets[std::uniform_int_distribution<std::size_t>(0, nets.size() - 1)(rng)];
      f = encode_supply_chain(LayeredNetwork(layers), 1, 1);
      break;
    }
    default: {
      std::vector<Var> vars(std::uniform_int_distribution<std::uint32_t>(3, 8)(rng));
      std::iota(vars.begin(), vars.end(), Var{0});
      f.num_vars = static_cast<std::uint32_t>(vars.size());
      auto k = std::uniform_int_distribution<std::uint32_t>(0, f.num_vars)(rng);
      f.clauses = exactly_k(vars, k);
    }
    }
    if (f.num_vars <= max_vars)
      return f;
  }
}

Verdict solver_oracle_agreement() {
  std::mt19937_64 rng(2002);
  const double fractions[] = {1e-3, 1e-1, 0.5, 0.9};
  const Comparator cmps[] = {Comparator::GE, Comparator::GE, Comparator::LE, Comparator::GT};
  int agree = 0, sat = 0, unverified = 0;
  for (int i = 0; i < kAgreementInstances; ++i) {
    bool soft = std::bernoulli_distribution(0.5)(rng);
    std::uint32_t preds = std::uniform_int_distribution<std::uint32_t>(1, 2)(rng);
    CnfFormula cnf = random_generator_cnf(rng, soft ? 12 - preds : 12);
    RandomPredicateOptions o;
    o.num_predicates = preds;
    o.bn_vars = std::uniform_int_distribution<std::uint32_t>(2, 10)(rng);
    o.cmp = cmps[std::uniform_int_distribution<int>(0, 3)(rng)];
    o.fraction = fractions[std::uniform_int_distribution<int>(0, 3)(rng)];
    o.soft = soft;
    o.seed = rng();
    SmcProblem p = attach_random_predicates(std::move(cnf), o);
    OracleResult truth = brute_solve(p, OracleOptions{.max_models = 0});
    SolveResult r = solve(p);
    agree += r.status == truth.status;
    if (r.status == Status::Sat) {
      ++sat;
      unverified += !verify(p, r.model).pass;
    }
  }
  std::ostringstream d;
  d << agree << "/" << kAgreementInstances << " statuses agree, " << sat << " SAT, "
    << unverified << " unverified models";
  return {agree == kAgreementInstances && unverified == 0, d.str()};
}

Verdict compilation_equivalence() {
  std::mt19937_64 rng(3003);
  int invalid = 0;
  std::size_t queries = 0, mismatches = 0;
  double worst = 0.0;
  for (int g = 0; g < kCompileGraphs; ++g) {
    auto n = std::uniform_int_distribution<std::uint32_t>(1, 12)(rng);
    FactorGraph fg = g % 2 == 0 ? random_factor_graph(rng, n, n + 2)
                                : gen_random_bn(n, 3, 0.5, rng());
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    std::shuffle(order.begin(), order.end(), rng);
    Circuit c = compile(fg, order);
    if (!validate(c).ok())
      ++invalid;
    for (int q = 0; q < kCompileQueries; ++q) {
      std::vector<Value> partial(n);
      for (Value &v : partial) {
        int r = std::uniform_int_distribution<int>(0, 2)(rng);
        v = r == 0 ? Value::Unassigned : to_value(r == 1);
      }
      double a = marginal(c, partial), b = enumerate_marginal(fg, partial);
      worst = std::max(worst, rel_err(a, b));
      ++queries;
      mismatches += rel_err(a, b) > kRelTol;
    }
  }
  std::ostringstream d;
  d << kCompileGraphs << " graphs, " << queries << " queries, " << mismatches
    << " mismatches (worst rel " << worst << "), " << invalid << " invalid circuits";
  return {invalid == 0 && mismatches == 0, d.str()};
}

Verdict ulw_ablation() {
  int strict = 0, violations = 0, status_diffs = 0;
  std::uint64_t dec_on = 0, dec_off = 0, conf_on = 0, conf_off = 0;
  const GridSpec grids[] = {{2, 2, 3}, {2, 3, 3}, {3, 3, 3}, {3, 4, 3}, {4, 4, 3}};
  for (int i = 0; i < kAblationInstances; ++i) {
    RandomPredicateOptions o;
    o.num_predicates = 1 + i % 2;
    o.bn_vars = 8 + i % 3;
    o.fraction = 1.05 + 0.05 * (i % 4); // above the partition value
    o.seed = 4000 + static_cast<std::uint64_t>(i);
    SmcProblem p = attach_random_predicates(gen_kcolor(grids[i % 5]), o);
    SolveResult on = solve(p), off = solve(p, SolverConfig{.ulw_enabled = false});
    status_diffs += on.status != off.status || on.status != Status::Unsat;
    bool le = on.stats.decisions <= off.stats.decisions &&
              on.stats.conflicts() <= off.stats.conflicts();
    violations += !le;
    strict += le && (on.stats.decisions < off.stats.decisions ||
                     on.stats.conflicts() < off.stats.conflicts());
    dec_on += on.stats.decisions;
    dec_off += off.stats.decisions;
    conf_on += on.stats.conflicts();
    conf_off += off.stats.conflicts();
  }
  std::ostringstream d;
  d << "decisions " << dec_on << " vs " << dec_off << ", conflicts " << conf_on << " vs "
    << conf_off << ", strictly fewer on " << strict << "/" << kAblationInstances
    << ", status mismatches " << status_diffs;
  return {violations == 0 && strict >= kAblationStrict && status_diffs == 0, d.str()};
}

Verdict encoder_counts() {
  auto count = [](const CnfFormula &f) {
    return brute_solve(SmcProblem{f, {}}, OracleOptions{.max_models = 0}).model_count;
  };
  std::vector<Var> four{0, 1, 2, 3};
  std::uint64_t grid = count(gen_kcolor({2, 2, 3}));
  std::uint64_t p3 = count(encode_hamiltonian_path({3, {{0, 1}, {1, 2}}}));
  std::uint64_t k3 = count(encode_hamiltonian_path({3, {{0, 1}, {1, 2}, {0, 2}}}));
  std::uint64_t two_of_four = count(CnfFormula{4, exactly_k(four, 2)});
  std::ostringstream d;
  d << "grid " << grid << ", P3 " << p3 << ", K3 " << k3 << ", exactly-2-of-4 " << two_of_four;
  return {grid == 18 && p3 == 2 && k3 == 6 && two_of_four == 6, d.str()};
}

Verdict sweep_correctness() {
  SupplyInstance inst{.layers = {2, 2, 2}, .k_up = 1, .k_down = 1, .seed = 8008};
  SmcProblem p = build_supply_smc(inst);
  SweepResult r = sweep(p, {.predicate = 0, .step = kSweepStep, .lo = 0.0, .hi = 1.0});
  // Oracle: exact success probability of every feasible trade set.
  SmcProblem plans{p.cnf, {}};
  OracleResult all = brute_solve(plans);
  double optimum = -1.0;
  for (const auto &m : all.models)
    optimum = std::max(optimum, verify(p, m, NumericMode::Linear, MarginalPath::Enumeration)
                                    .predicates[0]
                                    .marginal);
  if (!r.best_threshold)
    return {false, "no feasible threshold"};
  double got = verify(p, r.best_model, NumericMode::Linear, MarginalPath::Enumeration)
                   .predicates[0]
                   .marginal;
  std::size_t flips = count_flips(r.trace);
  std::ostringstream d;
  d << all.model_count << " plans, best plan " << got << ", optimum " << optimum
    << ", best threshold " << *r.best_threshold << ", flips " << flips;
  return {std::abs(optimum - got) < kSweepStep && flips == 1 && got >= *r.best_threshold, d.str()};
}

Verdict phase_transition() {
  RandomPredicateOptions o;
  o.num_predicates = 1;
  o.bn_vars = 10;
  o.seed = 9009;
  SmcProblem p = attach_random_predicates(gen_kcolor({3, 3, 3}), o);
  SweepOptions s{.predicate = 0, .step = 0.005, .lo = 0.0, .hi = 0.2, .full_range = true};
  SweepResult on = sweep(p, s);
  s.solver.ulw_enabled = false;
  SweepResult off = sweep(p, s);
  bool same = on.trace.size() == off.trace.size();
  bool le = true;
  std::uint64_t unsat_on = 0, unsat_off = 0;
  double t_on = 0.0, t_off = 0.0;
  for (std::size_t i = 0; same && i < on.trace.size(); ++i) {
    same = on.trace[i].status == off.trace[i].status;
    t_on += on.trace[i].stats.wall_time;
    t_off += off.trace[i].stats.wall_time;
    if (on.trace[i].status == Status::Unsat) {
      unsat_on += on.trace[i].stats.conflicts();
      unsat_off += off.trace[i].stats.conflicts();
      le = le && on.trace[i].stats.conflicts() <= off.trace[i].stats.conflicts();
    }
  }
  std::size_t flips = count_flips(on.trace);
  std::ostringstream d;
  d << "flip at q=" << (on.best_threshold ? *on.best_threshold : -1.0) << " (flips " << flips
    << "), UNSAT-region conflicts " << unsat_on << " vs " << unsat_off << ", time "
    << t_on * 1e3 << " ms vs " << t_off * 1e3 << " ms";
  bool starts_sat = !on.trace.empty() && on.trace.front().status == Status::Sat;
  bool ends_unsat = !on.trace.empty() && on.trace.back().status == Status::Unsat;
  return {same && le && flips == 1 && starts_sat && ends_unsat, d.str()};
}

} // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {"example circuit values", example_circuit},
      {"motivating example end to end", motivating_example},
      {"bound soundness and tightness", bound_soundness},
      {"solver and oracle agree", solver_oracle_agreement},
      {"compilation equivalence", compilation_equivalence},
      {"bound propagation ablation", ulw_ablation},
      {"encoder model counts", encoder_counts},
      {"supply sweep best plan", sweep_correctness},
      {"phase transition", phase_transition},
  };
  int failed = 0, index = 0;
  for (const Criterion &c : criteria) {
    ++index;
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception &e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s (%s; %.2fs)\n", index, v.pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed;
}
