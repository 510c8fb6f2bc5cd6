// smc: command-line driver for the SMC solver and its tooling.

#include "smc/compile.hpp"
#include "smc/manifest.hpp"
#include "smc/oracle.hpp"
#include "smc/problems.hpp"
#include "smc/solver.hpp"
#include "smc/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace smc;

namespace {

constexpr int kExitSat = 10;
constexpr int kExitUnsat = 20;
constexpr int kExitBudget = 30;
constexpr int kExitError = 1;
constexpr int kExitVerifyFail = 2;

int exit_code(Status s) {
  switch (s) {
  case Status::Sat:
    return kExitSat;
  case Status::Unsat:
    return kExitUnsat;
  case Status::BudgetExhausted:
    return kExitBudget;
  }
  return kExitError;
}

NumericMode parse_mode(const std::string &s) {
  return s == "log" ? NumericMode::Log : NumericMode::Linear;
}

MarginalPath parse_path(const std::string &s) {
  return s == "enumeration" ? MarginalPath::Enumeration : MarginalPath::Circuit;
}

// Writes to the file, or stdout when the path is empty.
void emit(const std::string &path, const std::string &text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw std::runtime_error("cannot write " + path);
}

std::vector<std::uint32_t> parse_list(const std::string &text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    std::size_t used = 0;
    unsigned long v = std::stoul(item, &used);
    if (used != item.size())
      throw std::invalid_argument("bad list entry `" + item + "`");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

// `var=value` pairs, value 1/0 or T/F; variables are 0-based circuit vars.
std::vector<Value> parse_assignment(const std::string &text, std::uint32_t num_vars) {
  std::vector<Value> a(num_vars, Value::Unassigned);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected var=value, got `" + item + "`");
    std::uint32_t v = static_cast<std::uint32_t>(std::stoul(item.substr(0, eq)));
    std::string val = item.substr(eq + 1);
    if (v >= num_vars)
      throw std::invalid_argument("variable " + std::to_string(v) + " out of range");
    if (val == "1" || val == "T" || val == "t")
      a[v] = Value::True;
    else if (val == "0" || val == "F" || val == "f")
      a[v] = Value::False;
    else
      throw std::invalid_argument("bad value `" + val + "`");
  }
  return a;
}

struct SolverFlags {
  bool no_ulw = false;
  std::string mode = "linear";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> budget_conflicts;
  std::optional<double> budget_seconds;

  void add(CLI::App *cmd) {
    cmd->add_flag("--no-ulw", no_ulw, "Check predicates only once all shared variables are set");
    cmd->add_option("--mode", mode, "Numeric mode")->check(CLI::IsMember({"linear", "log"}));
    cmd->add_option("--seed", seed, "Seed for initial activity jitter");
    cmd->add_option("--budget-conflicts", budget_conflicts, "Stop after this many conflicts");
    cmd->add_option("--budget-seconds", budget_seconds, "Stop after this much wall time");
  }

  SolverConfig config() const {
    SolverConfig c;
    c.ulw_enabled = !no_ulw;
    c.numeric_mode = parse_mode(mode);
    c.seed = seed;
    c.conflict_budget = budget_conflicts;
    c.time_budget_seconds = budget_seconds;
    return c;
  }
};

int run_solve(const std::string &manifest, const SolverFlags &flags, bool stats,
              const std::string &out) {
  SmcProblem p = load_manifest(manifest);
  SolveResult r = solve(p, flags.config());
  std::ostringstream text;
  write_model(text, r.status, r.model);
  if (stats)
    write_stats(text, r.stats);
  emit(out, text.str());
  return exit_code(r.status);
}

int run_verify(const std::string &manifest, const std::string &model_path,
               const std::string &mode, const std::string &path) {
  SmcProblem p = load_manifest(manifest);
  std::ifstream in(model_path);
  if (!in)
    throw std::runtime_error("cannot open " + model_path);
  ModelFile mf = parse_model(in, p.cnf.num_vars);
  if (mf.status != Status::Sat)
    throw std::runtime_error("model file carries no assignment");
  VerificationReport v = verify(p, mf.model, parse_mode(mode), parse_path(path));
  for (std::size_t i = 0; i < p.cnf.clauses.size(); ++i)
    if (std::find(v.violated_clauses.begin(), v.violated_clauses.end(), i) !=
        v.violated_clauses.end())
      std::cout << "clause " << i + 1 << " violated\n";
  std::cout << "clauses " << p.cnf.clauses.size() - v.violated_clauses.size() << "/"
            << p.cnf.clauses.size() << " satisfied\n";
  auto precision = std::cout.precision(17);
  for (std::size_t j = 0; j < v.predicates.size(); ++j) {
    const PredicateCheck &c = v.predicates[j];
    std::cout << "predicate " << j << " marginal " << c.marginal << ' '
              << to_string(p.predicates[j].cmp) << ' ' << c.threshold << ' '
              << (c.holds ? "holds" : "fails");
    if (c.b_value)
      std::cout << " b=" << (*c.b_value ? "true" : "false");
    std::cout << (c.consistent ? " ok" : " VIOLATED") << '\n';
  }
  std::cout.precision(precision);
  std::cout << (v.pass ? "PASS" : "FAIL") << '\n';
  return v.pass ? 0 : kExitVerifyFail;
}

int run_oracle(const std::string &manifest, std::uint32_t cap, const std::string &mode,
               const std::string &path) {
  SmcProblem p = load_manifest(manifest);
  OracleResult r =
      brute_solve(p, OracleOptions{cap, parse_mode(mode), parse_path(path), /*max_models=*/1});
  std::cout << "c models " << r.model_count << '\n';
  write_model(std::cout, r.status, r.models.empty() ? std::vector<bool>{} : r.models[0]);
  return exit_code(r.status);
}

struct BenchRow {
  std::string instance;
  std::string q;
  Status status = Status::Unsat;
  Stats stats;
};

int run_bench(const std::string &suite, bool without_ulw, const std::string &csv,
              unsigned jobs, const SolverFlags &flags) {
  std::vector<fs::path> manifests;
  for (const auto &entry : fs::directory_iterator(suite))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());

  SolverConfig cfg = flags.config();
  cfg.ulw_enabled = !without_ulw;
  std::vector<BenchRow> rows(manifests.size());
  std::vector<std::string> errors(manifests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < manifests.size();) {
      try {
        SmcProblem p = load_manifest(manifests[i]);
        SolveResult r = solve(p, cfg);
        std::ostringstream q;
        if (!p.predicates.empty())
          q << std::setprecision(10) << p.predicates[0].threshold;
        rows[i] = {manifests[i].stem().string(), q.str(), r.status, r.stats};
      } catch (const std::exception &e) {
        errors[i] = manifests[i].string() + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::max(1U, jobs); ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  for (const std::string &e : errors)
    if (!e.empty())
      throw std::runtime_error(e);

  std::ostringstream out;
  out << "instance,q,status,decisions,propagations,bool_conflicts,prob_conflicts,learned,"
         "restarts,wall_ms\n";
  for (const BenchRow &r : rows)
    out << r.instance << ',' << r.q << ',' << to_string(r.status) << ',' << r.stats.decisions
        << ',' << r.stats.boolean_propagations << ',' << r.stats.boolean_conflicts << ','
        << r.stats.prob_conflicts << ',' << r.stats.learned_clauses << ',' << r.stats.restarts
        << ',' << r.stats.wall_time * 1000.0 << '\n';
  emit(csv, out.str());
  return 0;
}

int run_sweep(const std::string &manifest, SweepOptions o, const std::string &dir,
              const std::string &trace, const SolverFlags &flags) {
  SmcProblem p = load_manifest(manifest);
  o.direction = parse_direction(dir);
  o.solver = flags.config();
  SweepResult r = sweep(p, o);
  if (!trace.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, r.trace);
    emit(trace, csv.str());
  }
  if (!r.best_threshold) {
    std::cout << "c no feasible threshold in range\n";
    write_model(std::cout, Status::Unsat);
    return kExitUnsat;
  }
  std::cout << "c best_threshold " << std::setprecision(10) << *r.best_threshold << '\n';
  write_model(std::cout, Status::Sat, r.best_model);
  return kExitSat;
}

int run_pc_info(const std::string &file) {
  Circuit c = parse_pc(read_text_file(file));
  const ValidationReport &v = c.validation();
  std::cout << "nodes " << c.size() << "\nvars " << c.num_vars() << "\nsmooth "
            << (v.smooth ? "yes" : "no") << "\ndecomposable " << (v.decomposable ? "yes" : "no")
            << '\n';
  for (const Violation &x : v.violations)
    std::cout << "violation node " << x.node << ' '
              << (x.kind == Violation::Kind::NotSmooth ? "not-smooth" : "not-decomposable")
              << '\n';
  if (v.ok())
    std::cout << "partition " << std::setprecision(17) << partition(c) << '\n';
  return v.ok() ? 0 : kExitVerifyFail;
}

int run_pc_eval(const std::string &file, const std::string &assign, const std::string &mode) {
  Circuit c = parse_pc(read_text_file(file));
  require_valid(c);
  std::vector<Value> a = parse_assignment(assign, c.num_vars());
  std::cout << std::setprecision(17) << "marginal " << marginal(c, a, parse_mode(mode)) << '\n';
  bool full = true;
  for (std::uint32_t v : c.scope(c.root()))
    full = full && a[v] != Value::Unassigned;
  if (full)
    std::cout << "joint " << evaluate_joint(c, a) << '\n';
  return 0;
}

int run_pc_bounds(const std::string &file, const std::string &shared, const std::string &assign,
                  const std::string &mode) {
  Circuit c = parse_pc(read_text_file(file));
  require_valid(c);
  BoundState s(c, parse_list(shared), parse_mode(mode));
  std::vector<Value> a = parse_assignment(assign, c.num_vars());
  std::uint32_t level = 0;
  std::cout << std::setprecision(17);
  Bounds b = s.root_bounds();
  std::cout << "ub " << b.ub << " lb " << b.lb << '\n';
  for (std::uint32_t v = 0; v < c.num_vars(); ++v)
    if (a[v] != Value::Unassigned) {
      s.assign(v, a[v] == Value::True, ++level);
      b = s.root_bounds();
      std::cout << "x" << v << '=' << (a[v] == Value::True ? 'T' : 'F') << " ub " << b.ub
                << " lb " << b.lb << '\n';
    }
  return 0;
}

fs::path manifest_dir(const fs::path &out) {
  return out.parent_path().empty() ? fs::path(".") : out.parent_path();
}

std::string require_json(const std::string &out) {
  if (out.empty() || fs::path(out).extension() != ".json")
    throw std::invalid_argument("-o must name the manifest to write (*.json)");
  return fs::path(out).stem().string();
}

std::optional<std::uint32_t> parse_k(const std::string &k) {
  if (k == "none")
    return std::nullopt;
  return static_cast<std::uint32_t>(std::stoul(k));
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Satisfiability Modulo Counting solver"};
  app.require_subcommand(1);
  int code = 0;

  // solve
  auto *solve_cmd = app.add_subcommand("solve", "Solve an SMC manifest");
  std::string manifest, out;
  SolverFlags flags;
  bool stats = false;
  solve_cmd->add_option("manifest", manifest)->required();
  solve_cmd->add_flag("--stats", stats, "Print `c stat` lines");
  solve_cmd->add_option("-o,--out", out, "Write the result here instead of stdout");
  flags.add(solve_cmd);
  solve_cmd->callback([&] { code = run_solve(manifest, flags, stats, out); });

  // verify
  auto *verify_cmd = app.add_subcommand("verify", "Check a model file against a manifest");
  std::string model_file, mode = "linear", path = "circuit";
  verify_cmd->add_option("manifest", manifest)->required();
  verify_cmd->add_option("model", model_file)->required();
  verify_cmd->add_option("--mode", mode)->check(CLI::IsMember({"linear", "log"}));
  verify_cmd->add_option("--path", path, "Marginal computation")
      ->check(CLI::IsMember({"circuit", "enumeration"}));
  verify_cmd->callback([&] { code = run_verify(manifest, model_file, mode, path); });

  // oracle
  auto *oracle_cmd = app.add_subcommand("oracle", "Brute-force solve and count models");
  std::uint32_t cap = 24;
  oracle_cmd->add_option("manifest", manifest)->required();
  oracle_cmd->add_option("--cap", cap, "Largest variable count to enumerate");
  oracle_cmd->add_option("--mode", mode)->check(CLI::IsMember({"linear", "log"}));
  oracle_cmd->add_option("--path", path)->check(CLI::IsMember({"circuit", "enumeration"}));
  oracle_cmd->callback([&] { code = run_oracle(manifest, cap, mode, path); });

  // gen
  auto *gen = app.add_subcommand("gen", "Generate instances");
  gen->require_subcommand(1);
  std::uint64_t seed = 0;

  GridSpec grid;
  std::optional<std::uint64_t> shuffle_seed;
  auto *kcolor = gen->add_subcommand("kcolor", "Grid coloring CNF");
  kcolor->add_option("--rows", grid.rows)->required();
  kcolor->add_option("--cols", grid.cols)->required();
  kcolor->add_option("--colors", grid.colors);
  kcolor->add_option("--shuffle-seed", shuffle_seed, "Permute variable names and clauses");
  kcolor->add_option("-o,--out", out);
  kcolor->callback([&] { emit(out, to_dimacs(gen_kcolor(grid, shuffle_seed))); });

  std::uint32_t bn_n = 0, max_parents = 5;
  double edge_fraction = 0.5;
  auto *bn = gen->add_subcommand("bn", "Random Bayesian network (UAI)");
  bn->add_option("--n", bn_n)->required();
  bn->add_option("--max-parents", max_parents);
  bn->add_option("--edge-fraction", edge_fraction);
  bn->add_option("--seed", seed);
  bn->add_option("-o,--out", out);
  bn->callback([&] { emit(out, to_uai(gen_random_bn(bn_n, max_parents, edge_fraction, seed))); });

  std::string layers, k_up = "2", k_down = "2";
  double threshold = 0.0;
  auto *supply = gen->add_subcommand("supply", "Supply network plan with a disaster network");
  supply->add_option("--layers", layers, "Comma-separated layer sizes")->required();
  supply->add_option("--k-up", k_up, "Suppliers per node, or `none`");
  supply->add_option("--k-down", k_down, "Buyers per node, or `none`");
  supply->add_option("--max-parents", max_parents);
  supply->add_option("--edge-fraction", edge_fraction);
  supply->add_option("--threshold", threshold, "Required success probability");
  supply->add_option("--seed", seed);
  supply->add_option("-o,--out", out, "Manifest path (*.json)")->required();
  supply->callback([&] {
    std::string stem = require_json(out);
    SupplyInstance inst{parse_list(layers), parse_k(k_up), parse_k(k_down), max_parents,
                        edge_fraction, seed, threshold};
    SmcProblem p = build_supply_smc(inst);
    LayeredNetwork net(inst.layers);
    auto order = supply_success_model(net, gen_random_bn(net.num_edges(), max_parents,
                                                         edge_fraction, seed))
                     .order;
    save_problem(p, manifest_dir(out), stem, {order});
  });

  RandomPredicateOptions rp;
  rp.bn_vars = 0;
  std::string graph_file, cmp = "ge";
  std::uint32_t complete = 0;
  auto *hampath = gen->add_subcommand("hampath", "Hamiltonian path manifest");
  auto *graph_opt = hampath->add_option("--graph", graph_file, "Edge list, `u v` per line");
  hampath->add_option("--complete", complete, "Use the complete graph on N vertices")
      ->excludes(graph_opt);
  hampath->add_option("--bn-vars", rp.bn_vars, "Attach a random network predicate (0: none)");
  hampath->add_option("--fraction", rp.fraction, "Threshold as a partition fraction");
  hampath->add_option("--cmp", cmp)->check(CLI::IsMember({"ge", "gt", "le", "lt"}));
  hampath->add_option("--seed", seed);
  hampath->add_option("-o,--out", out, "Manifest path (*.json)")->required();
  hampath->callback([&] {
    std::string stem = require_json(out);
    GraphSpec g;
    if (!graph_file.empty()) {
      std::ifstream in(graph_file);
      if (!in)
        throw std::runtime_error("cannot open " + graph_file);
      g = parse_edge_list(in);
    } else if (complete > 0) {
      g.n = complete;
      for (std::uint32_t u = 0; u < complete; ++u)
        for (std::uint32_t v = u + 1; v < complete; ++v)
          g.edges.emplace_back(u, v);
    } else {
      throw std::invalid_argument("need --graph or --complete");
    }
    rp.num_predicates = rp.bn_vars > 0 ? 1 : 0;
    rp.cmp = parse_comparator(cmp);
    rp.seed = seed;
    save_problem(attach_random_predicates(encode_hamiltonian_path(g), rp), manifest_dir(out),
                 stem);
  });

  RandomPredicateOptions sp;
  GridSpec sgrid;
  auto *smc_gen = gen->add_subcommand("smc", "Grid coloring with random network predicates");
  smc_gen->add_option("--rows", sgrid.rows)->required();
  smc_gen->add_option("--cols", sgrid.cols)->required();
  smc_gen->add_option("--colors", sgrid.colors);
  smc_gen->add_option("--predicates", sp.num_predicates);
  smc_gen->add_option("--bn-vars", sp.bn_vars);
  smc_gen->add_option("--max-parents", sp.max_parents);
  smc_gen->add_option("--edge-fraction", sp.edge_fraction);
  smc_gen->add_option("--fraction", sp.fraction, "Threshold as a partition fraction");
  smc_gen->add_option("--cmp", cmp)->check(CLI::IsMember({"ge", "gt", "le", "lt"}));
  smc_gen->add_flag("--soft", sp.soft, "Give each predicate a fresh b variable");
  smc_gen->add_option("--seed", seed);
  smc_gen->add_option("-o,--out", out, "Manifest path (*.json)")->required();
  smc_gen->callback([&] {
    std::string stem = require_json(out);
    sp.cmp = parse_comparator(cmp);
    sp.seed = seed;
    save_problem(attach_random_predicates(gen_kcolor(sgrid), sp), manifest_dir(out), stem);
  });

  // compile
  auto *compile_cmd = app.add_subcommand("compile", "Compile a UAI network to a circuit");
  std::string uai, order;
  bool no_memo = false;
  compile_cmd->add_option("uai", uai)->required();
  compile_cmd->add_option("--order", order, "Comma-separated variable order");
  compile_cmd->add_flag("--no-memo", no_memo, "Disable sub-circuit sharing");
  compile_cmd->add_option("-o,--out", out);
  compile_cmd->callback([&] {
    FactorGraph fg = parse_uai(read_text_file(uai));
    auto ord = parse_list(order);
    CompileOptions opt;
    opt.memoize = !no_memo;
    emit(out, to_pc(compile(fg, ord, opt)));
  });

  // sweep
  auto *sweep_cmd = app.add_subcommand("sweep", "Sweep one predicate's threshold");
  SweepOptions so;
  std::string direction = "up", trace;
  sweep_cmd->add_option("manifest", manifest)->required();
  sweep_cmd->add_option("--predicate", so.predicate, "0-based predicate index");
  sweep_cmd->add_option("--direction", direction)->check(CLI::IsMember({"up", "down"}));
  sweep_cmd->add_option("--step", so.step);
  sweep_cmd->add_option("--lo", so.lo);
  sweep_cmd->add_option("--hi", so.hi);
  sweep_cmd->add_flag("--full-range", so.full_range, "Do not stop at the first UNSAT point");
  sweep_cmd->add_option("--trace", trace, "CSV trace output");
  flags.add(sweep_cmd);
  sweep_cmd->callback([&] { code = run_sweep(manifest, so, direction, trace, flags); });

  // bench
  auto *bench = app.add_subcommand("bench", "Solve every manifest in a directory");
  std::string suite, csv;
  bool with_ulw = false, without_ulw = false;
  unsigned jobs = 1;
  bench->add_option("suite", suite)->required();
  auto *with_opt = bench->add_flag("--with-ulw", with_ulw, "Bound propagation on (default)");
  bench->add_flag("--without-ulw", without_ulw, "Bound propagation off")->excludes(with_opt);
  bench->add_option("--csv", csv, "CSV output (stdout when omitted)");
  bench->add_option("--jobs", jobs, "Instances solved in parallel");
  bench->add_option("--mode", flags.mode)->check(CLI::IsMember({"linear", "log"}));
  bench->add_option("--seed", flags.seed);
  bench->add_option("--budget-conflicts", flags.budget_conflicts);
  bench->callback([&] { code = run_bench(suite, without_ulw, csv, jobs, flags); });

  // pc
  auto *pc = app.add_subcommand("pc", "Circuit utilities");
  pc->require_subcommand(1);
  std::string pc_file, assign, shared;
  auto *info = pc->add_subcommand("info", "Size, validity and partition");
  info->add_option("circuit", pc_file)->required();
  info->callback([&] { code = run_pc_info(pc_file); });
  auto *eval = pc->add_subcommand("eval", "Marginal (and joint when complete)");
  eval->add_option("circuit", pc_file)->required();
  eval->add_option("--assign", assign, "Comma-separated var=0|1 (0-based)");
  eval->add_option("--mode", mode)->check(CLI::IsMember({"linear", "log"}));
  eval->callback([&] { code = run_pc_eval(pc_file, assign, mode); });
  auto *bounds = pc->add_subcommand("bounds", "Upper/lower bounds as shared vars are set");
  bounds->add_option("circuit", pc_file)->required();
  bounds->add_option("--shared", shared, "Comma-separated shared variables")->required();
  bounds->add_option("--assign", assign, "Comma-separated var=0|1, applied in variable order");
  bounds->add_option("--mode", mode)->check(CLI::IsMember({"linear", "log"}));
  bounds->callback([&] { code = run_pc_bounds(pc_file, shared, assign, mode); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return code;
}
