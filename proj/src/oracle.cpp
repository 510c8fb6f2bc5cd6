#include "smc/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace smc {

namespace {

/// Predicate marginal with the shared variables fixed from `model`, in the
/// domain of `mode`.
double predicate_marginal(const PredicateSpec &pred, const std::vector<bool> &model,
                          NumericMode mode, MarginalPath path) {
  std::vector<Value> cv(pred.circuit->num_vars(), Value::Unassigned);
  for (const SharedVar &s : pred.shared)
    cv[s.circuit_var] = to_value(model[s.formula_var]);
  if (path == MarginalPath::Circuit)
    return marginal(*pred.circuit, cv, mode);
  if (!pred.source)
    throw std::invalid_argument("enumeration path needs the source factor graph");
  double m = enumerate_marginal(*pred.source, cv);
  return mode == NumericMode::Linear ? m : std::log(m);
}

double predicate_threshold(const PredicateSpec &pred, MarginalPath path) {
  if (pred.threshold_mode == ThresholdMode::Absolute || path == MarginalPath::Circuit)
    return pred.resolved_threshold();
  std::vector<Value> none(pred.source->num_vars, Value::Unassigned);
  return pred.threshold * enumerate_marginal(*pred.source, none);
}

bool clauses_hold(const CnfFormula &f, const std::vector<bool> &model) {
  for (const Clause &c : f.clauses) {
    bool sat = false;
    for (Literal l : c)
      if (model[l.var()] == l.sign()) {
        sat = true;
        break;
      }
    if (!sat)
      return false;
  }
  return true;
}

} // namespace

OracleResult brute_solve(const SmcProblem &p, const OracleOptions &options) {
  p.check();
  const std::uint32_t n = p.cnf.num_vars;
  if (n > options.cap)
    throw std::length_error("brute_solve: " + std::to_string(n) +
                            " variables exceed the cap of " + std::to_string(options.cap));
  std::vector<DomainThreshold> thresholds;
  for (const PredicateSpec &pred : p.predicates)
    thresholds.emplace_back(predicate_threshold(pred, options.path), options.mode);
  // Predicate truth depends only on the shared projection; cache it.
  std::vector<std::unordered_map<std::uint64_t, bool>> cache(p.predicates.size());

  OracleResult result;
  std::vector<bool> model(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::uint32_t v = 0; v < n; ++v)
      model[v] = (mask >> v) & 1U;
    if (!clauses_hold(p.cnf, model))
      continue;
    bool ok = true;
    for (std::size_t j = 0; ok && j < p.predicates.size(); ++j) {
      const PredicateSpec &pred = p.predicates[j];
      std::uint64_t key = 0;
      for (std::size_t k = 0; k < pred.shared.size(); ++k)
        key |= std::uint64_t{model[pred.shared[k].formula_var]} << k;
      auto it = cache[j].find(key);
      if (it == cache[j].end()) {
        double m = predicate_marginal(pred, model, options.mode, options.path);
        it = cache[j].emplace(key, thresholds[j].holds(m, pred.cmp)).first;
      }
      bool b = pred.b ? model[pred.b->var()] == pred.b->sign() : true;
      ok = b == it->second;
    }
    if (!ok)
      continue;
    ++result.model_count;
    if (result.models.size() < options.max_models)
      result.models.push_back(model);
  }
  result.status = result.model_count > 0 ? Status::Sat : Status::Unsat;
  return result;
}

VerificationReport verify(const SmcProblem &p, std::span<const bool> model, NumericMode mode,
                          MarginalPath path) {
  return verify(p, std::vector<bool>(model.begin(), model.end()), mode, path);
}

VerificationReport verify(const SmcProblem &p, const std::vector<bool> &model, NumericMode mode,
                          MarginalPath path) {
  if (model.size() != p.cnf.num_vars)
    throw std::invalid_argument("verify: model assigns " + std::to_string(model.size()) +
                                " of " + std::to_string(p.cnf.num_vars) + " variables");
  VerificationReport report;
  for (std::size_t i = 0; i < p.cnf.clauses.size(); ++i) {
    bool sat = false;
    for (Literal l : p.cnf.clauses[i])
      sat = sat || model[l.var()] == l.sign();
    if (!sat)
      report.violated_clauses.push_back(i);
  }
  bool all = report.violated_clauses.empty();
  for (const PredicateSpec &pred : p.predicates) {
    PredicateCheck check{};
    double m = predicate_marginal(pred, model, mode, path);
    check.threshold = predicate_threshold(pred, path);
    check.holds = DomainThreshold(check.threshold, mode).holds(m, pred.cmp);
    check.marginal = mode == NumericMode::Linear ? m : std::exp(m);
    if (pred.b)
      check.b_value = model[pred.b->var()] == pred.b->sign();
    check.consistent = check.holds == check.b_value.value_or(true);
    all = all && check.consistent;
    report.predicates.push_back(check);
  }
  report.pass = all;
  return report;
}

} // namespace smc
