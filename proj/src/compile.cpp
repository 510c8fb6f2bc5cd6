#include "smc/compile.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace smc {

std::size_t Factor::index(std::span<const bool> scope_values) {
  std::size_t idx = 0;
  for (bool v : scope_values)
    idx = (idx << 1) | (v ? 0U : 1U);
  return idx;
}

double Factor::value(std::span<const Value> assignment) const {
  std::size_t idx = 0;
  for (std::uint32_t v : scope)
    idx = (idx << 1) | (assignment[v] == Value::True ? 0U : 1U);
  return table[idx];
}

void FactorGraph::check() const {
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Factor &fac = factors[f];
    std::vector<std::uint32_t> s = fac.scope;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw ParseError("factor " + std::to_string(f) + ": repeated scope variable");
    for (std::uint32_t v : s)
      if (v >= num_vars)
        throw ParseError("factor " + std::to_string(f) + ": variable out of range");
    if (fac.scope.size() >= 63 || fac.table.size() != (std::size_t{1} << fac.scope.size()))
      throw ParseError("factor " + std::to_string(f) + ": table size mismatch");
    for (double x : fac.table)
      if (!std::isfinite(x) || x < 0.0)
        throw ParseError("factor " + std::to_string(f) + ": negative table entry");
  }
}

double FactorGraph::joint(std::span<const Value> assignment) const {
  double r = 1.0;
  for (const Factor &f : factors)
    r *= f.value(assignment);
  return r;
}

namespace {

class Tokens {
public:
  explicit Tokens(std::istream &in) : in_(in) {}

  std::string next(const char *what) {
    std::string t;
    if (!(in_ >> t))
      throw ParseError(std::string("uai: unexpected end of input reading ") + what);
    return t;
  }
  long long integer(const char *what) {
    std::string t = next(what);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != t.size())
      throw ParseError(std::string("uai: bad integer '") + t + "' for " + what);
    return v;
  }
  double real(const char *what) {
    std::string t = next(what);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != t.size())
      throw ParseError(std::string("uai: bad number '") + t + "' for " + what);
    return v;
  }

private:
  std::istream &in_;
};

} // namespace

FactorGraph parse_uai(std::istream &in) {
  Tokens tok(in);
  FactorGraph fg;
  std::string kind = tok.next("network kind");
  if (kind == "MARKOV")
    fg.kind = NetworkKind::Markov;
  else if (kind == "BAYES")
    fg.kind = NetworkKind::Bayes;
  else
    throw ParseError("uai: unsupported network kind '" + kind + "'");
  long long n = tok.integer("variable count");
  if (n < 0)
    throw ParseError("uai: negative variable count");
  fg.num_vars = static_cast<std::uint32_t>(n);
  for (long long v = 0; v < n; ++v) {
    long long card = tok.integer("cardinality");
    if (card != 2)
      throw ParseError("uai: variable " + std::to_string(v) + " has cardinality " +
                       std::to_string(card) + "; only binary variables are supported");
  }
  long long m = tok.integer("factor count");
  if (m < 0)
    throw ParseError("uai: negative factor count");
  fg.factors.resize(static_cast<std::size_t>(m));
  for (Factor &f : fg.factors) {
    long long k = tok.integer("scope size");
    if (k < 0 || k >= 63)
      throw ParseError("uai: bad scope size");
    for (long long j = 0; j < k; ++j) {
      long long v = tok.integer("scope variable");
      if (v < 0 || v >= n)
        throw ParseError("uai: scope variable out of range");
      f.scope.push_back(static_cast<std::uint32_t>(v));
    }
  }
  for (std::size_t i = 0; i < fg.factors.size(); ++i) {
    Factor &f = fg.factors[i];
    long long count = tok.integer("table size");
    if (count != static_cast<long long>(std::size_t{1} << f.scope.size()))
      throw ParseError("uai: factor " + std::to_string(i) + " declares " +
                       std::to_string(count) + " entries, expected " +
                       std::to_string(std::size_t{1} << f.scope.size()));
    f.table.reserve(static_cast<std::size_t>(count));
    for (long long j = 0; j < count; ++j)
      f.table.push_back(tok.real("table entry"));
  }
  fg.check();
  return fg;
}

FactorGraph parse_uai(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_uai(in);
}

void write_uai(std::ostream &out, const FactorGraph &fg) {
  auto old_prec = out.precision(17);
  out << (fg.kind == NetworkKind::Bayes ? "BAYES" : "MARKOV") << '\n' << fg.num_vars << '\n';
  for (std::uint32_t v = 0; v < fg.num_vars; ++v)
    out << (v ? " " : "") << 2;
  out << '\n' << fg.factors.size() << '\n';
  for (const Factor &f : fg.factors) {
    out << f.scope.size();
    for (std::uint32_t v : f.scope)
      out << ' ' << v;
    out << '\n';
  }
  for (const Factor &f : fg.factors) {
    out << '\n' << f.table.size() << '\n';
    for (std::size_t j = 0; j < f.table.size(); ++j)
      out << (j ? " " : "") << f.table[j];
    out << '\n';
  }
  out.precision(old_prec);
}

std::string to_uai(const FactorGraph &fg) {
  std::ostringstream out;
  write_uai(out, fg);
  return out.str();
}

double enumerate_marginal(const FactorGraph &fg, std::span<const Value> partial,
                          std::uint32_t cap) {
  if (fg.num_vars > cap)
    throw std::length_error("enumerate_marginal: " + std::to_string(fg.num_vars) +
                            " variables exceed the cap of " + std::to_string(cap));
  if (partial.size() < fg.num_vars)
    throw std::invalid_argument("enumerate_marginal: assignment too short");
  std::vector<Value> a(partial.begin(), partial.begin() + fg.num_vars);
  std::vector<std::uint32_t> free;
  for (std::uint32_t v = 0; v < fg.num_vars; ++v)
    if (a[v] == Value::Unassigned)
      free.push_back(v);
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << free.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t j = 0; j < free.size(); ++j)
      a[free[j]] = to_value((mask >> j) & 1U);
    total += fg.joint(a);
  }
  return total;
}

namespace {

class Compiler {
public:
  Compiler(const FactorGraph &fg, std::vector<std::uint32_t> order, bool memoize)
      : fg_(fg), order_(std::move(order)), memoize_(memoize) {
    const std::size_t n = order_.size();
    std::vector<std::size_t> pos(fg.num_vars);
    for (std::size_t i = 0; i < n; ++i)
      pos[order_[i]] = i;
    // Each factor is emitted at the step deciding its last variable in
    // `order`; empty-scope factors go at step 0.
    emit_at_.resize(std::max<std::size_t>(n, 1));
    std::vector<std::size_t> last(fg.factors.size(), 0);
    for (std::size_t f = 0; f < fg.factors.size(); ++f) {
      for (std::uint32_t v : fg.factors[f].scope)
        last[f] = std::max(last[f], pos[v]);
      emit_at_[last[f]].push_back(f);
    }
    // relevant_[i]: positions < i whose variable appears in a factor that is
    // still pending when step i starts.
    relevant_.assign(n + 1, 0);
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t f = 0; f < fg.factors.size(); ++f)
        if (last[f] >= i)
          for (std::uint32_t v : fg.factors[f].scope)
            if (pos[v] < i)
              relevant_[i] |= std::uint64_t{1} << pos[v];
    values_.assign(fg.num_vars, Value::Unassigned);
  }

  Circuit run() {
    if (order_.empty()) {
      double root_const = 1.0;
      for (const Factor &f : fg_.factors)
        root_const *= f.table.front();
      constant(root_const);
    } else {
      build(0, 0);
    }
    return Circuit(fg_.num_vars, std::move(nodes_));
  }

private:
  NodeId add(CircuitNode n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId constant(double value) {
    auto it = constants_.find(value);
    if (it != constants_.end())
      return it->second;
    NodeId id = add(CircuitNode::constant(value));
    constants_.emplace(value, id);
    return id;
  }

  NodeId indicator(std::uint32_t var, bool sign) {
    auto key = std::make_pair(var, sign);
    auto it = indicators_.find(key);
    if (it != indicators_.end())
      return it->second;
    NodeId id = add(CircuitNode::indicator(var, sign));
    indicators_.emplace(key, id);
    return id;
  }

  // `prefix` holds the values decided at positions < step (bit i = True).
  NodeId build(std::size_t step, std::uint64_t prefix) {
    std::uint64_t key = prefix & relevant_[step];
    if (memoize_) {
      auto it = memo_[step].find(key);
      if (it != memo_[step].end())
        return it->second;
    }
    const std::uint32_t var = order_[step];
    NodeId branches[2];
    for (int b = 0; b < 2; ++b) {
      const bool val = b == 0;
      values_[var] = to_value(val);
      std::vector<NodeId> children{indicator(var, val)};
      for (std::size_t f : emit_at_[step])
        children.push_back(constant(fg_.factors[f].value(values_)));
      if (step + 1 < order_.size()) {
        std::uint64_t next = prefix | (val ? std::uint64_t{1} << step : 0);
        children.push_back(build(step + 1, next));
        // Recursion overwrote values_ for later positions only.
        values_[var] = to_value(val);
      }
      branches[b] = children.size() == 1 ? children.front()
                                         : add(CircuitNode::product(std::move(children)));
    }
    values_[var] = Value::Unassigned;
    NodeId id = add(CircuitNode::sum({1.0, 1.0}, {branches[0], branches[1]}));
    if (memoize_)
      memo_[step].emplace(key, id);
    return id;
  }

  const FactorGraph &fg_;
  std::vector<std::uint32_t> order_;
  bool memoize_;
  std::vector<std::vector<std::size_t>> emit_at_;
  std::vector<std::uint64_t> relevant_;
  std::vector<Value> values_;
  std::vector<CircuitNode> nodes_;
  std::map<double, NodeId> constants_;
  std::map<std::pair<std::uint32_t, bool>, NodeId> indicators_;
  std::unordered_map<std::size_t, std::unordered_map<std::uint64_t, NodeId>> memo_;
};

} // namespace

Circuit compile(const FactorGraph &fg, std::span<const std::uint32_t> order,
                CompileOptions options) {
  fg.check();
  if (fg.num_vars > options.cap)
    throw std::length_error("compile: " + std::to_string(fg.num_vars) +
                            " variables exceed the cap of " + std::to_string(options.cap));
  std::vector<std::uint32_t> ord;
  if (order.empty()) {
    ord.resize(fg.num_vars);
    std::iota(ord.begin(), ord.end(), 0U);
  } else {
    ord.assign(order.begin(), order.end());
    std::vector<std::uint32_t> sorted = ord;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == fg.num_vars;
    for (std::uint32_t i = 0; perm && i < sorted.size(); ++i)
      perm = sorted[i] == i;
    if (!perm)
      throw std::invalid_argument("compile: order is not a permutation of the variables");
  }
  return Compiler(fg, std::move(ord), options.memoize).run();
}

} // namespace smc
