#include "smc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace smc {

namespace {

Literal pos(Var v) { return Literal::positive(v); }
Literal neg(Var v) { return Literal::negative(v); }

// Calls f on every k-subset of [0, n) in lexicographic order.
template <typename F> void for_each_subset(std::size_t n, std::size_t k, F f) {
  if (k > n)
    return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    f(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1))
      --i;
    if (i == 0)
      return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j)
      idx[j] = idx[j - 1] + 1;
  }
}

} // namespace

CnfFormula gen_kcolor(const GridSpec &g, std::optional<std::uint64_t> shuffle_seed) {
  if (g.rows == 0 || g.cols == 0 || g.colors < 2)
    throw std::invalid_argument("gen_kcolor: need rows, cols >= 1 and colors >= 2");
  CnfFormula f;
  f.num_vars = g.rows * g.cols * g.colors;
  for (std::uint32_t r = 0; r < g.rows; ++r)
    for (std::uint32_t c = 0; c < g.cols; ++c) {
      Clause some;
      for (std::uint32_t j = 0; j < g.colors; ++j)
        some.push_back(pos(g.var(r, c, j)));
      f.clauses.push_back(some);
      for (std::uint32_t j = 0; j < g.colors; ++j)
        for (std::uint32_t l = j + 1; l < g.colors; ++l)
          f.clauses.push_back({neg(g.var(r, c, j)), neg(g.var(r, c, l))});
    }
  auto forbid = [&](std::uint32_t r1, std::uint32_t c1, std::uint32_t r2, std::uint32_t c2) {
    for (std::uint32_t j = 0; j < g.colors; ++j)
      f.clauses.push_back({neg(g.var(r1, c1, j)), neg(g.var(r2, c2, j))});
  };
  for (std::uint32_t r = 0; r < g.rows; ++r)
    for (std::uint32_t c = 0; c < g.cols; ++c) {
      if (c + 1 < g.cols)
        forbid(r, c, r, c + 1);
      if (r + 1 < g.rows)
        forbid(r, c, r + 1, c);
    }
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::vector<Var> perm(f.num_vars);
    std::iota(perm.begin(), perm.end(), Var{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Clause &cl : f.clauses)
      for (Literal &l : cl)
        l = Literal::make(perm[l.var()], l.sign());
    std::shuffle(f.clauses.begin(), f.clauses.end(), rng);
  }
  return f;
}

std::vector<Clause> exactly_k(std::span<const Var> vars, std::uint32_t k) {
  const std::size_t n = vars.size();
  if (k > n)
    throw std::invalid_argument("exactly_k: k exceeds the number of variables");
  std::vector<Clause> out;
  // At most k: no k+1 of them are all true.
  for_each_subset(n, k + 1, [&](std::span<const std::size_t> s) {
    Clause c;
    for (std::size_t i : s)
      c.push_back(neg(vars[i]));
    out.push_back(c);
  });
  // At least k: every n-k+1 of them contain a true one.
  if (k > 0)
    for_each_subset(n, n - k + 1, [&](std::span<const std::size_t> s) {
      Clause c;
      for (std::size_t i : s)
        c.push_back(pos(vars[i]));
      out.push_back(c);
    });
  return out;
}

LayeredNetwork::LayeredNetwork(std::vector<std::uint32_t> layer_sizes)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.empty())
    throw std::invalid_argument("LayeredNetwork: no layers");
  for (std::uint32_t s : sizes_)
    if (s == 0)
      throw std::invalid_argument("LayeredNetwork: empty layer");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offset_.push_back(num_edges_);
    num_edges_ += sizes_[l] * sizes_[l + 1];
  }
}

Var LayeredNetwork::edge(std::uint32_t layer, std::uint32_t up, std::uint32_t down) const {
  if (layer + 1 >= sizes_.size() || up >= sizes_[layer] || down >= sizes_[layer + 1])
    throw std::out_of_range("LayeredNetwork::edge");
  return offset_[layer] + up * sizes_[layer + 1] + down;
}

CnfFormula encode_supply_chain(const LayeredNetwork &net, std::optional<std::uint32_t> k_up,
                               std::optional<std::uint32_t> k_down) {
  const auto &sizes = net.layer_sizes();
  CnfFormula f;
  f.num_vars = net.num_edges();
  auto add = [&](const std::vector<Var> &vars, std::uint32_t k, const char *side) {
    if (vars.size() < k)
      throw std::invalid_argument(std::string("encode_supply_chain: too few ") + side +
                                  " neighbours for k = " + std::to_string(k));
    for (Clause &c : exactly_k(vars, k))
      f.clauses.push_back(std::move(c));
  };
  for (std::uint32_t l = 0; l < sizes.size(); ++l)
    for (std::uint32_t node = 0; node < sizes[l]; ++node) {
      if (l > 0 && k_up) {
        std::vector<Var> in;
        for (std::uint32_t u = 0; u < sizes[l - 1]; ++u)
          in.push_back(net.edge(l - 1, u, node));
        add(in, *k_up, "upstream");
      }
      if (l + 1 < sizes.size() && k_down) {
        std::vector<Var> out;
        for (std::uint32_t d = 0; d < sizes[l + 1]; ++d)
          out.push_back(net.edge(l, node, d));
        add(out, *k_down, "downstream");
      }
    }
  return f;
}

bool GraphSpec::adjacent(std::uint32_t u, std::uint32_t v) const {
  for (auto [a, b] : edges)
    if ((a == u && b == v) || (a == v && b == u))
      return true;
  return false;
}

void GraphSpec::check() const {
  for (auto [a, b] : edges) {
    if (a == b)
      throw std::invalid_argument("graph: self-loop on vertex " + std::to_string(a));
    if (a >= n || b >= n)
      throw std::invalid_argument("graph: edge endpoint out of range");
  }
}

GraphSpec parse_edge_list(std::istream &in, std::optional<std::uint32_t> n) {
  GraphSpec g;
  std::string line;
  std::uint32_t top = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ss(line);
    long long u, v;
    if (!(ss >> u >> v) || u < 0 || v < 0)
      throw ParseError("edge list line " + std::to_string(lineno) + ": expected `u v`");
    g.edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
    top = std::max({top, static_cast<std::uint32_t>(u) + 1, static_cast<std::uint32_t>(v) + 1});
  }
  g.n = n.value_or(top);
  g.check();
  return g;
}

CnfFormula encode_hamiltonian_path(const GraphSpec &g) {
  if (g.n == 0)
    throw std::invalid_argument("encode_hamiltonian_path: empty graph");
  g.check();
  const std::uint32_t n = g.n;
  CnfFormula f;
  f.num_vars = n * n;
  std::vector<Var> row(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j)
      row[j] = path_var(n, i, j);
    for (Clause &c : exactly_k(row, 1))
      f.clauses.push_back(std::move(c));
  }
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t i = 0; i < n; ++i)
      row[i] = path_var(n, i, j);
    for (Clause &c : exactly_k(row, 1))
      f.clauses.push_back(std::move(c));
  }
  for (std::uint32_t i = 0; i + 1 < n; ++i)
    for (std::uint32_t u = 0; u < n; ++u)
      for (std::uint32_t v = 0; v < n; ++v)
        if (u != v && !g.adjacent(u, v))
          f.clauses.push_back({neg(path_var(n, i, u)), neg(path_var(n, i + 1, v))});
  return f;
}

std::vector<std::uint32_t> decode_path(std::uint32_t n, const std::vector<bool> &model) {
  if (model.size() < std::size_t{n} * n)
    throw std::invalid_argument("decode_path: model too short");
  std::vector<std::uint32_t> path;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (model[path_var(n, i, j)]) {
        path.push_back(j);
        break;
      }
  return path;
}

FactorGraph gen_random_bn(std::uint32_t n, std::uint32_t max_parents, double edge_fraction,
                          std::uint64_t seed) {
  if (n == 0)
    throw std::invalid_argument("gen_random_bn: n must be positive");
  std::mt19937_64 rng(seed);
  std::uint64_t capacity = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    capacity += std::min(i, max_parents);
  auto target = static_cast<std::uint64_t>(
      std::llround(std::clamp(edge_fraction, 0.0, 1.0) * static_cast<double>(capacity)));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> candidates; // (parent, child)
  for (std::uint32_t i = 1; i < n; ++i)
    for (std::uint32_t j = 0; j < i; ++j)
      candidates.emplace_back(j, i);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::vector<std::uint32_t>> parents(n);
  std::uint64_t taken = 0;
  for (auto [p, c] : candidates) {
    if (taken == target)
      break;
    if (parents[c].size() < max_parents) {
      parents[c].push_back(p);
      ++taken;
    }
  }

  FactorGraph fg;
  fg.kind = NetworkKind::Bayes;
  fg.num_vars = n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto open_unit = [&] {
    double x;
    do
      x = u(rng);
    while (x == 0.0);
    return x;
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    Factor cpt;
    std::sort(parents[i].begin(), parents[i].end());
    cpt.scope = parents[i];
    cpt.scope.push_back(i);
    std::size_t configs = std::size_t{1} << parents[i].size();
    for (std::size_t c = 0; c < configs; ++c) {
      double t = open_unit(), f = open_unit();
      cpt.table.push_back(t / (t + f));
      cpt.table.push_back(f / (t + f));
    }
    fg.factors.push_back(std::move(cpt));
  }
  return fg;
}

std::vector<SharedVar> select_shared(std::mt19937_64 &rng, std::uint32_t circuit_vars,
                                     std::uint32_t formula_vars) {
  std::uint32_t count = std::min(circuit_vars / 2, formula_vars);
  std::vector<std::uint32_t> cv(circuit_vars), fv(formula_vars);
  std::iota(cv.begin(), cv.end(), 0U);
  std::iota(fv.begin(), fv.end(), 0U);
  std::shuffle(cv.begin(), cv.end(), rng);
  std::shuffle(fv.begin(), fv.end(), rng);
  std::vector<SharedVar> out;
  for (std::uint32_t i = 0; i < count; ++i)
    out.push_back({cv[i], fv[i]});
  std::sort(out.begin(), out.end(),
            [](const SharedVar &a, const SharedVar &b) { return a.circuit_var < b.circuit_var; });
  return out;
}

SupplySuccessModel supply_success_model(const LayeredNetwork &net, const FactorGraph &disaster) {
  const std::uint32_t e = net.num_edges();
  if (disaster.num_vars != e)
    throw std::invalid_argument("supply_success_model: disaster network needs one variable per edge");
  SupplySuccessModel m;
  m.graph.kind = NetworkKind::Markov;
  m.graph.num_vars = 2 * e;
  for (const Factor &f : disaster.factors) {
    Factor g = f;
    for (std::uint32_t &v : g.scope)
      v += e;
    m.graph.factors.push_back(std::move(g));
  }
  for (std::uint32_t i = 0; i < e; ++i) {
    // Scope (d, z), rows TT, TF, FT, FF: a chosen edge must survive.
    m.graph.factors.push_back(Factor{{i, e + i}, {1.0, 0.0, 1.0, 1.0}});
    m.order.push_back(i);
    m.order.push_back(e + i);
  }
  return m;
}

SmcProblem build_supply_smc(const SupplyInstance &s) {
  LayeredNetwork net(s.layers);
  SmcProblem p;
  p.cnf = encode_supply_chain(net, s.k_up, s.k_down);
  FactorGraph disaster = gen_random_bn(net.num_edges(), s.max_parents, s.edge_fraction, s.seed);
  SupplySuccessModel m = supply_success_model(net, disaster);
  PredicateSpec pred;
  pred.circuit = std::make_shared<const Circuit>(compile(m.graph, m.order));
  pred.source = std::make_shared<const FactorGraph>(std::move(m.graph));
  for (std::uint32_t i = 0; i < net.num_edges(); ++i)
    pred.shared.push_back({i, i});
  pred.cmp = Comparator::GE;
  pred.threshold = s.threshold;
  p.predicates.push_back(std::move(pred));
  return p;
}

SmcProblem attach_random_predicates(CnfFormula cnf, const RandomPredicateOptions &o) {
  SmcProblem p;
  p.cnf = std::move(cnf);
  const std::uint32_t formula_vars = p.cnf.num_vars;
  std::mt19937_64 rng(o.seed);
  for (std::uint32_t j = 0; j < o.num_predicates; ++j) {
    auto fg = std::make_shared<const FactorGraph>(
        gen_random_bn(o.bn_vars, o.max_parents, o.edge_fraction, rng()));
    PredicateSpec pred;
    pred.circuit = std::make_shared<const Circuit>(compile(*fg));
    pred.source = fg;
    pred.shared = select_shared(rng, o.bn_vars, formula_vars);
    pred.cmp = o.cmp;
    pred.threshold = o.fraction;
    pred.threshold_mode = ThresholdMode::PartitionFraction;
    if (o.soft)
      pred.b = Literal::positive(p.cnf.num_vars++);
    p.predicates.push_back(std::move(pred));
  }
  return p;
}

} // namespace smc
