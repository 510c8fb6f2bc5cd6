#include "smc/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace smc {

CircuitNode CircuitNode::bernoulli(std::uint32_t var, double w_true, double w_false) {
  CircuitNode n;
  n.kind = NodeKind::Bernoulli;
  n.var = var;
  n.w_true = w_true;
  n.w_false = w_false;
  return n;
}

CircuitNode CircuitNode::indicator(std::uint32_t var, bool sign) {
  CircuitNode n;
  n.kind = NodeKind::Indicator;
  n.var = var;
  n.sign = sign;
  return n;
}

CircuitNode CircuitNode::constant(double value) {
  CircuitNode n;
  n.kind = NodeKind::Constant;
  n.w_true = value;
  return n;
}

CircuitNode CircuitNode::product(std::vector<NodeId> children) {
  CircuitNode n;
  n.kind = NodeKind::Product;
  n.children = std::move(children);
  return n;
}

CircuitNode CircuitNode::sum(std::vector<double> weights, std::vector<NodeId> children) {
  CircuitNode n;
  n.kind = NodeKind::Sum;
  n.weights = std::move(weights);
  n.children = std::move(children);
  return n;
}

double CircuitNode::leaf_weight(bool val) const {
  switch (kind) {
  case NodeKind::Bernoulli:
    return val ? w_true : w_false;
  case NodeKind::Indicator:
    return val == sign ? 1.0 : 0.0;
  case NodeKind::Constant:
    return w_true;
  default:
    throw CircuitError("leaf_weight on an inner node");
  }
}

double CircuitNode::leaf_mass() const {
  switch (kind) {
  case NodeKind::Bernoulli:
    return w_true + w_false;
  case NodeKind::Indicator:
    return 1.0;
  case NodeKind::Constant:
    return w_true;
  default:
    throw CircuitError("leaf_mass on an inner node");
  }
}

namespace {

bool valid_weight(double w) { return std::isfinite(w) && w >= 0.0; }

std::string node_msg(NodeId id, const std::string &msg) {
  return "node " + std::to_string(id) + ": " + msg;
}

} // namespace

namespace {
ValidationReport compute_validation(const Circuit &c);
} // namespace

Circuit::Circuit(std::uint32_t num_vars, std::vector<CircuitNode> nodes)
    : num_vars_(num_vars), nodes_(std::move(nodes)) {
  if (nodes_.empty())
    throw CircuitError("circuit has no nodes");
  const std::size_t n = nodes_.size();
  scopes_.resize(n);
  parents_.resize(n);
  var_leaves_.resize(num_vars_);
  for (NodeId id = 0; id < n; ++id) {
    const CircuitNode &node = nodes_[id];
    switch (node.kind) {
    case NodeKind::Bernoulli:
      if (!valid_weight(node.w_true) || !valid_weight(node.w_false))
        throw CircuitError(node_msg(id, "negative or non-finite weight"));
      [[fallthrough]];
    case NodeKind::Indicator:
      if (node.var >= num_vars_)
        throw CircuitError(node_msg(id, "variable out of range"));
      scopes_[id] = {node.var};
      var_leaves_[node.var].push_back(id);
      break;
    case NodeKind::Constant:
      if (!valid_weight(node.w_true))
        throw CircuitError(node_msg(id, "negative or non-finite constant"));
      break;
    case NodeKind::Sum:
      if (node.weights.size() != node.children.size())
        throw CircuitError(node_msg(id, "weight/child count mismatch"));
      for (double w : node.weights)
        if (!valid_weight(w))
          throw CircuitError(node_msg(id, "negative or non-finite weight"));
      [[fallthrough]];
    case NodeKind::Product: {
      if (node.children.empty())
        throw CircuitError(node_msg(id, "inner node without children"));
      std::vector<std::uint32_t> scope;
      for (NodeId ch : node.children) {
        if (ch >= id)
          throw CircuitError(node_msg(id, "child " + std::to_string(ch) +
                                              " is not an earlier node"));
        std::vector<std::uint32_t> merged;
        std::set_union(scope.begin(), scope.end(), scopes_[ch].begin(),
                       scopes_[ch].end(), std::back_inserter(merged));
        scope = std::move(merged);
        auto &ps = parents_[ch];
        if (ps.empty() || ps.back() != id)
          ps.push_back(id);
      }
      scopes_[id] = std::move(scope);
      break;
    }
    }
  }
  validation_ = compute_validation(*this);
}

namespace {

ValidationReport compute_validation(const Circuit &c) {
  ValidationReport report;
  for (NodeId id = 0; id < c.size(); ++id) {
    const CircuitNode &node = c.node(id);
    if (node.kind == NodeKind::Sum) {
      auto first = c.scope(node.children.front());
      for (NodeId ch : node.children) {
        auto s = c.scope(ch);
        if (!std::equal(first.begin(), first.end(), s.begin(), s.end())) {
          report.smooth = false;
          report.violations.push_back({Violation::Kind::NotSmooth, id});
          break;
        }
      }
    } else if (node.kind == NodeKind::Product) {
      std::size_t total = 0;
      for (NodeId ch : node.children)
        total += c.scope(ch).size();
      if (total != c.scope(id).size()) {
        report.decomposable = false;
        report.violations.push_back({Violation::Kind::NotDecomposable, id});
      }
    }
  }
  return report;
}

} // namespace

ValidationReport validate(const Circuit &c) { return c.validation(); }

void require_valid(const Circuit &c) {
  const ValidationReport &r = c.validation();
  if (r.ok())
    return;
  const Violation &v = r.violations.front();
  throw CircuitError(node_msg(v.node, v.kind == Violation::Kind::NotSmooth
                                          ? "sum node is not smooth"
                                          : "product node is not decomposable"));
}

// ---------------------------------------------------------------------------
// Text format

namespace {

double parse_weight(const std::string &tok, std::size_t lineno) {
  double w = 0.0;
  std::size_t used = 0;
  try {
    w = std::stod(tok, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != tok.size())
    throw CircuitError("pc line " + std::to_string(lineno) + ": bad number '" + tok + "'");
  if (!valid_weight(w))
    throw CircuitError("pc line " + std::to_string(lineno) + ": negative weight " + tok);
  return w;
}

std::uint64_t parse_index(const std::string &tok, std::size_t lineno) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw CircuitError("pc line " + std::to_string(lineno) + ": bad index '" + tok + "'");
  return std::stoull(tok);
}

} // namespace

Circuit parse_pc(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::uint64_t num_nodes = 0, num_vars = 0;
  std::vector<CircuitNode> nodes;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;)
      tok.push_back(std::move(t));
    auto need = [&](std::size_t n) {
      if (tok.size() != n)
        throw CircuitError("pc line " + std::to_string(lineno) + ": expected " +
                           std::to_string(n) + " fields");
    };
    if (!have_header) {
      if (tok.front() != "pc")
        throw CircuitError("pc: missing 'pc' header");
      need(3);
      num_nodes = parse_index(tok[1], lineno);
      num_vars = parse_index(tok[2], lineno);
      if (num_nodes == 0 || num_vars > std::numeric_limits<std::uint32_t>::max())
        throw CircuitError("pc: bad header");
      have_header = true;
      continue;
    }
    if (nodes.size() == num_nodes)
      throw CircuitError("pc line " + std::to_string(lineno) + ": more nodes than declared");
    const NodeId id = static_cast<NodeId>(nodes.size());
    auto var_at = [&](const std::string &t) {
      std::uint64_t v = parse_index(t, lineno);
      if (v >= num_vars)
        throw CircuitError("pc line " + std::to_string(lineno) + ": variable out of range");
      return static_cast<std::uint32_t>(v);
    };
    auto child_at = [&](const std::string &t) {
      std::uint64_t ch = parse_index(t, lineno);
      if (ch >= id)
        throw CircuitError("pc line " + std::to_string(lineno) + ": forward child reference " + t);
      return static_cast<NodeId>(ch);
    };
    const std::string &tag = tok.front();
    if (tag == "l") {
      need(4);
      nodes.push_back(CircuitNode::bernoulli(var_at(tok[1]), parse_weight(tok[2], lineno),
                                             parse_weight(tok[3], lineno)));
    } else if (tag == "i") {
      need(3);
      if (tok[2] != "0" && tok[2] != "1")
        throw CircuitError("pc line " + std::to_string(lineno) + ": indicator sign must be 0 or 1");
      nodes.push_back(CircuitNode::indicator(var_at(tok[1]), tok[2] == "1"));
    } else if (tag == "c") {
      need(2);
      nodes.push_back(CircuitNode::constant(parse_weight(tok[1], lineno)));
    } else if (tag == "p") {
      if (tok.size() < 2)
        need(2);
      std::uint64_t k = parse_index(tok[1], lineno);
      need(2 + k);
      std::vector<NodeId> children;
      for (std::size_t j = 0; j < k; ++j)
        children.push_back(child_at(tok[2 + j]));
      nodes.push_back(CircuitNode::product(std::move(children)));
    } else if (tag == "s") {
      if (tok.size() < 2)
        need(2);
      std::uint64_t k = parse_index(tok[1], lineno);
      need(2 + 2 * k);
      std::vector<double> weights;
      std::vector<NodeId> children;
      for (std::size_t j = 0; j < k; ++j) {
        weights.push_back(parse_weight(tok[2 + 2 * j], lineno));
        children.push_back(child_at(tok[3 + 2 * j]));
      }
      nodes.push_back(CircuitNode::sum(std::move(weights), std::move(children)));
    } else {
      throw CircuitError("pc line " + std::to_string(lineno) + ": unknown node tag '" + tag + "'");
    }
  }
  if (!have_header)
    throw CircuitError("pc: missing 'pc' header");
  if (nodes.size() != num_nodes)
    throw CircuitError("pc: header declares " + std::to_string(num_nodes) + " nodes, found " +
                       std::to_string(nodes.size()));
  return Circuit(static_cast<std::uint32_t>(num_vars), std::move(nodes));
}

Circuit parse_pc(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_pc(in);
}

void write_pc(std::ostream &out, const Circuit &c) {
  auto old_prec = out.precision(17);
  out << "pc " << c.size() << ' ' << c.num_vars() << '\n';
  for (const CircuitNode &n : c.nodes()) {
    switch (n.kind) {
    case NodeKind::Bernoulli:
      out << "l " << n.var << ' ' << n.w_true << ' ' << n.w_false;
      break;
    case NodeKind::Indicator:
      out << "i " << n.var << ' ' << (n.sign ? 1 : 0);
      break;
    case NodeKind::Constant:
      out << "c " << n.w_true;
      break;
    case NodeKind::Product:
      out << "p " << n.children.size();
      for (NodeId ch : n.children)
        out << ' ' << ch;
      break;
    case NodeKind::Sum:
      out << "s " << n.children.size();
      for (std::size_t j = 0; j < n.children.size(); ++j)
        out << ' ' << n.weights[j] << ' ' << n.children[j];
      break;
    }
    out << '\n';
  }
  out.precision(old_prec);
}

std::string to_pc(const Circuit &c) {
  std::ostringstream out;
  write_pc(out, c);
  return out.str();
}

// ---------------------------------------------------------------------------
// Inference

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double to_domain(double w, NumericMode mode) {
  return mode == NumericMode::Linear ? w : std::log(w);
}

double combine_product(const CircuitNode &n, const std::vector<double> &vals,
                       NumericMode mode) {
  if (mode == NumericMode::Linear) {
    double r = 1.0;
    for (NodeId ch : n.children)
      r *= vals[ch];
    return r;
  }
  double r = 0.0;
  for (NodeId ch : n.children)
    r += vals[ch];
  return r;
}

double combine_sum(const CircuitNode &n, const std::vector<double> &vals,
                   NumericMode mode) {
  if (mode == NumericMode::Linear) {
    double r = 0.0;
    for (std::size_t j = 0; j < n.children.size(); ++j)
      r += n.weights[j] * vals[n.children[j]];
    return r;
  }
  double m = kNegInf;
  for (std::size_t j = 0; j < n.children.size(); ++j)
    m = std::max(m, std::log(n.weights[j]) + vals[n.children[j]]);
  if (m == kNegInf)
    return kNegInf;
  double acc = 0.0;
  for (std::size_t j = 0; j < n.children.size(); ++j)
    acc += std::exp(std::log(n.weights[j]) + vals[n.children[j]] - m);
  return m + std::log(acc);
}

double combine(const CircuitNode &n, const std::vector<double> &vals, NumericMode mode) {
  return n.kind == NodeKind::Product ? combine_product(n, vals, mode)
                                     : combine_sum(n, vals, mode);
}

template <class LeafFn>
double evaluate(const Circuit &c, NumericMode mode, LeafFn &&leaf) {
  std::vector<double> vals(c.size());
  for (NodeId id = 0; id < c.size(); ++id) {
    const CircuitNode &n = c.node(id);
    vals[id] = n.is_leaf() ? to_domain(leaf(n), mode) : combine(n, vals, mode);
  }
  return vals[c.root()];
}

void check_assignment_size(const Circuit &c, std::span<const Value> a) {
  if (a.size() < c.num_vars())
    throw CircuitError("assignment covers " + std::to_string(a.size()) + " of " +
                       std::to_string(c.num_vars()) + " circuit variables");
}

} // namespace

double evaluate_joint(const Circuit &c, std::span<const Value> assignment) {
  check_assignment_size(c, assignment);
  for (std::uint32_t v : c.scope(c.root()))
    if (assignment[v] == Value::Unassigned)
      throw CircuitError("evaluate_joint: variable " + std::to_string(v) + " unassigned");
  return evaluate(c, NumericMode::Linear, [&](const CircuitNode &n) {
    return n.has_var() ? n.leaf_weight(assignment[n.var] == Value::True) : n.w_true;
  });
}

double marginal(const Circuit &c, std::span<const Value> assignment, NumericMode mode) {
  check_assignment_size(c, assignment);
  require_valid(c);
  return evaluate(c, mode, [&](const CircuitNode &n) {
    if (!n.has_var() || assignment[n.var] == Value::Unassigned)
      return n.leaf_mass();
    return n.leaf_weight(assignment[n.var] == Value::True);
  });
}

double partition(const Circuit &c, NumericMode mode) {
  std::vector<Value> none(c.num_vars(), Value::Unassigned);
  return marginal(c, none, mode);
}

// ---------------------------------------------------------------------------
// Bound engine

BoundState::BoundState(const Circuit &c, std::span<const std::uint32_t> shared,
                       NumericMode mode)
    : circuit_(&c), mode_(mode), ub_(c.size()), lb_(c.size()),
      shared_(c.num_vars(), 0), status_(c.num_vars(), Value::Unassigned),
      queued_(c.size(), 0) {
  require_valid(c);
  for (std::uint32_t v : shared) {
    if (v >= c.num_vars())
      throw CircuitError("shared variable " + std::to_string(v) + " out of range");
    shared_[v] = 1;
  }
  for (NodeId id = 0; id < c.size(); ++id) {
    if (c.node(id).is_leaf())
      set_leaf(id);
    else
      recompute(id);
  }
}

void BoundState::set_leaf(NodeId id) {
  const CircuitNode &n = circuit_->node(id);
  double ub, lb;
  if (!n.has_var() || !shared_[n.var]) {
    ub = lb = n.leaf_mass();
  } else if (status_[n.var] == Value::Unassigned) {
    double t = n.leaf_weight(true), f = n.leaf_weight(false);
    ub = std::max(t, f);
    lb = std::min(t, f);
  } else {
    ub = lb = n.leaf_weight(status_[n.var] == Value::True);
  }
  ub_[id] = to_domain(ub, mode_);
  lb_[id] = to_domain(lb, mode_);
}

void BoundState::recompute(NodeId id) {
  const CircuitNode &n = circuit_->node(id);
  ub_[id] = combine(n, ub_, mode_);
  lb_[id] = combine(n, lb_, mode_);
}

void BoundState::touch(NodeId id) {
  for (NodeId p : circuit_->parents(id)) {
    if (!queued_[p]) {
      queued_[p] = 1;
      heap_.push_back(p);
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
    }
  }
}

Bounds BoundState::assign(std::uint32_t var, bool val, std::uint32_t level) {
  if (var >= status_.size() || !shared_[var])
    throw std::invalid_argument("assign: variable " + std::to_string(var) + " is not shared");
  if (status_[var] != Value::Unassigned)
    throw std::invalid_argument("assign: variable " + std::to_string(var) + " already assigned");
  if (!assigned_.empty() && level < assigned_.back().level)
    throw std::invalid_argument("assign: decreasing decision level");

  frame_starts_.push_back(frames_.size());
  assigned_.push_back({var, val, level});
  status_[var] = to_value(val);

  auto same = [](double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
  };
  for (NodeId leaf : circuit_->leaves_of(var)) {
    double old_ub = ub_[leaf], old_lb = lb_[leaf];
    set_leaf(leaf);
    if (!same(old_ub, ub_[leaf]) || !same(old_lb, lb_[leaf])) {
      frames_.push_back({leaf, old_ub, old_lb});
      touch(leaf);
    }
  }
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
    NodeId id = heap_.back();
    heap_.pop_back();
    queued_[id] = 0;
    double old_ub = ub_[id], old_lb = lb_[id];
    recompute(id);
    if (!same(old_ub, ub_[id]) || !same(old_lb, lb_[id])) {
      frames_.push_back({id, old_ub, old_lb});
      touch(id);
    }
  }
  return root_bounds();
}

void BoundState::backtrack(std::uint32_t level) {
  while (!assigned_.empty() && assigned_.back().level > level) {
    std::size_t start = frame_starts_.back();
    while (frames_.size() > start) {
      const Frame &f = frames_.back();
      ub_[f.node] = f.ub;
      lb_[f.node] = f.lb;
      frames_.pop_back();
    }
    status_[assigned_.back().var] = Value::Unassigned;
    assigned_.pop_back();
    frame_starts_.pop_back();
  }
}

} // namespace smc
