#pragma once

#include "smc/formula.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smc {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Bernoulli, Indicator, Constant, Product, Sum };

struct CircuitNode {
  NodeKind kind = NodeKind::Constant;
  std::uint32_t var = 0;  // leaves over a variable
  bool sign = true;       // indicator polarity
  double w_true = 0.0;    // Bernoulli weight of True; constant value
  double w_false = 0.0;   // Bernoulli weight of False
  std::vector<NodeId> children;
  std::vector<double> weights; // sum nodes, parallel to children

  static CircuitNode bernoulli(std::uint32_t var, double w_true, double w_false);
  static CircuitNode indicator(std::uint32_t var, bool sign);
  static CircuitNode constant(double value);
  static CircuitNode product(std::vector<NodeId> children);
  static CircuitNode sum(std::vector<double> weights, std::vector<NodeId> children);

  bool is_leaf() const { return kind != NodeKind::Product && kind != NodeKind::Sum; }
  bool has_var() const {
    return kind == NodeKind::Bernoulli || kind == NodeKind::Indicator;
  }
  /// Leaf value at var = val.
  double leaf_weight(bool val) const;
  /// Leaf value with its variable summed out.
  double leaf_mass() const;

  friend bool operator==(const CircuitNode &, const CircuitNode &) = default;
};

class CircuitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  enum class Kind { NotSmooth, NotDecomposable } kind;
  NodeId node;
};

struct ValidationReport {
  bool smooth = true;
  bool decomposable = true;
  std::vector<Violation> violations;

  bool ok() const { return smooth && decomposable; }
};

/// Probabilistic circuit: nodes in topological order (children before
/// parents), root is the last node. Immutable after construction.
class Circuit {
public:
  Circuit(std::uint32_t num_vars, std::vector<CircuitNode> nodes);

  std::uint32_t num_vars() const { return num_vars_; }
  std::size_t size() const { return nodes_.size(); }
  const CircuitNode &node(NodeId id) const { return nodes_[id]; }
  std::span<const CircuitNode> nodes() const { return nodes_; }
  NodeId root() const { return static_cast<NodeId>(nodes_.size() - 1); }
  /// Sorted variable scope of a node.
  std::span<const std::uint32_t> scope(NodeId id) const { return scopes_[id]; }
  std::span<const NodeId> parents(NodeId id) const { return parents_[id]; }
  /// Leaves whose variable is `var`.
  std::span<const NodeId> leaves_of(std::uint32_t var) const { return var_leaves_[var]; }

  /// Smoothness/decomposability report, computed at construction.
  const ValidationReport &validation() const { return validation_; }

  friend bool operator==(const Circuit &a, const Circuit &b) {
    return a.num_vars_ == b.num_vars_ && a.nodes_ == b.nodes_;
  }

private:
  std::uint32_t num_vars_;
  std::vector<CircuitNode> nodes_;
  std::vector<std::vector<std::uint32_t>> scopes_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> var_leaves_;
  ValidationReport validation_;
};

ValidationReport validate(const Circuit &c);
/// Throws CircuitError unless the circuit is smooth and decomposable.
void require_valid(const Circuit &c);

Circuit parse_pc(std::istream &in);
Circuit parse_pc(std::string_view text);
void write_pc(std::ostream &out, const Circuit &c);
std::string to_pc(const Circuit &c);

enum class NumericMode { Linear, Log };

/// Circuit value with every variable fixed. `assignment` is indexed by
/// circuit variable; every variable in the root scope must be assigned.
double evaluate_joint(const Circuit &c, std::span<const Value> assignment);

/// Sum of the joint over all completions of `assignment`. In Log mode the
/// result is the natural log of that sum.
double marginal(const Circuit &c, std::span<const Value> assignment,
                NumericMode mode = NumericMode::Linear);

double partition(const Circuit &c, NumericMode mode = NumericMode::Linear);

struct Bounds {
  double ub;
  double lb;
  friend bool operator==(const Bounds &, const Bounds &) = default;
};

/// Upper/lower bounds of every circuit node under a partial assignment of the
/// shared variables, maintained incrementally with an undo trail. Variables
/// outside the shared set are summed out. The circuit must outlive the state.
class BoundState {
public:
  BoundState(const Circuit &c, std::span<const std::uint32_t> shared,
             NumericMode mode = NumericMode::Linear);

  /// Fixes shared variable `var` and refreshes its ancestors. Assignment
  /// levels must be non-decreasing.
  Bounds assign(std::uint32_t var, bool val, std::uint32_t level);
  /// Undoes every assignment made at a level above `level`.
  void backtrack(std::uint32_t level);

  Bounds root_bounds() const { return node_bounds(circuit_->root()); }
  Bounds node_bounds(NodeId id) const { return {ub_[id], lb_[id]}; }

  const Circuit &circuit() const { return *circuit_; }
  NumericMode mode() const { return mode_; }
  bool is_shared(std::uint32_t var) const { return shared_[var] != 0; }
  Value value(std::uint32_t var) const { return status_[var]; }

  struct AssignedVar {
    std::uint32_t var;
    bool value;
    std::uint32_t level;
  };
  /// Assignments currently in effect, oldest first.
  std::span<const AssignedVar> assigned() const { return assigned_; }

private:
  struct Frame {
    NodeId node;
    double ub;
    double lb;
  };

  void recompute(NodeId id);
  void set_leaf(NodeId id);
  void touch(NodeId id);

  const Circuit *circuit_;
  NumericMode mode_;
  std::vector<double> ub_;
  std::vector<double> lb_;
  std::vector<char> shared_;
  std::vector<Value> status_;
  std::vector<Frame> frames_;
  std::vector<AssignedVar> assigned_;
  std::vector<std::size_t> frame_starts_; // parallel to assigned_
  std::vector<char> queued_;
  std::vector<NodeId> heap_;
};

} // namespace smc
