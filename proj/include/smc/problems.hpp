#pragma once

// Instance generators and application encoders.

#include "smc/compile.hpp"
#include "smc/formula.hpp"
#include "smc/problem.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace smc {

struct GridSpec {
  std::uint32_t rows = 1;
  std::uint32_t cols = 1;
  std::uint32_t colors = 3;

  /// Variable for node (r, c) taking color j.
  Var var(std::uint32_t r, std::uint32_t c, std::uint32_t j) const {
    return (r * cols + c) * colors + j;
  }
};

/// Grid graph coloring: one variable per (node, color). When `shuffle_seed`
/// is set, variable names are permuted and clause order shuffled.
CnfFormula gen_kcolor(const GridSpec &g, std::optional<std::uint64_t> shuffle_seed = {});

/// Binomial encoding of "exactly k of vars are true". Throws
/// std::invalid_argument when k > vars.size().
std::vector<Clause> exactly_k(std::span<const Var> vars, std::uint32_t k);

/// Layers fully connected to their neighbours. Edges are numbered layer by
/// layer, upstream-major.
class LayeredNetwork {
public:
  explicit LayeredNetwork(std::vector<std::uint32_t> layer_sizes);

  const std::vector<std::uint32_t> &layer_sizes() const { return sizes_; }
  std::uint32_t num_edges() const { return num_edges_; }
  /// Edge between node `up` of `layer` and node `down` of `layer + 1`.
  Var edge(std::uint32_t layer, std::uint32_t up, std::uint32_t down) const;

private:
  std::vector<std::uint32_t> sizes_;
  std::vector<std::uint32_t> offset_;
  std::uint32_t num_edges_ = 0;
};

/// Each node buys from exactly k_up upstream and sells to exactly k_down
/// downstream neighbours. An unset k leaves that side unconstrained. Throws
/// std::invalid_argument when a node has fewer neighbours than required.
CnfFormula encode_supply_chain(const LayeredNetwork &net, std::optional<std::uint32_t> k_up = 2,
                               std::optional<std::uint32_t> k_down = 2);

struct GraphSpec {
  std::uint32_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  bool adjacent(std::uint32_t u, std::uint32_t v) const;
  /// Throws std::invalid_argument on self-loops or out-of-range endpoints.
  void check() const;
};

/// Edge-list lines `u v` (0-based). Vertex count is one past the largest
/// endpoint unless `n` is given.
GraphSpec parse_edge_list(std::istream &in, std::optional<std::uint32_t> n = {});

/// x_{i,j}: position i of the path holds city j.
inline Var path_var(std::uint32_t n, std::uint32_t i, std::uint32_t j) { return i * n + j; }

/// Models correspond to directed Hamiltonian paths.
CnfFormula encode_hamiltonian_path(const GraphSpec &g);

/// City order of a model of encode_hamiltonian_path.
std::vector<std::uint32_t> decode_path(std::uint32_t n, const std::vector<bool> &model);

/// Random Bayesian network in topological order 0..n-1. The child is the
/// last variable of its CPT's scope.
FactorGraph gen_random_bn(std::uint32_t n, std::uint32_t max_parents = 5,
                          double edge_fraction = 0.5, std::uint64_t seed = 0);

/// Random shared map: min(circuit_vars / 2, formula_vars) distinct circuit
/// variables paired with distinct formula variables.
std::vector<SharedVar> select_shared(std::mt19937_64 &rng, std::uint32_t circuit_vars,
                                     std::uint32_t formula_vars);

/// Success model for a supply network. Variables 0..E-1 are edge decisions
/// (d_e), E..2E-1 are edge survivals (z_e) distributed by `disaster`. Gate
/// factors [d_e => z_e] make the marginal over z the probability that every
/// chosen edge survives.
struct SupplySuccessModel {
  FactorGraph graph;
  std::vector<std::uint32_t> order; // d_0, z_0, d_1, z_1, ...
};

SupplySuccessModel supply_success_model(const LayeredNetwork &net, const FactorGraph &disaster);

struct SupplyInstance {
  std::vector<std::uint32_t> layers;
  std::optional<std::uint32_t> k_up = 2;
  std::optional<std::uint32_t> k_down = 2;
  std::uint32_t max_parents = 5;
  double edge_fraction = 0.5;
  std::uint64_t seed = 0;
  double threshold = 0.0;
};

/// Supply plan CNF plus one hard predicate: P(chosen edges survive) >= q.
SmcProblem build_supply_smc(const SupplyInstance &s);

struct RandomPredicateOptions {
  std::uint32_t num_predicates = 1;
  std::uint32_t bn_vars = 10;
  std::uint32_t max_parents = 5;
  double edge_fraction = 0.5;
  Comparator cmp = Comparator::GE;
  double fraction = 0.5;
  /// Adds a fresh formula variable b per predicate.
  bool soft = false;
  std::uint64_t seed = 0;
};

/// Attaches predicates over compiled random Bayesian networks to a CNF,
/// with thresholds as partition fractions.
SmcProblem attach_random_predicates(CnfFormula cnf, const RandomPredicateOptions &o);

} // namespace smc
