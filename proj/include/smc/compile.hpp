#pragma once

#include "smc/circuit.hpp"
#include "smc/formula.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smc {

enum class NetworkKind { Markov, Bayes };

/// Table over binary variables. The last scope variable varies fastest and
/// state index 0 is True, so for scope (a, b) the table is ordered
/// (T,T), (T,F), (F,T), (F,F).
struct Factor {
  std::vector<std::uint32_t> scope;
  std::vector<double> table;

  /// Entry selected by a full assignment of the scope variables.
  double value(std::span<const Value> assignment) const;
  static std::size_t index(std::span<const bool> scope_values);

  friend bool operator==(const Factor &, const Factor &) = default;
};

struct FactorGraph {
  NetworkKind kind = NetworkKind::Markov;
  std::uint32_t num_vars = 0;
  std::vector<Factor> factors;

  /// Checks the structural invariants; throws ParseError.
  void check() const;
  /// Product of all factor entries under a full assignment.
  double joint(std::span<const Value> assignment) const;

  friend bool operator==(const FactorGraph &, const FactorGraph &) = default;
};

FactorGraph parse_uai(std::istream &in);
FactorGraph parse_uai(std::string_view text);
void write_uai(std::ostream &out, const FactorGraph &fg);
std::string to_uai(const FactorGraph &fg);

inline constexpr std::uint32_t kEnumerationCap = 24;
inline constexpr std::uint32_t kCompileCap = 20;

/// Brute-force sum of the factor product over all completions.
double enumerate_marginal(const FactorGraph &fg, std::span<const Value> partial,
                          std::uint32_t cap = kEnumerationCap);

struct CompileOptions {
  bool memoize = true;
  std::uint32_t cap = kCompileCap;
};

/// Shannon expansion of the factor product along `order` (ascending index
/// when empty). The result is smooth and decomposable over all num_vars
/// variables.
Circuit compile(const FactorGraph &fg, std::span<const std::uint32_t> order = {},
                CompileOptions options = {});

} // namespace smc
