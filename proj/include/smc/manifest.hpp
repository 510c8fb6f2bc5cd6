#pragma once

// SMC manifests (JSON) and model files (`s` / `v` lines).

#include "smc/problem.hpp"
#include "smc/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smc {

/// One predicate entry. Exactly one of `circuit` (PC file) and `uai` is set;
/// `order` is the compile order for a UAI source. Shared pairs map a 0-based
/// circuit variable to a 1-based formula variable, and `b` is a DIMACS
/// literal.
struct PredicateDescriptor {
  std::string circuit;
  std::string uai;
  std::vector<std::uint32_t> order;
  std::vector<std::pair<std::uint32_t, std::int64_t>> shared;
  std::optional<std::int64_t> b;
  Comparator cmp = Comparator::GE;
  double threshold = 0.0;
  ThresholdMode threshold_mode = ThresholdMode::Absolute;

  friend bool operator==(const PredicateDescriptor &, const PredicateDescriptor &) = default;
};

/// Paths are relative to the manifest's directory.
struct Manifest {
  std::string cnf;
  std::vector<PredicateDescriptor> predicates;

  friend bool operator==(const Manifest &, const Manifest &) = default;
};

/// Throws ParseError on malformed documents.
Manifest parse_manifest(std::string_view json_text);
std::string to_json(const Manifest &m);

/// Validates and serialises a manifest. Paths are resolved against
/// `base_dir`; throws std::invalid_argument on a missing file or a shared
/// map that is not injective.
std::string build_manifest(std::string cnf, std::vector<PredicateDescriptor> predicates,
                           const std::filesystem::path &base_dir = ".");

/// Reads every referenced file and checks the resulting problem.
SmcProblem load_problem(const Manifest &m, const std::filesystem::path &base_dir);
SmcProblem load_manifest(const std::filesystem::path &path);

/// Writes `<stem>.cnf`, one circuit or UAI file per predicate and
/// `<stem>.json` into `dir`. Predicates with a known source are stored as
/// UAI with `order` when given, otherwise as PC. Returns the manifest path.
std::filesystem::path save_problem(const SmcProblem &p, const std::filesystem::path &dir,
                                   const std::string &stem,
                                   const std::vector<std::vector<std::uint32_t>> &orders = {});

/// `s SATISFIABLE` followed by `v` lines ending in 0, or `s UNSATISFIABLE`,
/// or `s UNKNOWN` when the budget ran out.
void write_model(std::ostream &out, Status status, const std::vector<bool> &model = {});

struct ModelFile {
  Status status = Status::Unsat;
  std::vector<bool> model;
};

/// Lines other than `s`, `v` and `c` are rejected. A satisfiable file must
/// assign each of the num_vars variables exactly once.
ModelFile parse_model(std::istream &in, std::uint32_t num_vars);

std::string read_text_file(const std::filesystem::path &path);

} // namespace smc
