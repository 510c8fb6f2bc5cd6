#include "smc/manifest.hpp"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace smc {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void write_text_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw std::runtime_error("cannot write " + path.string());
}

template <typename T> T field(const json &j, const char *key, const char *where) {
  if (!j.contains(key))
    throw ParseError(std::string(where) + ": missing `" + key + "`");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw ParseError(std::string(where) + ": bad type for `" + key + "`");
  }
}

PredicateDescriptor parse_predicate(const json &j, std::size_t index) {
  std::string where = "predicate " + std::to_string(index);
  if (!j.is_object())
    throw ParseError(where + ": not an object");
  PredicateDescriptor d;
  if (j.contains("circuit"))
    d.circuit = field<std::string>(j, "circuit", where.c_str());
  if (j.contains("uai"))
    d.uai = field<std::string>(j, "uai", where.c_str());
  if (d.circuit.empty() == d.uai.empty())
    throw ParseError(where + ": exactly one of `circuit` and `uai` is required");
  if (j.contains("order"))
    d.order = field<std::vector<std::uint32_t>>(j, "order", where.c_str());
  if (j.contains("shared")) {
    const json &s = j.at("shared");
    if (!s.is_object())
      throw ParseError(where + ": `shared` must map circuit variables to formula variables");
    for (auto it = s.begin(); it != s.end(); ++it) {
      std::size_t used = 0;
      unsigned long cv;
      try {
        cv = std::stoul(it.key(), &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used == 0 || used != it.key().size() || !it.value().is_number_integer())
        throw ParseError(where + ": bad shared entry `" + it.key() + "`");
      d.shared.emplace_back(static_cast<std::uint32_t>(cv), it.value().get<std::int64_t>());
    }
    std::sort(d.shared.begin(), d.shared.end());
  }
  if (j.contains("b") && !j.at("b").is_null()) {
    if (!j.at("b").is_number_integer() || j.at("b").get<std::int64_t>() == 0)
      throw ParseError(where + ": `b` must be a nonzero integer literal");
    d.b = j.at("b").get<std::int64_t>();
  }
  try {
    if (j.contains("cmp"))
      d.cmp = parse_comparator(field<std::string>(j, "cmp", where.c_str()));
    if (j.contains("threshold_mode"))
      d.threshold_mode =
          parse_threshold_mode(field<std::string>(j, "threshold_mode", where.c_str()));
  } catch (const std::invalid_argument &e) {
    throw ParseError(where + ": " + e.what());
  }
  d.threshold = field<double>(j, "threshold", where.c_str());
  return d;
}

json predicate_json(const PredicateDescriptor &d) {
  json j = json::object();
  if (!d.circuit.empty())
    j["circuit"] = d.circuit;
  else
    j["uai"] = d.uai;
  if (!d.order.empty())
    j["order"] = d.order;
  json shared = json::object();
  for (auto [cv, fv] : d.shared)
    shared[std::to_string(cv)] = fv;
  j["shared"] = shared;
  if (d.b)
    j["b"] = *d.b;
  j["cmp"] = std::string(to_string(d.cmp));
  j["threshold"] = d.threshold;
  j["threshold_mode"] = std::string(to_string(d.threshold_mode));
  return j;
}

} // namespace

Manifest parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object())
    throw ParseError("manifest: top level must be an object");
  Manifest m;
  m.cnf = field<std::string>(doc, "cnf", "manifest");
  if (doc.contains("predicates")) {
    const json &ps = doc.at("predicates");
    if (!ps.is_array())
      throw ParseError("manifest: `predicates` must be a list");
    for (std::size_t i = 0; i < ps.size(); ++i)
      m.predicates.push_back(parse_predicate(ps[i], i));
  }
  return m;
}

std::string to_json(const Manifest &m) {
  json doc;
  doc["cnf"] = m.cnf;
  doc["predicates"] = json::array();
  for (const PredicateDescriptor &d : m.predicates)
    doc["predicates"].push_back(predicate_json(d));
  return doc.dump(2) + "\n";
}

std::string build_manifest(std::string cnf, std::vector<PredicateDescriptor> predicates,
                           const fs::path &base_dir) {
  auto require = [&](const std::string &rel) {
    if (!fs::exists(base_dir / rel))
      throw std::invalid_argument("dangling path: " + rel);
  };
  require(cnf);
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    const PredicateDescriptor &d = predicates[i];
    if (d.circuit.empty() == d.uai.empty())
      throw std::invalid_argument("predicate " + std::to_string(i) +
                                  ": exactly one of circuit and uai is required");
    require(d.circuit.empty() ? d.uai : d.circuit);
    std::set<std::uint32_t> cvars;
    std::set<std::int64_t> fvars;
    for (auto [cv, fv] : d.shared)
      if (!cvars.insert(cv).second || !fvars.insert(fv).second)
        throw std::invalid_argument("predicate " + std::to_string(i) +
                                    ": shared map is not injective");
  }
  return to_json(Manifest{std::move(cnf), std::move(predicates)});
}

SmcProblem load_problem(const Manifest &m, const fs::path &base_dir) {
  SmcProblem p;
  p.cnf = parse_dimacs(read_text_file(base_dir / m.cnf));
  for (std::size_t i = 0; i < m.predicates.size(); ++i) {
    const PredicateDescriptor &d = m.predicates[i];
    std::string where = "predicate " + std::to_string(i);
    PredicateSpec spec;
    if (!d.circuit.empty()) {
      spec.circuit = std::make_shared<const Circuit>(parse_pc(read_text_file(base_dir / d.circuit)));
    } else {
      auto fg = std::make_shared<const FactorGraph>(parse_uai(read_text_file(base_dir / d.uai)));
      spec.circuit = std::make_shared<const Circuit>(compile(*fg, d.order));
      spec.source = fg;
    }
    for (auto [cv, fv] : d.shared) {
      if (fv < 1 || fv > p.cnf.num_vars)
        throw std::invalid_argument(where + ": formula variable " + std::to_string(fv) +
                                    " out of range");
      spec.shared.push_back({cv, static_cast<Var>(fv - 1)});
    }
    if (d.b) {
      if (std::abs(*d.b) > p.cnf.num_vars)
        throw std::invalid_argument(where + ": b literal out of range");
      spec.b = Literal::from_dimacs(static_cast<int>(*d.b));
    }
    spec.cmp = d.cmp;
    spec.threshold = d.threshold;
    spec.threshold_mode = d.threshold_mode;
    p.predicates.push_back(std::move(spec));
  }
  p.check();
  return p;
}

SmcProblem load_manifest(const fs::path &path) {
  Manifest m = parse_manifest(read_text_file(path));
  return load_problem(m, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

fs::path save_problem(const SmcProblem &p, const fs::path &dir, const std::string &stem,
                      const std::vector<std::vector<std::uint32_t>> &orders) {
  fs::create_directories(dir);
  Manifest m;
  m.cnf = stem + ".cnf";
  write_text_file(dir / m.cnf, to_dimacs(p.cnf));
  for (std::size_t j = 0; j < p.predicates.size(); ++j) {
    const PredicateSpec &spec = p.predicates[j];
    PredicateDescriptor d;
    std::string base = stem + ".p" + std::to_string(j);
    if (spec.source) {
      d.uai = base + ".uai";
      write_text_file(dir / d.uai, to_uai(*spec.source));
      if (j < orders.size())
        d.order = orders[j];
    } else {
      d.circuit = base + ".pc";
      write_text_file(dir / d.circuit, to_pc(*spec.circuit));
    }
    for (const SharedVar &s : spec.shared)
      d.shared.emplace_back(s.circuit_var, std::int64_t{s.formula_var} + 1);
    std::sort(d.shared.begin(), d.shared.end());
    if (spec.b)
      d.b = spec.b->to_dimacs();
    d.cmp = spec.cmp;
    d.threshold = spec.threshold;
    d.threshold_mode = spec.threshold_mode;
    m.predicates.push_back(std::move(d));
  }
  fs::path out = dir / (stem + ".json");
  write_text_file(out, build_manifest(m.cnf, m.predicates, dir));
  return out;
}

void write_model(std::ostream &out, Status status, const std::vector<bool> &model) {
  switch (status) {
  case Status::Unsat:
    out << "s UNSATISFIABLE\n";
    return;
  case Status::BudgetExhausted:
    out << "s UNKNOWN\n";
    return;
  case Status::Sat:
    break;
  }
  out << "s SATISFIABLE\n";
  std::size_t on_line = 0;
  for (std::size_t v = 0; v < model.size(); ++v) {
    if (on_line == 0)
      out << 'v';
    out << ' ' << (model[v] ? "" : "-") << v + 1;
    if (++on_line == 10) {
      out << '\n';
      on_line = 0;
    }
  }
  out << (on_line == 0 ? "v" : "") << " 0\n";
}

ModelFile parse_model(std::istream &in, std::uint32_t num_vars) {
  ModelFile f;
  std::optional<Status> status;
  std::vector<Value> values(num_vars, Value::Unassigned);
  bool terminated = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag == "c")
      continue;
    auto fail = [&](const std::string &why) {
      throw ParseError("model line " + std::to_string(lineno) + ": " + why);
    };
    if (tag == "s") {
      std::string word;
      ss >> word;
      if (status)
        fail("repeated status line");
      if (word == "SATISFIABLE")
        status = Status::Sat;
      else if (word == "UNSATISFIABLE")
        status = Status::Unsat;
      else if (word == "UNKNOWN")
        status = Status::BudgetExhausted;
      else
        fail("unknown status `" + word + "`");
    } else if (tag == "v") {
      if (status != Status::Sat)
        fail("value line without a satisfiable status");
      if (terminated)
        fail("values after the terminating 0");
      std::string tok;
      while (ss >> tok) {
        long long x;
        std::size_t used = 0;
        try {
          x = std::stoll(tok, &used);
        } catch (const std::exception &) {
          used = 0;
        }
        if (used != tok.size() || used == 0)
          fail("bad literal `" + tok + "`");
        if (x == 0) {
          terminated = true;
          continue;
        }
        if (terminated)
          fail("values after the terminating 0");
        auto v = static_cast<std::uint64_t>(x < 0 ? -x : x) - 1;
        if (v >= num_vars)
          fail("variable " + std::to_string(v + 1) + " out of range");
        if (values[v] != Value::Unassigned)
          fail("variable " + std::to_string(v + 1) + " assigned twice");
        values[v] = to_value(x > 0);
      }
    } else {
      fail("unexpected line `" + tag + "`");
    }
  }
  if (!status)
    throw ParseError("model: missing status line");
  f.status = *status;
  if (f.status == Status::Sat) {
    f.model.resize(num_vars);
    for (std::uint32_t v = 0; v < num_vars; ++v) {
      if (values[v] == Value::Unassigned)
        throw ParseError("model: variable " + std::to_string(v + 1) + " unassigned");
      f.model[v] = values[v] == Value::True;
    }
  }
  return f;
}

} // namespace smc
