#include "qsage/registry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>

#include "qsage/error.hpp"
#include "qsage/util.hpp"

#ifndef QSAGE_DEFAULT_DATA_DIR
#define QSAGE_DEFAULT_DATA_DIR "data"
#endif

namespace qsage {

using nlohmann::json;

namespace {

constexpr double kShortTimeout = 300.0;
constexpr double kHubbardTimeout = 3000.0;
constexpr const char *kInstancesFormat = "qsage-instances/1";

std::vector<FamilySchema> build_families() {
  const Tolerance tol{};
  std::vector<FamilySchema> f;

  f.push_back({
      "condensedmatter/hubbard",
      "Fermi-Hubbard chain",
      {
          {"L", ParamType::Integer, "lattice size (sites)", true, {}},
          {"t", ParamType::Real, "hopping strength", true, {}},
          {"U", ParamType::Real, "on-site interaction", true, {}},
          {"n_up", ParamType::Integer, "spin-up electrons (default: half filling)", false, {}},
          {"n_down", ParamType::Integer, "spin-down electrons (default: half filling)", false, {}},
      },
      tol,
      kHubbardTimeout,
      "ground-state energy",
      "One-dimensional Fermi-Hubbard model on an open chain of L = {L} sites "
      "(no periodic boundary):\n"
      "  H = -t * sum_{i=0}^{L-2} sum_{s=up,down} (c^dag_{i,s} c_{i+1,s} + h.c.)"
      " + U * sum_{i=0}^{L-1} n_{i,up} n_{i,down}\n"
      "with t = {t} and U = {U}. Map fermions to qubits with the Jordan-Wigner "
      "transformation, placing spin orbital (i, s) on qubit 2*i + s (s = 0 for up, "
      "s = 1 for down). Work at half filling: the ground state is searched in the "
      "particle-number sector with n_up = {n_up} spin-up and n_down = {n_down} "
      "spin-down electrons. Compute the ground-state energy in that sector with the "
      "variational quantum eigensolver (VQE).",
      "sector-lanczos",
  });

  f.push_back({
      "condensedmatter/tfim",
      "Transverse-field Ising chain",
      {
          {"L", ParamType::Integer, "lattice size (spins)", true, {}},
          {"J", ParamType::Real, "nearest-neighbour coupling", true, {}},
          {"h", ParamType::Real, "transverse field", true, {}},
      },
      tol,
      kShortTimeout,
      "ground-state energy",
      "Transverse-field Ising model on an open chain of L = {L} spins "
      "(no periodic boundary):\n"
      "  H = -J * sum_{i=0}^{L-2} Z_i Z_{i+1} - h * sum_{i=0}^{L-1} X_i\n"
      "with J = {J} and h = {h}. Compute the ground-state energy of H with the "
      "variational quantum eigensolver (VQE).",
      "lanczos",
  });

  f.push_back({
      "optimization/maxcut",
      "Weighted MaxCut",
      {
          {"N", ParamType::Integer, "number of vertices", true, {}},
          {"E", ParamType::Edges, "weighted edge list (u, v, weight), 0-based vertices", true, {}},
      },
      tol,
      kShortTimeout,
      "maximum cut value",
      "Weighted MaxCut on a graph with N = {N} vertices (labelled 0..N-1) and "
      "weighted edges (u, v, weight):\n  E = {E}\n"
      "Map the problem to the diagonal Ising Hamiltonian "
      "H = sum_{(u,v,w) in E} w * Z_u Z_v, whose ground-state energy E0 gives the "
      "maximum cut (W_total - E0) / 2 with W_total the sum of all weights. Solve it "
      "with quantum annealing and report the maximum cut value.",
      "exhaustive-maxcut",
  });

  f.push_back({
      "gauge/schwinger",
      "Massive Schwinger model",
      {
          {"L", ParamType::Integer, "lattice size (staggered sites, even)", true, {}},
          {"h", ParamType::Real, "hopping strength", true, {}},
          {"g", ParamType::Real, "gauge coupling", true, {}},
          {"m", ParamType::Real, "fermion mass", false, ParamValue{0.5}},
          {"T", ParamType::Real, "evolution time", false, ParamValue{1.0}},
          {"initial_state", ParamType::String, "initial state ('vacuum' or bitstring)", false,
           ParamValue{std::string("vacuum")}},
          {"observable", ParamType::String, "measured observable", false,
           ParamValue{std::string("particle_number")}},
      },
      tol,
      kShortTimeout,
      "observable expectation value",
      "One-dimensional massive Schwinger model with staggered fermions on an open "
      "chain of L = {L} sites, gauge field eliminated through Gauss's law "
      "(zero background field), written in spin form:\n"
      "  H = h * sum_{n=0}^{L-2} (sigma+_n sigma-_{n+1} + h.c.)"
      " + (m/2) * sum_{n=0}^{L-1} (-1)^n Z_n + g * sum_{n=0}^{L-2} L_n^2,\n"
      "  L_n = sum_{k=0}^{{n}} (Z_k + (-1)^k) / 2,\n"
      "where sigma+- = (X -+ iY)/2, h = {h}, g = {g} and m = {m}. Start from the "
      "initial state '{initial_state}' (the staggered vacuum has qubit n in |1> for "
      "even n and |0> for odd n), evolve it to time T = {T} with a Trotterized "
      "time evolution, and report the expectation value of the '{observable}' "
      "observable at time T; particle_number is "
      "(1/L) * sum_n (Z_n (-1)^n + 1) / 2.",
      "exact-evolution",
  });

  f.push_back({
      "chem/h2",
      "Hydrogen molecule",
      {
          {"BL", ParamType::Real, "bond length (Angstrom)", true, {}},
          {"integrals", ParamType::String, "FCIDUMP integral file", false, {}, true},
      },
      tol,
      kShortTimeout,
      "ground-state energy (Hartree)",
      "Electronic ground state of the hydrogen molecule H2 at bond length "
      "BL = {BL} Angstrom in the STO-3G minimal basis (restricted Hartree-Fock "
      "orbitals, 2 electrons, singlet, Sz = 0). Report the total ground-state energy "
      "in Hartree including the nuclear repulsion, as given by full configuration "
      "interaction, computed with quantum phase estimation (QPE) on the "
      "Jordan-Wigner qubit Hamiltonian.",
      "fci",
  });
  return f;
}

const std::vector<FamilySchema> &family_table() {
  static const std::vector<FamilySchema> table = build_families();
  return table;
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

const char *type_name(ParamType t) {
  switch (t) {
  case ParamType::Integer: return "integer";
  case ParamType::Real: return "number";
  case ParamType::String: return "string";
  case ParamType::Edges: return "edge list";
  }
  return "value";
}

bool type_matches(ParamType t, const ParamValue &v) {
  switch (t) {
  case ParamType::Integer: return std::holds_alternative<double>(v) && is_integral(std::get<double>(v));
  case ParamType::Real: return std::holds_alternative<double>(v) && std::isfinite(std::get<double>(v));
  case ParamType::String: return std::holds_alternative<std::string>(v);
  case ParamType::Edges: return std::holds_alternative<EdgeList>(v);
  }
  return false;
}

std::filesystem::path h2_integral_file(const std::filesystem::path &dir, double bl) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "h2_sto3g_%.3f.fcidump", bl);
  return dir / buf;
}

/// `ok(k)`: parameter k is present with the right type.
void check_ranges(const ProblemInstance &in, const std::function<bool(const char *)> &ok,
                  std::vector<std::string> &out) {
  const auto &d = in.descriptor;
  auto num = [&](const char *k) { return in.number(k); };
  if (d == "condensedmatter/tfim") {
    if (ok("L") && (num("L") < 1 || num("L") > 20)) out.push_back("parameter 'L' must lie in [1, 20]");
  } else if (d == "condensedmatter/hubbard") {
    if (ok("L") && (num("L") < 1 || num("L") > 8)) out.push_back("parameter 'L' must lie in [1, 8]");
    for (const char *k : {"n_up", "n_down"})
      if (ok(k) && ok("L") && (num(k) < 0 || num(k) > num("L")))
        out.push_back(std::string("parameter '") + k + "' must lie in [0, L]");
  } else if (d == "optimization/maxcut") {
    if (!ok("N")) return;
    const double n = num("N");
    if (n < 1 || n > static_cast<double>(kMaxCutExhaustiveCap))
      out.push_back("parameter 'N' must lie in [1, " + std::to_string(kMaxCutExhaustiveCap) + "]");
    else if (ok("E")) {
      try {
        WeightedGraph{static_cast<std::size_t>(n), in.edges("E")}.validate();
      } catch (const Error &e) {
        out.push_back(std::string("parameter 'E': ") + e.what());
      }
    }
  } else if (d == "gauge/schwinger") {
    const bool has_l = ok("L");
    const double L = has_l ? num("L") : 0.0;
    if (has_l && (L < 2 || L > 12 || std::fmod(L, 2.0) != 0.0))
      out.push_back("parameter 'L' must be even and lie in [2, 12]");
    if (ok("T") && num("T") < 0) out.push_back("parameter 'T' must be non-negative");
    if (ok("observable")) {
      try {
        parse_schwinger_observable(in.text("observable"));
      } catch (const Error &e) {
        out.push_back(std::string("parameter 'observable': ") + e.what());
      }
    }
    if (ok("initial_state") && has_l) {
      const auto &s = in.text("initial_state");
      const bool bits = s.size() == static_cast<std::size_t>(L) &&
                        s.find_first_not_of("01") == std::string::npos;
      if (s != "vacuum" && !bits)
        out.push_back("parameter 'initial_state' must be 'vacuum' or an L-bit string");
    }
  } else if (d == "chem/h2") {
    if (ok("BL") && !(num("BL") > 0)) out.push_back("parameter 'BL' must be positive");
    if (ok("integrals") && !std::filesystem::exists(in.text("integrals")))
      out.push_back("parameter 'integrals': file not found: " + in.text("integrals"));
  }
}

ParamValue param_from_json(const json &j, const std::string &key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    EdgeList edges;
    for (const auto &e : j) {
      WeightedEdge we;
      if (e.is_array() && (e.size() == 2 || e.size() == 3)) {
        we.u = e.at(0).get<std::size_t>();
        we.v = e.at(1).get<std::size_t>();
        we.weight = e.size() == 3 ? e.at(2).get<double>() : 1.0;
      } else if (e.is_object()) {
        we.u = e.at("u").get<std::size_t>();
        we.v = e.at("v").get<std::size_t>();
        we.weight = e.value("weight", e.value("w", 1.0));
      } else {
        throw Error(ErrorCode::Parse, "parameter '" + key + "': malformed edge entry");
      }
      edges.push_back(we);
    }
    return edges;
  }
  throw Error(ErrorCode::Parse, "parameter '" + key + "' has an unsupported JSON type");
}

json param_to_json(const ParamValue &v) {
  if (const auto *d = std::get_if<double>(&v)) return *d;
  if (const auto *s = std::get_if<std::string>(&v)) return *s;
  json edges = json::array();
  for (const auto &e : std::get<EdgeList>(v)) edges.push_back({e.u, e.v, e.weight});
  return edges;
}

} // namespace

double Tolerance::band(double reference) const {
  return std::max(absolute, relative * std::abs(reference));
}

double ProblemInstance::number(const std::string &key) const {
  auto it = params.find(key);
  if (it == params.end() || !std::holds_alternative<double>(it->second))
    throw Error(ErrorCode::Validation, "parameter '" + key + "' is missing or not a number");
  return std::get<double>(it->second);
}

std::size_t ProblemInstance::integer(const std::string &key) const {
  const double v = number(key);
  if (!is_integral(v) || v < 0)
    throw Error(ErrorCode::Validation, "parameter '" + key + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

const std::string &ProblemInstance::text(const std::string &key) const {
  auto it = params.find(key);
  if (it == params.end() || !std::holds_alternative<std::string>(it->second))
    throw Error(ErrorCode::Validation, "parameter '" + key + "' is missing or not a string");
  return std::get<std::string>(it->second);
}

const EdgeList &ProblemInstance::edges(const std::string &key) const {
  auto it = params.find(key);
  if (it == params.end() || !std::holds_alternative<EdgeList>(it->second))
    throw Error(ErrorCode::Validation, "parameter '" + key + "' is missing or not an edge list");
  return std::get<EdgeList>(it->second);
}

std::span<const FamilySchema> families() { return family_table(); }

const FamilySchema *find_family(std::string_view descriptor) {
  for (const auto &f : family_table())
    if (f.descriptor == descriptor) return &f;
  return nullptr;
}

std::vector<std::string> validate(const ProblemInstance &instance) {
  std::vector<std::string> out;
  if (instance.id.empty()) out.push_back("instance id must not be empty");
  if (!(instance.tolerance.absolute >= 0) || !(instance.tolerance.relative >= 0))
    out.push_back("tolerance must be non-negative");
  if (!(instance.timeout_s > 0) || !std::isfinite(instance.timeout_s))
    out.push_back("timeout_s must be positive");

  const FamilySchema *family = find_family(instance.descriptor);
  if (!family) {
    out.push_back("unknown family '" + instance.descriptor + "'");
    return out;
  }
  std::set<std::string> usable;
  for (const auto &spec : family->params) {
    auto it = instance.params.find(spec.name);
    if (it == instance.params.end()) {
      if (spec.required) out.push_back("missing parameter '" + spec.name + "'");
      continue;
    }
    if (!type_matches(spec.type, it->second))
      out.push_back("parameter '" + spec.name + "' must be a " + type_name(spec.type));
    else
      usable.insert(spec.name);
  }
  for (const auto &[key, value] : instance.params) {
    const bool known = std::any_of(family->params.begin(), family->params.end(),
                                   [&](const ParamSpec &s) { return s.name == key; });
    if (!known) out.push_back("unknown parameter '" + key + "' for " + family->descriptor);
  }
  check_ranges(instance, [&](const char *k) { return usable.contains(k); }, out);
  return out;
}

ProblemInstance instance_from_json(const json &j, const std::filesystem::path &base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "instance entry must be an object");
  ProblemInstance in;
  try {
    in.descriptor = j.at("descriptor").get<std::string>();
    in.id = j.value("id", std::string());
    if (j.contains("params")) {
      if (!j["params"].is_object()) throw Error(ErrorCode::Parse, "'params' must be an object");
      for (const auto &[key, value] : j["params"].items())
        in.params[key] = param_from_json(value, key);
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, std::string("malformed instance: ") + e.what());
  }

  const FamilySchema *family = find_family(in.descriptor);
  if (!family) throw Error(ErrorCode::UnknownFamily, "unknown family '" + in.descriptor + "'");
  if (in.id.empty()) in.id = in.descriptor;

  try {
    in.tolerance = family->default_tolerance;
    if (j.contains("tolerance")) {
      const auto &t = j["tolerance"];
      in.tolerance.absolute = t.value("absolute", in.tolerance.absolute);
      in.tolerance.relative = t.value("relative", in.tolerance.relative);
    }
    in.timeout_s = j.value("timeout_s", family->default_timeout_s);
    in.prompt_template_id = j.value("prompt_template_id", family->descriptor);
    in.expected_output_label = j.value("expected_output_label", family->expected_output_label);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, "instance '" + in.id + "': " + e.what());
  }

  // Static defaults first, then defaults derived from other parameters.
  for (const auto &spec : family->params)
    if (!in.params.contains(spec.name) && spec.default_value) in.params[spec.name] = *spec.default_value;

  auto violations = validate(in);
  if (violations.empty()) {
    if (in.descriptor == "condensedmatter/hubbard") {
      const auto sector = half_filling(in.integer("L"));
      if (!in.has("n_up")) in.params["n_up"] = static_cast<double>(sector.n_up);
      if (!in.has("n_down")) in.params["n_down"] = static_cast<double>(sector.n_down);
    } else if (in.descriptor == "chem/h2") {
      std::filesystem::path file;
      if (in.has("integrals")) {
        file = in.text("integrals");
        if (file.is_relative()) file = base_dir / file;
      } else {
        file = h2_integral_file(base_dir.empty() ? data_dir() / "integrals" : base_dir,
                                in.number("BL"));
      }
      in.params["integrals"] = std::filesystem::weakly_canonical(file).string();
    }
    violations = validate(in);
  }
  if (!violations.empty()) {
    std::string msg = "instance '" + in.id + "' violates the " + in.descriptor + " schema:";
    for (const auto &v : violations) msg += "\n  - " + v;
    throw Error(ErrorCode::Validation, msg);
  }
  return in;
}

json instance_to_json(const ProblemInstance &in) {
  json params = json::object();
  for (const auto &[k, v] : in.params) params[k] = param_to_json(v);
  return {
      {"id", in.id},
      {"descriptor", in.descriptor},
      {"params", params},
      {"tolerance", {{"absolute", in.tolerance.absolute}, {"relative", in.tolerance.relative}}},
      {"timeout_s", in.timeout_s},
      {"prompt_template_id", in.prompt_template_id},
      {"expected_output_label", in.expected_output_label},
  };
}

std::vector<ProblemInstance> parse_instances(std::string_view text,
                                             const std::filesystem::path &base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::Parse, std::string("instance file does not parse: ") + e.what());
  }
  const json *list = &doc;
  std::filesystem::path integrals_dir = base_dir.empty() ? std::filesystem::path{} : base_dir;
  if (doc.is_object()) {
    if (doc.contains("format") && doc["format"] != kInstancesFormat)
      throw Error(ErrorCode::Parse, "unsupported instance format " + doc["format"].dump());
    if (!doc.contains("instances")) throw Error(ErrorCode::Parse, "instance file lacks 'instances'");
    list = &doc["instances"];
    if (doc.contains("integrals_dir"))
      integrals_dir = base_dir / doc["integrals_dir"].get<std::string>();
  }
  if (!list->is_array()) throw Error(ErrorCode::Parse, "'instances' must be a list");

  std::vector<ProblemInstance> out;
  for (const auto &entry : *list) {
    // Relative integral paths resolve against the integrals directory.
    auto in = instance_from_json(entry, integrals_dir);
    if (std::any_of(out.begin(), out.end(), [&](const ProblemInstance &o) { return o.id == in.id; }))
      throw Error(ErrorCode::Validation, "duplicate instance id '" + in.id + "'");
    out.push_back(std::move(in));
  }
  return out;
}

std::vector<ProblemInstance> load_instances(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::Io, "instance file not found: " + path.string());
  return parse_instances(read_text_file(path), path.parent_path());
}

std::string serialize_instances(std::span<const ProblemInstance> instances) {
  json list = json::array();
  for (const auto &in : instances) list.push_back(instance_to_json(in));
  return json{{"format", kInstancesFormat}, {"instances", list}}.dump(2) + "\n";
}

std::string content_hash(const ProblemInstance &instance) {
  json j = instance_to_json(instance);
  // Hash integral files by content so the digest survives relocating the data.
  if (instance.has("integrals")) {
    const std::filesystem::path file = instance.text("integrals");
    j["params"]["integrals"] =
        std::filesystem::exists(file) ? "sha256:" + sha256_hex(read_text_file(file))
                                      : file.filename().string();
  }
  return sha256_hex(j.dump());
}

std::filesystem::path data_dir() {
  if (const char *env = std::getenv("QSAGE_DATA_DIR"); env && *env) return env;
  return QSAGE_DEFAULT_DATA_DIR;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_param(const ParamValue &v) {
  if (const auto *d = std::get_if<double>(&v)) return format_number(*d);
  if (const auto *s = std::get_if<std::string>(&v)) return *s;
  std::string out = "[";
  bool first = true;
  for (const auto &e : std::get<EdgeList>(v)) {
    if (!first) out += ", ";
    first = false;
    out += "(" + std::to_string(e.u) + ", " + std::to_string(e.v) + ", " + format_number(e.weight) + ")";
  }
  return out + "]";
}

} // namespace qsage
