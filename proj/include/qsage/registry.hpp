#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qsage/models.hpp"

namespace qsage {

/// Acceptance band: pass iff |observed - reference| <= max(absolute, relative*|reference|).
struct Tolerance {
  double absolute = 1e-2;
  double relative = 1e-3;

  double band(double reference) const;
  friend bool operator==(const Tolerance &, const Tolerance &) = default;
};

using EdgeList = std::vector<WeightedEdge>;
using ParamValue = std::variant<double, std::string, EdgeList>;

struct ProblemInstance {
  std::string id;
  std::string descriptor; ///< family id, e.g. "condensedmatter/tfim"
  std::map<std::string, ParamValue> params;
  Tolerance tolerance;
  double timeout_s = 300.0;
  std::string prompt_template_id;
  std::string expected_output_label;

  bool has(const std::string &key) const { return params.contains(key); }
  double number(const std::string &key) const;
  std::size_t integer(const std::string &key) const;
  const std::string &text(const std::string &key) const;
  const EdgeList &edges(const std::string &key) const;

  friend bool operator==(const ProblemInstance &, const ProblemInstance &) = default;
};

enum class ParamType { Integer, Real, String, Edges };

struct ParamSpec {
  std::string name;
  ParamType type;
  std::string description; ///< meaning and unit, shown in prompts and docs
  bool required = true;
  std::optional<ParamValue> default_value; ///< filled at load when absent
  bool oracle_only = false; ///< reference-solver input, never shown in prompts
};

struct FamilySchema {
  std::string descriptor;
  std::string title;
  std::vector<ParamSpec> params;
  Tolerance default_tolerance;
  double default_timeout_s;
  std::string expected_output_label;
  /// Problem statement for the coder prompt; may use {param} placeholders.
  std::string convention;
  /// Name of the classical reference solver bound to this family.
  std::string solver;
};

/// The five registered families (Hubbard, TFIM, MaxCut, Schwinger, H2).
std::span<const FamilySchema> families();
const FamilySchema *find_family(std::string_view descriptor);

/// Empty iff the instance satisfies every registry invariant.
std::vector<std::string> validate(const ProblemInstance &instance);

/// Parses one instance object, fills defaults, and validates it. Relative
/// integral paths resolve against `base_dir`.
ProblemInstance instance_from_json(const nlohmann::json &j,
                                   const std::filesystem::path &base_dir = {});
nlohmann::json instance_to_json(const ProblemInstance &instance);

/// Instance document: {"format": "qsage-instances/1", "instances": [...]}.
std::vector<ProblemInstance> parse_instances(std::string_view text,
                                             const std::filesystem::path &base_dir = {});
std::vector<ProblemInstance> load_instances(const std::filesystem::path &path);
std::string serialize_instances(std::span<const ProblemInstance> instances);

/// Hex SHA-256 of the canonical JSON form; stable across runs.
std::string content_hash(const ProblemInstance &instance);

/// Directory containing bundled data (instances, integrals, templates).
/// QSAGE_DATA_DIR overrides the compiled-in location.
std::filesystem::path data_dir();

std::string format_number(double v);
std::string format_param(const ParamValue &v);

} // namespace qsage
