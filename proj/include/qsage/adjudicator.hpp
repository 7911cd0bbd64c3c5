#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qsage/registry.hpp"
#include "qsage/sandbox.hpp"

namespace qsage {

enum class Outcome { Pass, Fail };
enum class FailReason { ParseFailure, OutOfTolerance, ExecutionFailure, Timeout };

std::string_view to_string(Outcome o);
std::string_view to_string(FailReason r);
FailReason parse_fail_reason(std::string_view s);

struct Verdict {
  Outcome outcome = Outcome::Fail;
  std::optional<double> observed;
  double reference = 0.0;
  std::optional<double> abs_deviation;
  std::optional<double> rel_deviation;
  std::optional<FailReason> reason; ///< set iff outcome is Fail
  std::string detail;

  bool passed() const { return outcome == Outcome::Pass; }
  nlohmann::json to_json() const;
  static Verdict from_json(const nlohmann::json &j);
  friend bool operator==(const Verdict &, const Verdict &) = default;
};

/// pass iff |observed - reference| <= max(tol.absolute, tol.relative*|reference|).
Verdict verify(const ParsedResult &observed, double reference, const Tolerance &tol);
Verdict verify(double observed, double reference, const Tolerance &tol);

/// Verdict for a finished run: timeout, then nonzero exit, then output parsing
/// and the tolerance check.
Verdict judge(const ExecutionResult &exec, double reference, const Tolerance &tol,
              bool lenient = false);

/// Verdict for a reply from which no script could be extracted.
Verdict judge_no_code(double reference);

enum class Category { NumErr, Timeout, API, Deps, Type, Gen, Other };

inline constexpr std::array<Category, 7> kAllCategories{
    Category::NumErr, Category::Timeout, Category::API, Category::Deps,
    Category::Type,   Category::Gen,     Category::Other};

std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct FailureCause {
  Category category = Category::Other;
  std::optional<std::string> matched_keyword;

  nlohmann::json to_json() const;
  static FailureCause from_json(const nlohmann::json &j);
  friend bool operator==(const FailureCause &, const FailureCause &) = default;
};

struct TaxonomyEntry {
  Category category;
  std::string cause;
  std::string explanation;
  std::vector<std::string> keywords;
};

struct Taxonomy {
  std::vector<TaxonomyEntry> entries;
  std::vector<Category> rule_order; ///< keyword rules, first match wins

  /// Built-in table; identical to the shipped data file.
  static const Taxonomy &builtin();
  static Taxonomy load(const std::filesystem::path &path);
  static Taxonomy parse(std::string_view text);
  nlohmann::json to_json() const;
  const TaxonomyEntry *find(Category c) const;

  /// First keyword rule matching `text` (case-sensitive substring).
  std::optional<FailureCause> match(std::string_view text) const;
};

/// Failure cause of a failed verdict; `exec` is null when no script ran.
/// Throws InvalidArgument on a pass verdict.
FailureCause classify(const ExecutionResult *exec, const Verdict &verdict,
                      const Taxonomy &taxonomy = Taxonomy::builtin());

struct CauseDistribution {
  std::size_t total = 0;
  std::map<Category, std::size_t> counts;  ///< raw labels
  std::map<Category, double> percent;      ///< after tail folding, non-zero only
  std::vector<Category> folded;            ///< categories merged into Other
};

/// Percentages per category; the least common categories whose cumulative
/// share stays within `tail_fraction` are reported under Other.
CauseDistribution aggregate_causes(std::span<const FailureCause> causes, double tail_fraction);

} // namespace qsage
