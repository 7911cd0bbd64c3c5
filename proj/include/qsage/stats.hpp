#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "qsage/adjudicator.hpp"
#include "qsage/episode.hpp"

namespace qsage {

enum class EffectCategory { Negligible, Small, Medium, Large };

std::string_view to_string(EffectCategory c);
/// "N", "S", "M" or "L".
char effect_letter(EffectCategory c);

struct EffectSize {
  double a12 = 0.5;
  EffectCategory category = EffectCategory::Negligible;
};

/// Thresholds on max(a12, 1 - a12): small > 0.55, medium > 0.63, large > 0.70.
EffectCategory effect_category(double a12);
EffectSize vargha_delaney(std::span<const double> a, std::span<const double> b);

enum class MwuMethod { Auto, Exact, Approximate };

struct MannWhitney {
  double u_a = 0.0; ///< U statistic of the first sample
  double u_b = 0.0;
  double p_value = 1.0; ///< two-sided
  bool exact = false;
  bool degenerate = false; ///< all values identical
};

/// Auto uses exact enumeration when the smaller sample has fewer than 8
/// values, else the tie-corrected normal approximation.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b,
                           MwuMethod method = MwuMethod::Auto);

constexpr std::size_t kExactMwuBelow = 8;

struct GroupKey {
  std::string model;
  std::string family;
  Variant variant = Variant::Standard;

  auto operator<=>(const GroupKey &) const = default;
  bool operator==(const GroupKey &) const = default;
};

struct Groups {
  std::map<GroupKey, std::vector<const EpisodeRecord *>> valid;
  std::map<GroupKey, std::size_t> excluded; ///< infrastructure-invalid episodes
};

Groups group_records(std::span<const EpisodeRecord> records);

/// 0/1 indicators 1(success_turn <= t), one per valid episode.
std::vector<double> success_indicators(std::span<const EpisodeRecord *const> records, int t);

/// Mean indicator per group; absent for groups without valid episodes.
std::map<GroupKey, std::optional<double>> success_at(std::span<const EpisodeRecord> records, int t);

struct TurnComparison {
  GroupKey group;
  int t_low = 1;
  int t_high = 5;
  std::size_t n = 0;
  std::size_t excluded = 0;
  double rate_low = 0.0;
  double rate_high = 0.0;
  MannWhitney test;
  EffectSize effect; ///< A12 of the t_high sample against the t_low sample
};

/// One row per group with valid episodes; notes list groups left out.
std::vector<TurnComparison> compare_turns(std::span<const EpisodeRecord> records, int t_low, int t_high,
                                          std::vector<std::string> *notes = nullptr);

/// "1.00 (N)" or "< 0.05 (L)".
std::string format_comparison_cell(const TurnComparison &c);

struct DurationGroup {
  GroupKey group;
  std::vector<double> turn1;         ///< every valid episode
  std::vector<double> to_success;    ///< successful episodes only
  std::optional<MannWhitney> test;   ///< absent when a series is empty
  std::optional<EffectSize> effect;  ///< A12 of to_success against turn1
  std::string note;
};

struct DurationReport {
  std::vector<DurationGroup> groups;
  bool log_scale = true;
};

DurationReport duration_report(std::span<const EpisodeRecord> records);

/// Plain table rendered as aligned text or CSV.
struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::string text() const;
  std::string csv() const;
};

std::string group_label(const GroupKey &g);

Table success_table(std::span<const EpisodeRecord> records, const std::vector<int> &ts = {1, 5, 10});
/// One row per valid episode: group, success turn, indicator per t.
Table success_series(std::span<const EpisodeRecord> records, const std::vector<int> &ts = {1, 5, 10});
/// Rows per family (informed variant marked "(inf.)") and comparison, one column per model.
Table comparison_table(std::span<const EpisodeRecord> records,
                       const std::vector<std::pair<int, int>> &comparisons = {{1, 5}, {1, 10}},
                       std::vector<std::string> *notes = nullptr);
/// Failure-cause percentages over all failed turns, seven taxonomy columns.
Table causes_table(std::span<const EpisodeRecord> records, double tail_fraction = 0.25);
/// Raw cause counts per group (histogram data).
Table causes_histogram(std::span<const EpisodeRecord> records);
Table duration_table(const DurationReport &report);
/// Long-form series: group, series (turn1 or to_success), value.
Table duration_series(const DurationReport &report);

/// p-value formatting used in tables: "< 0.05" below 0.05, else two decimals.
std::string format_p(double p);

} // namespace qsage
