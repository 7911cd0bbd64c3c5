#include "qsage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "qsage/error.hpp"
#include "qsage/registry.hpp"

namespace qsage {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Doubled midranks of the pooled sample (integers) plus the tie term sum(t^3 - t).
struct Ranks {
  std::vector<long> doubled; ///< pooled order: a then b
  double tie_term = 0.0;
};

Ranks pooled_ranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, std::size_t>> v;
  v.reserve(n);
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back({a[i], i});
  for (std::size_t i = 0; i < b.size(); ++i) v.push_back({b[i], a.size() + i});
  std::sort(v.begin(), v.end());
  Ranks r;
  r.doubled.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1].first == v[i].first) ++j;
    const long doubled = static_cast<long>(i + 1 + j + 1); // 2 * midrank
    for (std::size_t k = i; k <= j; ++k) r.doubled[v[k].second] = doubled;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

/// Exact two-sided p of the doubled rank sum of the first sample under the
/// permutation distribution (ties kept as midranks).
double exact_p(const Ranks &r, std::size_t na, long observed) {
  const std::size_t n = r.doubled.size();
  const long max_sum = std::accumulate(r.doubled.begin(), r.doubled.end(), 0L);
  // ways[k][s]: subsets of size k with doubled-rank sum s
  std::vector<std::vector<long double>> ways(na + 1, std::vector<long double>(max_sum + 1, 0.0L));
  ways[0][0] = 1.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long w = r.doubled[i];
    for (std::size_t k = std::min(na, i + 1); k >= 1; --k)
      for (long s = max_sum; s >= w; --s)
        if (ways[k - 1][s - w] != 0.0L) ways[k][s] += ways[k - 1][s - w];
  }
  long double total = 0.0L;
  for (long s = 0; s <= max_sum; ++s) total += ways[na][s];
  // Mean of the doubled rank sum is na * (n + 1), an integer.
  const long mean = static_cast<long>(na * (n + 1));
  const long obs_dev = std::labs(observed - mean);
  long double tail = 0.0L;
  for (long s = 0; s <= max_sum; ++s)
    if (ways[na][s] != 0.0L && std::labs(s - mean) >= obs_dev) tail += ways[na][s];
  return std::min(1.0, static_cast<double>(tail / total));
}

double approx_p(double u, std::size_t na, std::size_t nb, double tie_term, bool &degenerate) {
  const double n1 = static_cast<double>(na), n2 = static_cast<double>(nb), n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    degenerate = true;
    return 1.0;
  }
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

/// (2 * #(a > b) + #(a == b)) over all pairs.
long long doubled_wins(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  long long total = 0;
  for (double x : a) {
    const auto lo = std::lower_bound(sb.begin(), sb.end(), x);
    const auto hi = std::upper_bound(sb.begin(), sb.end(), x);
    total += 2 * (lo - sb.begin()) + (hi - lo);
  }
  return total;
}

} // namespace

std::string_view to_string(EffectCategory c) {
  switch (c) {
  case EffectCategory::Negligible: return "negligible";
  case EffectCategory::Small: return "small";
  case EffectCategory::Medium: return "medium";
  case EffectCategory::Large: return "large";
  }
  return "negligible";
}

char effect_letter(EffectCategory c) {
  switch (c) {
  case EffectCategory::Negligible: return 'N';
  case EffectCategory::Small: return 'S';
  case EffectCategory::Medium: return 'M';
  case EffectCategory::Large: return 'L';
  }
  return 'N';
}

EffectCategory effect_category(double a12) {
  const double m = std::max(a12, 1.0 - a12);
  if (m > 0.70) return EffectCategory::Large;
  if (m > 0.63) return EffectCategory::Medium;
  if (m > 0.55) return EffectCategory::Small;
  return EffectCategory::Negligible;
}

EffectSize vargha_delaney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "Vargha-Delaney needs non-empty samples");
  const long long pairs2 = 2LL * static_cast<long long>(a.size()) * static_cast<long long>(b.size());
  const long long wins = doubled_wins(a, b);
  // The side at or below one half is computed directly and the other as its
  // complement, so A(a, b) + A(b, a) == 1 holds exactly.
  double a12;
  if (2 * wins <= pairs2)
    a12 = static_cast<double>(wins) / static_cast<double>(pairs2);
  else
    a12 = 1.0 - static_cast<double>(pairs2 - wins) / static_cast<double>(pairs2);
  return {a12, effect_category(a12)};
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMethod method) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "Mann-Whitney U needs non-empty samples");
  const Ranks r = pooled_ranks(a, b);
  long doubled_sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) doubled_sum += r.doubled[i];
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  MannWhitney m;
  m.u_a = static_cast<double>(doubled_sum) / 2.0 - na * (na + 1.0) / 2.0;
  m.u_b = na * nb - m.u_a;
  const std::size_t n = a.size() + b.size();
  const double nn = static_cast<double>(n);
  if (r.tie_term == nn * nn * nn - nn) {
    m.degenerate = true;
    m.p_value = 1.0;
    m.exact = method != MwuMethod::Approximate && std::min(a.size(), b.size()) < kExactMwuBelow;
    return m;
  }
  const bool use_exact = method == MwuMethod::Exact ||
                         (method == MwuMethod::Auto && std::min(a.size(), b.size()) < kExactMwuBelow);
  m.exact = use_exact;
  if (use_exact)
    m.p_value = exact_p(r, a.size(), doubled_sum);
  else
    m.p_value = approx_p(m.u_a, a.size(), b.size(), r.tie_term, m.degenerate);
  return m;
}

Groups group_records(std::span<const EpisodeRecord> records) {
  Groups g;
  for (const auto &r : records) {
    const GroupKey key{r.model, r.descriptor, r.variant};
    if (r.invalid) {
      ++g.excluded[key];
      g.valid.try_emplace(key);
    } else {
      g.valid[key].push_back(&r);
    }
  }
  return g;
}

std::vector<double> success_indicators(std::span<const EpisodeRecord *const> records, int t) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto *r : records) out.push_back(r->succeeded_by(t) ? 1.0 : 0.0);
  return out;
}

std::map<GroupKey, std::optional<double>> success_at(std::span<const EpisodeRecord> records, int t) {
  if (t < 1) throw Error(ErrorCode::InvalidArgument, "success@t needs t >= 1");
  std::map<GroupKey, std::optional<double>> out;
  for (const auto &[key, recs] : group_records(records).valid) {
    if (recs.empty()) {
      out[key] = std::nullopt;
      continue;
    }
    const auto ind = success_indicators(recs, t);
    out[key] = std::accumulate(ind.begin(), ind.end(), 0.0) / static_cast<double>(ind.size());
  }
  return out;
}

std::vector<TurnComparison> compare_turns(std::span<const EpisodeRecord> records, int t_low, int t_high,
                                          std::vector<std::string> *notes) {
  if (!(t_low >= 1 && t_low < t_high))
    throw Error(ErrorCode::InvalidArgument, "compare_turns needs 1 <= t_low < t_high");
  const Groups groups = group_records(records);
  std::vector<TurnComparison> out;
  for (const auto &[key, recs] : groups.valid) {
    const std::size_t excluded = groups.excluded.contains(key) ? groups.excluded.at(key) : 0;
    if (recs.empty()) {
      if (notes) notes->push_back(group_label(key) + ": no valid episodes, row omitted");
      continue;
    }
    if (notes)
      for (const auto *r : recs)
        if (r->turn_budget < t_high) {
          notes->push_back(group_label(key) + ": turn budget " + std::to_string(r->turn_budget) +
                           " below t = " + std::to_string(t_high));
          break;
        }
    TurnComparison c;
    c.group = key;
    c.t_low = t_low;
    c.t_high = t_high;
    c.n = recs.size();
    c.excluded = excluded;
    const auto lo = success_indicators(recs, t_low);
    const auto hi = success_indicators(recs, t_high);
    c.rate_low = std::accumulate(lo.begin(), lo.end(), 0.0) / static_cast<double>(lo.size());
    c.rate_high = std::accumulate(hi.begin(), hi.end(), 0.0) / static_cast<double>(hi.size());
    c.test = mann_whitney_u(lo, hi);
    c.effect = vargha_delaney(hi, lo);
    out.push_back(c);
  }
  return out;
}

std::string format_p(double p) { return p < 0.05 ? "< 0.05" : fixed(p, 2); }

std::string format_comparison_cell(const TurnComparison &c) {
  return format_p(c.test.p_value) + " (" + effect_letter(c.effect.category) + ")";
}

DurationReport duration_report(std::span<const EpisodeRecord> records) {
  DurationReport rep;
  for (const auto &[key, recs] : group_records(records).valid) {
    DurationGroup g;
    g.group = key;
    for (const auto *r : recs) {
      g.turn1.push_back(r->turn1_duration_s);
      if (r->success_turn) g.to_success.push_back(r->total_duration_s);
    }
    if (g.turn1.empty())
      g.note = "no valid episodes";
    else if (g.to_success.empty())
      g.note = "no successful episodes";
    else {
      g.test = mann_whitney_u(g.to_success, g.turn1);
      g.effect = vargha_delaney(g.to_success, g.turn1);
    }
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

std::string Table::text() const {
  std::vector<std::size_t> width(headers.size(), 0);
  for (std::size_t i = 0; i < headers.size(); ++i) width[i] = headers[i].size();
  for (const auto &row : rows)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  auto line = [&](const std::vector<std::string> &cells) {
    std::string out;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string &c = i < cells.size() ? cells[i] : std::string();
      out += c;
      if (i + 1 < width.size()) out += std::string(width[i] - c.size() + 2, ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(headers);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out += std::string(total > 2 ? total - 2 : 0, '-') + "\n";
  for (const auto &row : rows) out += line(row);
  return out;
}

std::string Table::csv() const {
  auto cell = [](const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  auto line = [&](const std::vector<std::string> &cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cell(cells[i]);
    return out + "\n";
  };
  std::string out = line(headers);
  for (const auto &row : rows) out += line(row);
  return out;
}

std::string group_label(const GroupKey &g) {
  return g.family + " / " + std::string(to_string(g.variant)) + " / " + g.model;
}

Table success_table(std::span<const EpisodeRecord> records, const std::vector<int> &ts) {
  Table t;
  t.headers = {"family", "variant", "model", "episodes", "excluded"};
  for (int x : ts) t.headers.push_back("success@" + std::to_string(x));
  const Groups groups = group_records(records);
  for (const auto &[key, recs] : groups.valid) {
    std::vector<std::string> row{key.family, std::string(to_string(key.variant)), key.model,
                                 std::to_string(recs.size()),
                                 std::to_string(groups.excluded.contains(key) ? groups.excluded.at(key) : 0)};
    for (int x : ts) {
      if (recs.empty()) {
        row.push_back("-");
        continue;
      }
      const auto ind = success_indicators(recs, x);
      row.push_back(fixed(std::accumulate(ind.begin(), ind.end(), 0.0) / static_cast<double>(ind.size()), 3));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table success_series(std::span<const EpisodeRecord> records, const std::vector<int> &ts) {
  Table t;
  t.headers = {"family", "variant", "model", "instance", "repetition", "success_turn"};
  for (int x : ts) t.headers.push_back("success@" + std::to_string(x));
  for (const auto &[key, recs] : group_records(records).valid)
    for (const auto *r : recs) {
      std::vector<std::string> row{key.family, std::string(to_string(key.variant)), key.model, r->instance_id,
                                   std::to_string(r->repetition),
                                   r->success_turn ? std::to_string(*r->success_turn) : ""};
      for (int x : ts) row.push_back(r->succeeded_by(x) ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
  return t;
}

Table comparison_table(std::span<const EpisodeRecord> records, const std::vector<std::pair<int, int>> &comparisons,
                       std::vector<std::string> *notes) {
  std::set<std::string> models;
  std::set<std::pair<std::string, Variant>> rows_keys;
  for (const auto &r : records) {
    models.insert(r.model);
    rows_keys.insert({r.descriptor, r.variant});
  }
  std::map<std::tuple<std::string, Variant, std::string, int, int>, std::string> cells;
  for (const auto &[lo, hi] : comparisons)
    for (const auto &c : compare_turns(records, lo, hi, notes))
      cells[{c.group.family, c.group.variant, c.group.model, lo, hi}] = format_comparison_cell(c);

  Table t;
  t.headers = {"family", "comparison"};
  t.headers.insert(t.headers.end(), models.begin(), models.end());
  for (const auto &[family, variant] : rows_keys) {
    bool first = true;
    for (const auto &[lo, hi] : comparisons) {
      std::vector<std::string> row{
          first ? family + (variant == Variant::Informed ? " (inf.)" : "") : "",
          std::to_string(lo) + " vs. " + std::to_string(hi)};
      for (const auto &m : models) {
        auto it = cells.find({family, variant, m, lo, hi});
        row.push_back(it == cells.end() ? "-" : it->second);
      }
      t.rows.push_back(std::move(row));
      first = false;
    }
  }
  return t;
}

namespace {

std::map<GroupKey, std::vector<FailureCause>> causes_by_group(std::span<const EpisodeRecord> records) {
  std::map<GroupKey, std::vector<FailureCause>> out;
  for (const auto &[key, recs] : group_records(records).valid)
    for (const auto *r : recs)
      for (const auto &turn : r->turns)
        if (turn.cause) out[key].push_back(*turn.cause);
  return out;
}

} // namespace

Table causes_table(std::span<const EpisodeRecord> records, double tail_fraction) {
  Table t;
  t.headers = {"family", "variant", "model", "failures"};
  for (auto c : kAllCategories) t.headers.emplace_back(to_string(c));
  for (const auto &[key, causes] : causes_by_group(records)) {
    const auto d = aggregate_causes(causes, tail_fraction);
    std::vector<std::string> row{key.family, std::string(to_string(key.variant)), key.model, std::to_string(d.total)};
    for (auto c : kAllCategories) {
      auto it = d.percent.find(c);
      row.push_back(it == d.percent.end() ? "-" : fixed(it->second, 1) + "%");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table causes_histogram(std::span<const EpisodeRecord> records) {
  Table t;
  t.headers = {"family", "variant", "model", "category", "count"};
  for (const auto &[key, causes] : causes_by_group(records)) {
    const auto d = aggregate_causes(causes, 0.0);
    for (auto c : kAllCategories) {
      const std::size_t n = d.counts.contains(c) ? d.counts.at(c) : 0;
      t.rows.push_back({key.family, std::string(to_string(key.variant)), key.model, std::string(to_string(c)),
                        std::to_string(n)});
    }
  }
  return t;
}

Table duration_table(const DurationReport &report) {
  Table t;
  t.headers = {"family", "variant", "model", "episodes", "successes", "median_turn1_s", "median_to_success_s",
               "p_value", "a12", "effect", "note"};
  auto median = [](std::vector<double> v) -> std::string {
    if (v.empty()) return "-";
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return fixed(n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]), 3);
  };
  for (const auto &g : report.groups)
    t.rows.push_back({g.group.family, std::string(to_string(g.group.variant)), g.group.model,
                      std::to_string(g.turn1.size()), std::to_string(g.to_success.size()), median(g.turn1),
                      median(g.to_success), g.test ? format_p(g.test->p_value) : "-",
                      g.effect ? fixed(g.effect->a12, 3) : "-",
                      g.effect ? std::string(to_string(g.effect->category)) : "-", g.note});
  return t;
}

Table duration_series(const DurationReport &report) {
  Table t;
  t.headers = {"family", "variant", "model", "series", "seconds", "log_scale"};
  const std::string log = report.log_scale ? "1" : "0";
  for (const auto &g : report.groups) {
    for (double v : g.turn1)
      t.rows.push_back({g.group.family, std::string(to_string(g.group.variant)), g.group.model, "turn1",
                        format_number(v), log});
    for (double v : g.to_success)
      t.rows.push_back({g.group.family, std::string(to_string(g.group.variant)), g.group.model, "to_success",
                        format_number(v), log});
  }
  return t;
}

} // namespace qsage
