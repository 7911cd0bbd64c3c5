#include "qsage/adjudicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsage/error.hpp"
#include "qsage/util.hpp"

namespace qsage {

namespace {

using json = nlohmann::json;

json opt(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json &j, const char *key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Verdict failed(FailReason reason, double reference, std::string detail) {
  Verdict v;
  v.outcome = Outcome::Fail;
  v.reference = reference;
  v.reason = reason;
  v.detail = std::move(detail);
  return v;
}

Taxonomy make_builtin() {
  Taxonomy t;
  t.entries = {
      {Category::NumErr, "Numerical Error", "The script finishes but its value is wrong.", {}},
      {Category::Timeout, "Timeout", "The run was stopped at the time limit.", {}},
      {Category::API,
       "Library API Misuse",
       "Wrong use of a library interface.",
       {"unexpected keyword argument", "got an unexpected keyword",
        "missing required positional argument", "TypeError", "AttributeError", "Qiskit error"}},
      {Category::Deps,
       "Version / Dependency Issue",
       "A module is missing or has an incompatible version.",
       {"cannot import name", "cannot import", "no module named", "ImportError",
        "ModuleNotFoundError"}},
      {Category::Type,
       "Type / Data Structure Error",
       "Values of the wrong type or shape.",
       {"unsupported operand type", "invalid value", "KeyError", "ValueError"}},
      {Category::Gen,
       "Code Generation Error",
       "The reply is not valid runnable code.",
       {"name is not defined", "invalid syntax", "NameError", "SyntaxError", "IndentationError"}},
  };
  t.rule_order = {Category::Deps, Category::Gen, Category::API, Category::Type};
  return t;
}

} // namespace

std::string_view to_string(Outcome o) { return o == Outcome::Pass ? "pass" : "fail"; }

std::string_view to_string(FailReason r) {
  switch (r) {
  case FailReason::ParseFailure: return "parse-failure";
  case FailReason::OutOfTolerance: return "out-of-tolerance";
  case FailReason::ExecutionFailure: return "execution-failure";
  case FailReason::Timeout: return "timeout";
  }
  return "parse-failure";
}

FailReason parse_fail_reason(std::string_view s) {
  for (auto r : {FailReason::ParseFailure, FailReason::OutOfTolerance, FailReason::ExecutionFailure,
                 FailReason::Timeout})
    if (to_string(r) == s) return r;
  throw Error(ErrorCode::Parse, "unknown failure reason '" + std::string(s) + "'");
}

json Verdict::to_json() const {
  return {{"outcome", std::string(to_string(outcome))},
          {"observed", opt(observed)},
          {"reference", reference},
          {"abs_deviation", opt(abs_deviation)},
          {"rel_deviation", opt(rel_deviation)},
          {"reason", reason ? json(std::string(to_string(*reason))) : json(nullptr)},
          {"detail", detail}};
}

Verdict Verdict::from_json(const json &j) {
  Verdict v;
  v.outcome = j.at("outcome").get<std::string>() == "pass" ? Outcome::Pass : Outcome::Fail;
  v.observed = opt_double(j, "observed");
  v.reference = j.at("reference").get<double>();
  v.abs_deviation = opt_double(j, "abs_deviation");
  v.rel_deviation = opt_double(j, "rel_deviation");
  if (j.contains("reason") && !j.at("reason").is_null())
    v.reason = parse_fail_reason(j.at("reason").get<std::string>());
  v.detail = j.value("detail", "");
  return v;
}

Verdict verify(double observed, double reference, const Tolerance &tol) {
  if (!std::isfinite(reference))
    throw Error(ErrorCode::InvalidArgument, "reference value must be finite");
  Verdict v;
  v.reference = reference;
  if (!std::isfinite(observed)) {
    v = failed(FailReason::ParseFailure, reference, "non-finite value");
    return v;
  }
  v.observed = observed;
  const double dev = std::abs(observed - reference);
  v.abs_deviation = dev;
  v.rel_deviation = reference != 0.0 ? dev / std::abs(reference)
                                     : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  if (dev <= tol.band(reference)) {
    v.outcome = Outcome::Pass;
  } else {
    v.outcome = Outcome::Fail;
    v.reason = FailReason::OutOfTolerance;
  }
  return v;
}

Verdict verify(const ParsedResult &observed, double reference, const Tolerance &tol) {
  if (!std::isfinite(reference))
    throw Error(ErrorCode::InvalidArgument, "reference value must be finite");
  if (!observed.ok()) return failed(FailReason::ParseFailure, reference, observed.failure);
  return verify(*observed.value, reference, tol);
}

Verdict judge(const ExecutionResult &exec, double reference, const Tolerance &tol, bool lenient) {
  const ParsedResult parsed = parse_result(exec.stdout_text, lenient);
  if (exec.timed_out) {
    Verdict v = failed(FailReason::Timeout, reference, "time limit reached");
    v.observed = parsed.value;
    return v;
  }
  if (!exec.clean()) {
    Verdict v = failed(FailReason::ExecutionFailure, reference,
                       exec.exit_status ? "exit status " + std::to_string(*exec.exit_status)
                                        : "killed by signal " + std::to_string(exec.signal.value_or(0)));
    if (parsed.ok()) {
      v.observed = parsed.value;
      v.abs_deviation = std::abs(*parsed.value - reference);
      v.rel_deviation = reference != 0.0 ? *v.abs_deviation / std::abs(reference)
                                         : std::numeric_limits<double>::infinity();
    }
    return v;
  }
  return verify(parsed, reference, tol);
}

Verdict judge_no_code(double reference) {
  return failed(FailReason::ParseFailure, reference, "no code in reply");
}

std::string_view to_string(Category c) {
  switch (c) {
  case Category::NumErr: return "NumErr";
  case Category::Timeout: return "Timeout";
  case Category::API: return "API";
  case Category::Deps: return "Deps";
  case Category::Type: return "Type";
  case Category::Gen: return "Gen";
  case Category::Other: return "Other";
  }
  return "Other";
}

Category parse_category(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::Parse, "unknown failure category '" + std::string(s) + "'");
}

json FailureCause::to_json() const {
  return {{"category", std::string(to_string(category))},
          {"matched_keyword", matched_keyword ? json(*matched_keyword) : json(nullptr)}};
}

FailureCause FailureCause::from_json(const json &j) {
  FailureCause c;
  c.category = parse_category(j.at("category").get<std::string>());
  if (j.contains("matched_keyword") && !j.at("matched_keyword").is_null())
    c.matched_keyword = j.at("matched_keyword").get<std::string>();
  return c;
}

const Taxonomy &Taxonomy::builtin() {
  static const Taxonomy t = make_builtin();
  return t;
}

Taxonomy Taxonomy::parse(std::string_view text) {
  Taxonomy t;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "qsage-taxonomy/1")
      throw Error(ErrorCode::Parse, "taxonomy: expected format qsage-taxonomy/1");
    for (const auto &e : j.at("categories"))
      t.entries.push_back({parse_category(e.at("id").get<std::string>()),
                           e.value("cause", ""), e.value("explanation", ""),
                           e.value("keywords", std::vector<std::string>{})});
    for (const auto &c : j.at("rule_order")) t.rule_order.push_back(parse_category(c.get<std::string>()));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, std::string("taxonomy: ") + e.what());
  }
  for (const auto c : t.rule_order)
    if (!t.find(c)) throw Error(ErrorCode::Validation, "taxonomy rule for missing category " + std::string(to_string(c)));
  for (const auto &e : t.entries)
    if (!e.keywords.empty() && std::find(t.rule_order.begin(), t.rule_order.end(), e.category) == t.rule_order.end())
      throw Error(ErrorCode::Validation, "taxonomy category " + std::string(to_string(e.category)) +
                                             " has keywords but no rule position");
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path &path) { return parse(read_text_file(path)); }

json Taxonomy::to_json() const {
  json cats = json::array();
  for (const auto &e : entries)
    cats.push_back({{"id", std::string(to_string(e.category))},
                    {"cause", e.cause},
                    {"explanation", e.explanation},
                    {"keywords", e.keywords}});
  json order = json::array();
  for (auto c : rule_order) order.push_back(std::string(to_string(c)));
  return {{"format", "qsage-taxonomy/1"}, {"categories", cats}, {"rule_order", order}};
}

const TaxonomyEntry *Taxonomy::find(Category c) const {
  for (const auto &e : entries)
    if (e.category == c) return &e;
  return nullptr;
}

std::optional<FailureCause> Taxonomy::match(std::string_view text) const {
  for (const auto c : rule_order) {
    const TaxonomyEntry *e = find(c);
    for (const auto &kw : e->keywords)
      if (text.find(kw) != std::string_view::npos) return FailureCause{c, kw};
  }
  return std::nullopt;
}

FailureCause classify(const ExecutionResult *exec, const Verdict &verdict, const Taxonomy &taxonomy) {
  if (verdict.passed()) throw Error(ErrorCode::InvalidArgument, "classify called on a passing verdict");
  if (!exec) return {Category::Gen, std::nullopt};
  if (exec->timed_out || verdict.reason == FailReason::Timeout) return {Category::Timeout, std::nullopt};
  if (auto m = taxonomy.match(exec->stderr_text + "\n" + exec->stdout_text)) return *m;
  if (exec->clean() &&
      (verdict.reason == FailReason::OutOfTolerance || verdict.reason == FailReason::ParseFailure))
    return {Category::NumErr, std::nullopt};
  return {Category::Other, std::nullopt};
}

CauseDistribution aggregate_causes(std::span<const FailureCause> causes, double tail_fraction) {
  if (!(tail_fraction >= 0.0 && tail_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "tail_fraction must lie in [0, 1)");
  CauseDistribution d;
  d.total = causes.size();
  if (causes.empty()) return d;
  for (const auto &c : causes) ++d.counts[c.category];

  std::vector<std::pair<Category, std::size_t>> ranked(d.counts.begin(), d.counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second < b.second; });
  const double n = static_cast<double>(d.total);
  std::size_t cumulative = 0;
  std::map<Category, std::size_t> reported;
  bool folding = true;
  for (const auto &[cat, count] : ranked) {
    if (cat == Category::Other) {
      reported[cat] += count;
      continue;
    }
    folding = folding && static_cast<double>(cumulative + count) <= tail_fraction * n * (1 + 1e-12);
    if (folding) {
      cumulative += count;
      d.folded.push_back(cat);
      reported[Category::Other] += count;
    } else {
      reported[cat] += count;
    }
  }
  for (const auto &[cat, count] : reported)
    if (count > 0) d.percent[cat] = 100.0 * static_cast<double>(count) / n;
  return d;
}

} // namespace qsage
