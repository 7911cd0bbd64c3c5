#include <gtest/gtest.h>

#include <cmath>

#include "qsage/adjudicator.hpp"
#include "qsage/error.hpp"
#include "test_support.hpp"

using namespace qsage;

namespace {

ExecutionResult failed_run(const std::string &stderr_text, int exit_status = 1) {
  ExecutionResult r;
  r.exit_status = exit_status;
  r.stderr_text = stderr_text;
  return r;
}

ExecutionResult clean_run(const std::string &stdout_text) {
  ExecutionResult r;
  r.exit_status = 0;
  r.stdout_text = stdout_text;
  return r;
}

FailureCause classify_run(const ExecutionResult &r, double ref = -1.0) {
  return classify(&r, judge(r, ref, Tolerance{}));
}

} // namespace

TEST(Verify, ToleranceBand) {
  const Tolerance tol;
  EXPECT_TRUE(verify(1.0 + 0.0099, 1.0, tol).passed());
  EXPECT_FALSE(verify(1.0 + 0.0101, 1.0, tol).passed());
  // relative band dominates for large references: 1e-3 * 100 = 0.1
  EXPECT_TRUE(verify(100.09, 100.0, tol).passed());
  EXPECT_FALSE(verify(100.11, 100.0, tol).passed());
  EXPECT_TRUE(verify(-2.2360680, -std::sqrt(5.0), tol).passed());
  EXPECT_TRUE(verify(0.0, 0.0, Tolerance{0.0, 0.0}).passed());
  EXPECT_FALSE(verify(1e-15, 0.0, Tolerance{0.0, 0.0}).passed());
}

TEST(Verify, DeviationsRecorded) {
  const auto v = verify(-2.0, -2.5, Tolerance{});
  EXPECT_EQ(v.reason, FailReason::OutOfTolerance);
  EXPECT_EQ(*v.observed, -2.0);
  EXPECT_DOUBLE_EQ(*v.abs_deviation, 0.5);
  EXPECT_DOUBLE_EQ(*v.rel_deviation, 0.2);
  EXPECT_EQ(Verdict::from_json(v.to_json()), v);
}

TEST(Verify, NonFiniteValues) {
  EXPECT_EQ(verify(NAN, 1.0, Tolerance{}).reason, FailReason::ParseFailure);
  EXPECT_THROW(verify(1.0, INFINITY, Tolerance{}), Error);
}

TEST(Judge, Precedence) {
  ExecutionResult t = clean_run("RESULT: -1.0\n");
  t.timed_out = true;
  t.exit_status.reset();
  t.signal = 9;
  EXPECT_EQ(judge(t, -1.0, {}).reason, FailReason::Timeout);

  auto crashed = failed_run("boom");
  crashed.stdout_text = "RESULT: -1.0\n";
  const auto v = judge(crashed, -1.0, {});
  EXPECT_EQ(v.reason, FailReason::ExecutionFailure);
  EXPECT_EQ(*v.observed, -1.0);

  EXPECT_EQ(judge(clean_run("energy -1\n"), -1.0, {}).reason, FailReason::ParseFailure);
  EXPECT_EQ(judge(clean_run("RESULT: 3\n"), -1.0, {}).reason, FailReason::OutOfTolerance);
  EXPECT_TRUE(judge(clean_run("RESULT: -1.001\n"), -1.0, {}).passed());
  EXPECT_TRUE(judge(clean_run("energy: -1.0\n"), -1.0, {}, true).passed());
  const auto none = judge_no_code(-1.0);
  EXPECT_EQ(none.reason, FailReason::ParseFailure);
  EXPECT_EQ(none.detail, "no code in reply");
}

TEST(Taxonomy, EveryShippedKeywordMapsToItsCategory) {
  const auto tax = Taxonomy::load(test::data_path("taxonomy.json"));
  std::size_t checked = 0;
  for (const auto &e : tax.entries)
    for (const auto &kw : e.keywords) {
      const auto run = failed_run("Traceback (most recent call last):\n  File \"solver.py\", line 3\n" + kw + "\n");
      const auto cause = classify(&run, judge(run, 1.0, {}), tax);
      EXPECT_EQ(cause.category, e.category) << kw;
      EXPECT_EQ(cause.matched_keyword, kw);
      ++checked;
    }
  EXPECT_EQ(checked, 20u);
}

TEST(Taxonomy, ShippedFileEqualsBuiltin) {
  const auto shipped = Taxonomy::load(test::data_path("taxonomy.json"));
  EXPECT_EQ(shipped.to_json(), Taxonomy::builtin().to_json());
  EXPECT_EQ(Taxonomy::parse(Taxonomy::builtin().to_json().dump()).to_json(), Taxonomy::builtin().to_json());
  EXPECT_THROW(Taxonomy::parse("{\"format\": \"other\"}"), Error);
}

TEST(Taxonomy, CategoryNames) {
  std::vector<std::string> names;
  for (auto c : kAllCategories) names.emplace_back(to_string(c));
  EXPECT_EQ(names, (std::vector<std::string>{"NumErr", "Timeout", "API", "Deps", "Type", "Gen", "Other"}));
  for (auto c : kAllCategories) EXPECT_EQ(parse_category(to_string(c)), c);
  EXPECT_THROW(parse_category("Misc"), Error);
}

TEST(Classify, SpecialCases) {
  ExecutionResult t;
  t.timed_out = true;
  t.signal = 9;
  t.stderr_text = "ModuleNotFoundError: No module named 'qiskit'";
  EXPECT_EQ(classify_run(t).category, Category::Timeout);

  EXPECT_EQ(classify_run(clean_run("RESULT: 5\n")).category, Category::NumErr);
  EXPECT_EQ(classify_run(clean_run("no result printed\n")).category, Category::NumErr);
  EXPECT_EQ(classify_run(failed_run("Segmentation fault", 139)).category, Category::Other);
  EXPECT_EQ(classify(nullptr, judge_no_code(1.0)).category, Category::Gen);
  EXPECT_FALSE(classify(nullptr, judge_no_code(1.0)).matched_keyword);
  EXPECT_THROW(classify(nullptr, verify(1.0, 1.0, {})), Error);
}

TEST(Classify, KeywordInStdoutOfCleanRun) {
  EXPECT_EQ(classify_run(clean_run("caught KeyError: 'x'\nRESULT: 0\n")).category, Category::Type);
}

TEST(Classify, MultiKeywordPrecedenceIsDeterministic) {
  const std::vector<std::pair<std::string, Category>> cases{
      {"NameError: name 'x' is not defined\nModuleNotFoundError: No module named 'y'", Category::Deps},
      {"TypeError: f() got an unexpected keyword argument 'k'\nNameError: z", Category::Gen},
      {"TypeError: unsupported operand type(s) for +: 'int' and 'str'", Category::API},
      {"ValueError: invalid value\nAttributeError: 'X' has no attribute 'y'", Category::API},
      {"KeyError: 'a'\nValueError: b", Category::Type},
      {"ImportError: cannot import name 'Estimator' from 'qiskit.primitives'", Category::Deps},
      {"SyntaxError: invalid syntax\nImportError: x", Category::Deps},
  };
  for (const auto &[trace, expect] : cases) {
    const auto a = classify_run(failed_run(trace));
    EXPECT_EQ(a.category, expect) << trace;
    EXPECT_EQ(classify_run(failed_run(trace)), a);
  }
  const auto m = classify_run(failed_run("ImportError: cannot import name 'Estimator'"));
  EXPECT_EQ(m.matched_keyword, "cannot import name");
}

TEST(Classify, KeywordMatchingIsCaseSensitive) {
  EXPECT_EQ(classify_run(failed_run("error: no module named foo")).category, Category::Deps);
  EXPECT_EQ(classify_run(failed_run("valueerror somewhere")).category, Category::Other);
}

TEST(AggregateCauses, PercentagesAndTailFolding) {
  std::vector<FailureCause> causes;
  auto add = [&](Category c, int n) {
    for (int i = 0; i < n; ++i) causes.push_back({c, std::nullopt});
  };
  add(Category::NumErr, 50);
  add(Category::API, 30);
  add(Category::Deps, 12);
  add(Category::Type, 5);
  add(Category::Gen, 3);
  const auto none = aggregate_causes(causes, 0.0);
  EXPECT_DOUBLE_EQ(none.percent.at(Category::NumErr), 50.0);
  EXPECT_DOUBLE_EQ(none.percent.at(Category::Gen), 3.0);
  EXPECT_FALSE(none.percent.contains(Category::Other));
  const auto folded = aggregate_causes(causes, 0.10);
  EXPECT_EQ(folded.folded, (std::vector<Category>{Category::Gen, Category::Type}));
  EXPECT_DOUBLE_EQ(folded.percent.at(Category::Other), 8.0);
  EXPECT_FALSE(folded.percent.contains(Category::Gen));
  double sum = 0.0;
  for (const auto &[c, p] : folded.percent) sum += p;
  EXPECT_NEAR(sum, 100.0, 1e-9);
  EXPECT_EQ(folded.counts.at(Category::Gen), 3u);
  EXPECT_THROW(aggregate_causes(causes, 1.0), Error);
  EXPECT_EQ(aggregate_causes({}, 0.25).total, 0u);
}
