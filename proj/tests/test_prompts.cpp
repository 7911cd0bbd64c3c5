#include <gtest/gtest.h>

#include "qsage/error.hpp"
#include "qsage/prompts.hpp"
#include "test_support.hpp"

using namespace qsage;

namespace {

const TemplateSet &templates() {
  static const auto t = TemplateSet::load(test::data_path("templates"));
  return t;
}

bool contains(const std::string &hay, const std::string &needle) { return hay.find(needle) != std::string::npos; }

Conversation first_turn(const std::string &prompt) {
  Conversation c;
  c.push(Role::User, prompt);
  c.push(Role::Assistant, "```python\nprint('RESULT: 0')\n```\n");
  return c;
}

} // namespace

TEST(Substitute, PlaceholdersAndEscapes) {
  EXPECT_EQ(substitute("a {x} b {y}", {{"x", "1"}, {"y", "two"}}), "a 1 b two");
  EXPECT_EQ(substitute("{{x}} {x}", {{"x", "v"}}), "{x} v");
  EXPECT_EQ(substitute("dict(a={'k': 1}) {x}", {{"x", "v"}}), "dict(a={'k': 1}) v");
  EXPECT_EQ(substitute("sum_{i=0}^{L-2}", {}), "sum_{i=0}^{L-2}");
  try {
    substitute("{missing}", {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::Validation);
    EXPECT_TRUE(contains(e.what(), "missing"));
  }
}

TEST(Conversation, Alternation) {
  Conversation c("system text");
  c.push(Role::User, "u1");
  EXPECT_THROW(c.push(Role::User, "u2"), Error);
  c.push(Role::Assistant, "a1");
  EXPECT_THROW(c.push(Role::Assistant, "a2"), Error);
  EXPECT_THROW(c.push(Role::System, "late"), Error);
  EXPECT_EQ(c.turns(), 1u);
  EXPECT_EQ(c.non_system_count(), 2u);
  const auto c2 = append_turn(c, "u2", "a2");
  EXPECT_EQ(c2.turns(), 2u);
  EXPECT_EQ(c.turns(), 1u);
  EXPECT_EQ(Conversation::from_json(c2.to_json()), c2);
  EXPECT_EQ(c2.to_json()[0]["role"], "system");
  EXPECT_EQ(c2.to_json()[1]["content"], "u1");
}

TEST(Templates, ShippedSetLoadsAndChecks) {
  const auto &t = templates();
  EXPECT_EQ(t.coder.size(), 5u);
  for (const auto &[id, tmpl] : t.coder) EXPECT_NO_THROW(tmpl.check()) << id;
  EXPECT_NO_THROW(t.feedback.check());
  EXPECT_NO_THROW(t.informed_feedback.check());
  const auto ph = t.feedback.placeholders();
  EXPECT_EQ(std::count(ph.begin(), ph.end(), "expected"), 0);
  for (const auto &in : test::bundled()) EXPECT_NO_THROW(t.coder_for(in)) << in.id;
}

TEST(Templates, KindRequirements) {
  PromptTemplate fb{"fb", TemplateKind::Feedback, "out {output} exp {expected}"};
  EXPECT_THROW(fb.check(), Error);
  PromptTemplate inf{"inf", TemplateKind::InformedFeedback, "out {output}"};
  EXPECT_THROW(inf.check(), Error);
  PromptTemplate coder{"c", TemplateKind::Coder, "{problem}"};
  EXPECT_THROW(coder.check(), Error);
}

TEST(CoderPrompt, ContainsEveryVisibleParameter) {
  for (const auto &in : test::bundled()) {
    const auto p = render_coder(in, templates().coder_for(in));
    for (const auto &[name, value] : in.params) {
      if (name == "integrals") {
        EXPECT_FALSE(contains(p, in.text("integrals"))) << in.id;
        continue;
      }
      EXPECT_TRUE(contains(p, name + " = " + format_param(value))) << in.id << " " << name;
    }
    EXPECT_TRUE(contains(p, "RESULT: <value>")) << in.id;
    EXPECT_TRUE(contains(p, in.expected_output_label)) << in.id;
    EXPECT_TRUE(contains(p, "qiskit")) << in.id;
  }
}

TEST(CoderPrompt, ParamsBlockAppendedWhenTemplateOmitsIt) {
  const auto &in = test::bundled("tfim-2-1-1");
  PromptTemplate t{"x", TemplateKind::Coder, "{problem}\n{stack}\n{output_format}"};
  const auto p = render_coder(in, t);
  EXPECT_TRUE(contains(p, "Parameters:\n- "));
  EXPECT_TRUE(contains(p, "J = 1"));
}

TEST(FeedbackPrompt, StandardCarriesOutputOnly) {
  const auto conv = first_turn("task");
  const std::string output = "Traceback (most recent call last):\nValueError: bad\n";
  const auto p = render_feedback(conv, output, templates().feedback);
  EXPECT_TRUE(contains(p, output));
  EXPECT_FALSE(contains(p, "expected result"));
  EXPECT_THROW(render_feedback(conv, output, templates().feedback, -1.5), Error);
}

TEST(FeedbackPrompt, InformedAddsExpectedValue) {
  const auto conv = first_turn("task");
  const auto p = render_feedback(conv, "RESULT: 0\n", templates().informed_feedback, -2.23606797749979);
  EXPECT_TRUE(contains(p, "RESULT: 0\n"));
  EXPECT_TRUE(contains(p, "-2.23606797749979"));
  EXPECT_THROW(render_feedback(conv, "x", templates().informed_feedback), Error);
}

TEST(FeedbackPrompt, DiffersFromInformedOnlyByExpectedBlock) {
  const auto conv = first_turn("task");
  const auto a = render_feedback(conv, "out", templates().feedback);
  const auto b = render_feedback(conv, "out", templates().informed_feedback, 1.5);
  EXPECT_GT(b.size(), a.size());
  std::size_t i = 0;
  while (i < a.size() && a[i] == b[i]) ++i;
  const std::size_t tail = a.size() - i;
  EXPECT_EQ(a.substr(i), b.substr(b.size() - tail));
  EXPECT_TRUE(contains(b.substr(i, b.size() - a.size()), "1.5"));
}

TEST(FeedbackPrompt, LongOutputKeepsTail) {
  std::string output(20000, 'x');
  output += "\nNameError: name 'foo' is not defined\n";
  const auto fb = feedback_output(output);
  EXPECT_LE(fb.size(), kFeedbackOutputLimit + 200);
  EXPECT_TRUE(contains(fb, "NameError: name 'foo' is not defined"));
  EXPECT_THROW(render_feedback(Conversation{}, "x", templates().feedback), Error);
}
