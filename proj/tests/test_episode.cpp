#include <gtest/gtest.h>

#include <deque>

#include "qsage/episode.hpp"
#include "qsage/error.hpp"
#include "qsage/stats.hpp"
#include "test_support.hpp"

using namespace qsage;
using nlohmann::json;

namespace {

const std::string kCorrect = "```python\nimport math\nprint(f'RESULT: {-math.sqrt(5):.8f}')\n```\n";
const std::string kWrong = "```python\nprint('partial sums: 1 2 3')\nprint('RESULT: 0.0')\n```\n";

/// Replies from a fixed list; entries equal to "!infra" raise a gateway error.
class ScriptedProvider : public Provider {
public:
  explicit ScriptedProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {
    config_.name = "scripted";
    config_.provider = "replay";
    config_.replay_dir = "/unused";
  }
  GenerationResult generate(const Conversation &, const EpisodeKey &) override {
    if (next_ >= replies_.size()) throw GatewayError(GatewayFailure::Replay, "exhausted", 1);
    const std::string r = replies_[next_++];
    if (r == "!infra") throw GatewayError(GatewayFailure::RetriesExhausted, "HTTP 503", 4);
    GenerationResult g;
    g.raw_text = r;
    g.extracted_code = extract_code(r);
    return g;
  }
  const ModelConfig &config() const override { return config_; }
  std::size_t calls() const { return next_; }

private:
  ModelConfig config_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

const TemplateSet &templates() {
  static const auto t = TemplateSet::load(test::data_path("templates"));
  return t;
}

EpisodeContext context(Provider &p, Variant v = Variant::Standard, int budget = 10) {
  static const ReferenceResult ref = solve_reference(test::bundled("tfim-2-1-1"));
  EpisodeContext ctx;
  ctx.instance = &test::bundled("tfim-2-1-1");
  ctx.reference = ref;
  ctx.provider = &p;
  ctx.variant = v;
  ctx.turn_budget = budget;
  ctx.templates = &templates();
  ctx.campaign_hash = "test";
  return ctx;
}

std::vector<std::string> success_at_turn(int k) {
  std::vector<std::string> r(static_cast<std::size_t>(k - 1), kWrong);
  r.push_back(kCorrect);
  return r;
}

} // namespace

TEST(Episode, SuccessTurnAndSuccessAtT) {
  for (int k = 1; k <= 10; ++k) {
    ScriptedProvider p(success_at_turn(k));
    const auto rec = run_episode(context(p));
    ASSERT_TRUE(rec.success_turn) << k;
    EXPECT_EQ(*rec.success_turn, k);
    EXPECT_EQ(rec.turns.size(), static_cast<std::size_t>(k));
    EXPECT_TRUE(rec.turns.back().verdict->passed());
    for (int t = 1; t <= 10; ++t) EXPECT_EQ(rec.succeeded_by(t), k <= t) << k << " " << t;
    const std::vector<EpisodeRecord> one{rec};
    const auto rates = success_at(one, 5);
    ASSERT_EQ(rates.size(), 1u);
    EXPECT_EQ(*rates.begin()->second, k <= 5 ? 1.0 : 0.0);
  }
}

TEST(Episode, BudgetExhaustion) {
  ScriptedProvider p(std::vector<std::string>(10, kWrong));
  const auto rec = run_episode(context(p, Variant::Standard, 4));
  EXPECT_FALSE(rec.success_turn);
  EXPECT_EQ(rec.turns.size(), 4u);
  EXPECT_EQ(p.calls(), 4u);
  for (const auto &t : rec.turns) {
    EXPECT_EQ(t.verdict->reason, FailReason::OutOfTolerance);
    EXPECT_EQ(t.cause->category, Category::NumErr);
  }
  EXPECT_EQ(rec.conversation.turns(), 4u);
}

TEST(Episode, StandardFeedbackCarriesOutputVerbatim) {
  ScriptedProvider p({kWrong, kCorrect});
  const auto rec = run_episode(context(p));
  ASSERT_EQ(rec.turns.size(), 2u);
  const auto &out1 = rec.turns[0].exec->stdout_text;
  EXPECT_EQ(out1, "partial sums: 1 2 3\nRESULT: 0.0\n");
  EXPECT_NE(rec.turns[1].prompt.find(out1), std::string::npos);
  EXPECT_EQ(rec.turns[1].prompt.find("-2.236"), std::string::npos);
  EXPECT_EQ(rec.turns[0].prompt.find("RESULT: 0.0"), std::string::npos);
}

TEST(Episode, InformedFeedbackAddsReference) {
  ScriptedProvider p({kWrong, kCorrect});
  const auto rec = run_episode(context(p, Variant::Informed));
  ASSERT_EQ(rec.turns.size(), 2u);
  EXPECT_NE(rec.turns[1].prompt.find(rec.turns[0].exec->stdout_text), std::string::npos);
  EXPECT_NE(rec.turns[1].prompt.find(format_number(rec.reference)), std::string::npos);
}

TEST(Episode, FailureDetailsReachFeedback) {
  ScriptedProvider p({"Just use VQE.", "```python\nimport qiskit_missing_pkg\n```", kCorrect});
  const auto rec = run_episode(context(p));
  ASSERT_EQ(rec.turns.size(), 3u);
  EXPECT_FALSE(rec.turns[0].code);
  EXPECT_FALSE(rec.turns[0].exec);
  EXPECT_EQ(rec.turns[0].cause->category, Category::Gen);
  EXPECT_NE(rec.turns[1].prompt.find("No Python script"), std::string::npos);
  EXPECT_EQ(rec.turns[1].cause->category, Category::Deps);
  EXPECT_NE(rec.turns[2].prompt.find("ModuleNotFoundError"), std::string::npos);
  EXPECT_NE(rec.turns[2].prompt.find("[exit status 1]"), std::string::npos);
}

TEST(Episode, InfraErrorsDoNotConsumeTurns) {
  ScriptedProvider p({"!infra", "!infra", kWrong, "!infra", kCorrect});
  const auto rec = run_episode(context(p));
  EXPECT_FALSE(rec.invalid);
  ASSERT_EQ(rec.success_turn, 2);
  EXPECT_EQ(rec.turns[0].infra_errors.size(), 2u);
  EXPECT_EQ(rec.turns[0].infra_errors[0].stage, "generate");
  EXPECT_EQ(rec.turns[0].infra_errors[0].attempts, 4);
  EXPECT_EQ(rec.turns[1].infra_errors.size(), 1u);
}

TEST(Episode, ConsecutiveInfraErrorsInvalidate) {
  ScriptedProvider p({kWrong, "!infra", "!infra", "!infra", kCorrect});
  const auto rec = run_episode(context(p));
  EXPECT_TRUE(rec.invalid);
  EXPECT_FALSE(rec.success_turn);
  ASSERT_EQ(rec.turns.size(), 2u);
  EXPECT_FALSE(rec.turns[1].verdict);
  EXPECT_EQ(rec.turns[1].infra_errors.size(), 3u);
}

TEST(Episode, MissingInterpreterIsInfrastructure) {
  ScriptedProvider p({kCorrect});
  auto ctx = context(p);
  ctx.execution.interpreter = {"no-such-python-here"};
  const auto rec = run_episode(ctx);
  EXPECT_TRUE(rec.invalid);
  EXPECT_EQ(rec.turns.at(0).infra_errors.at(0).stage, "execute");
}

TEST(Episode, TimeoutScaleAndOverride) {
  ExecutionSettings s;
  EXPECT_EQ(s.timeout_for(test::bundled("hubbard-2-1-8")), 3000.0);
  EXPECT_EQ(s.timeout_for(test::bundled("tfim-2-1-1")), 300.0);
  s.timeout_scale = 0.01;
  EXPECT_DOUBLE_EQ(s.timeout_for(test::bundled("tfim-2-1-1")), 3.0);
  s.timeout_override_s = 7.0;
  EXPECT_EQ(s.timeout_for(test::bundled("hubbard-2-1-8")), 7.0);
}

TEST(Episode, StallingScriptIsStoppedAndReported) {
  ScriptedProvider p({"```python\nimport time\nwhile True:\n    time.sleep(0.1)\n```", kCorrect});
  auto ctx = context(p);
  ctx.execution.timeout_override_s = 1.0;
  const auto rec = run_episode(ctx);
  ASSERT_EQ(rec.success_turn, 2);
  EXPECT_TRUE(rec.turns[0].exec->timed_out);
  EXPECT_EQ(rec.turns[0].cause->category, Category::Timeout);
  EXPECT_NE(rec.turns[1].prompt.find("time limit of 1 s"), std::string::npos);
}

TEST(Episode, PersistAndLoadRoundTrip) {
  test::TempDir dir;
  ScriptedProvider p({kWrong, kCorrect});
  auto ctx = context(p);
  ctx.episode_dir = dir / "ep";
  const auto rec = run_episode(ctx);
  for (const char *f : {"turn01/prompt.txt", "turn01/response.txt", "turn01/script.py", "turn01/stdout.txt",
                        "turn01/stderr.txt", "turn01/meta.json", "turn02/prompt.txt", "episode.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "ep" / f)) << f;
  EXPECT_EQ(read_text_file(dir / "ep/turn01/stdout.txt"), rec.turns[0].exec->stdout_text);
  const auto back = load_episode(dir / "ep/episode.json");
  EXPECT_EQ(back.to_json(), rec.to_json());
  EXPECT_EQ(back.to_json()["format"], kEpisodeFormat);
  EXPECT_EQ(load_episodes(dir.path()).size(), 1u);
}

TEST(Episode, ComparableJsonDropsWallClockFields) {
  ScriptedProvider p1({kWrong, kCorrect}), p2({kWrong, kCorrect});
  const auto a = run_episode(context(p1));
  const auto b = run_episode(context(p2));
  EXPECT_EQ(comparable_json(a), comparable_json(b));
  EXPECT_FALSE(comparable_json(a).contains("started_at"));
}

TEST(Campaign, ConfigJsonRoundTripAndValidation) {
  const auto c = CampaignConfig::load(test::data_path("configs/demo-replay.json"));
  EXPECT_EQ(c.instances_per_family, 2);
  EXPECT_EQ(c.repetitions, 3);
  EXPECT_EQ(c.turn_budget, 5);
  EXPECT_EQ(select_instances(c).size(), 4u);
  const auto again = CampaignConfig::from_json(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  json bad = c.to_json();
  bad["repetitions"] = 0;
  EXPECT_THROW(CampaignConfig::from_json(bad), Error);
  bad = c.to_json();
  bad["models"] = json::array();
  EXPECT_THROW(CampaignConfig::from_json(bad), Error);
}

TEST(Campaign, RunsSkipsExistingAndSharesReferences) {
  test::TempDir dir;
  auto c = CampaignConfig::load(test::data_path("configs/demo-replay.json"));
  c.repository = dir / "repo";
  c.instances_per_family = 1;
  c.repetitions = 2;
  c.turn_budget = 3;
  c.variants = {Variant::Standard};
  c.jobs = 2;
  std::size_t events = 0;
  const auto s = run_campaign(c, [&](const CampaignProgress &) { ++events; });
  EXPECT_EQ(s.planned, 4u);
  EXPECT_EQ(s.new_episodes, 4u);
  EXPECT_EQ(events, 4u);
  EXPECT_EQ(s.reference_solves, 2u);
  EXPECT_TRUE(s.errors.empty());
  EXPECT_TRUE(std::filesystem::exists(s.root / "campaign.json"));
  EXPECT_EQ(find_episode_files(s.root).size(), 4u);
  const auto again = run_campaign(c);
  EXPECT_EQ(again.new_episodes, 0u);
  EXPECT_EQ(again.skipped, 4u);
  EXPECT_EQ(again.campaign_hash, s.campaign_hash);
  c.turn_budget = 4;
  const auto changed = run_campaign(c);
  EXPECT_NE(changed.campaign_hash, s.campaign_hash);
  EXPECT_EQ(changed.new_episodes, 4u);
}

TEST(Campaign, MissingTokenFailsPreFlight) {
  auto c = CampaignConfig::load(test::data_path("configs/live-example.json"));
  c.models[0].auth_env = "QSAGE_TEST_NO_SUCH_TOKEN";
  ::unsetenv("QSAGE_TEST_NO_SUCH_TOKEN");
  test::TempDir dir;
  c.repository = dir / "repo";
  try {
    run_campaign(c);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    EXPECT_NE(std::string(e.what()).find("QSAGE_TEST_NO_SUCH_TOKEN"), std::string::npos);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "repo"));
}

TEST(Campaign, EpisodeDirectoryLayout) {
  const auto d = episode_dir("root", test::bundled("tfim-2-1-1"), "demo", Variant::Informed, 3);
  EXPECT_EQ(d, std::filesystem::path("root/condensedmatter-tfim/tfim-2-1-1/demo/informed/rep3"));
}
