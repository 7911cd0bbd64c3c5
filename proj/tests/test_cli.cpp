#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "json.hpp"
#include "test_paths.hpp"

using qsage::test::TempDir;

namespace {

struct Run {
  int status = -1;
  std::string out; ///< stdout and stderr together
};

Run cli(const std::string &args, const std::string &cwd = "") {
  std::string cmd = std::string(QSAGE_CLI_PATH) + " " + args + " 2>&1";
  if (!cwd.empty()) cmd = "cd '" + cwd + "' && " + cmd;
  Run r;
  FILE *p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

bool has(const std::string &hay, const std::string &needle) { return hay.find(needle) != std::string::npos; }

std::string config() { return qsage::test::data_path("configs/demo-replay.json").string(); }

} // namespace

TEST(Cli, HelpAndUsageErrors) {
  auto r = cli("--help");
  EXPECT_EQ(r.status, 0);
  for (const char *sub : {"validate", "solve", "episode", "campaign", "classify", "report"}) EXPECT_TRUE(has(r.out, sub));
  r = cli("campaign --help");
  EXPECT_EQ(r.status, 0);
  for (const char *flag : {"--config", "--repetitions", "--budget", "--variant", "--model", "--jobs", "--repository"})
    EXPECT_TRUE(has(r.out, flag)) << flag;
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("solve --bogus").status, 2);
  EXPECT_EQ(cli("campaign").status, 2);
  EXPECT_EQ(cli("report pie").status, 2);
  EXPECT_EQ(cli("solve").status, 2);
}

TEST(Cli, SolveExamples) {
  auto r = cli("solve --instance tfim-2-1-1");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "-2.2360680")) << r.out;
  r = cli("-q solve --instance maxcut-triangle");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "maxcut-triangle  2\n");
  r = cli("solve --family quantum/none --param L=2");
  EXPECT_EQ(r.status, 1);
  EXPECT_TRUE(has(r.out, "unknown family")) << r.out;
  r = cli("solve --family condensedmatter/tfim -p L=2 -p J=1");
  EXPECT_EQ(r.status, 1);
  r = cli("-v solve --family optimization/maxcut -p N=3 -p 'E=[[0,1,1],[1,2,1],[0,2,1]]'");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["value"], 2.0);
  EXPECT_EQ(cli("solve --instance missing-id").status, 1);
}

TEST(Cli, ValidateBundledAndBroken) {
  auto r = cli("validate");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "20 instances, 0 invalid"));
  TempDir dir;
  qsage::test::write(dir / "bad.json", R"({"instances": [{"id": "t", "descriptor": "condensedmatter/tfim", "params": {"L": 2}}]})");
  r = cli("validate --instances " + (dir / "bad.json").string());
  EXPECT_EQ(r.status, 1);
  EXPECT_TRUE(has(r.out, "'J'"));
}

TEST(Cli, CampaignRerunAndReports) {
  TempDir dir;
  const std::string cwd = dir.path().string();
  auto r = cli("campaign -c " + config() + " -I 1 -R 2 -T 3 --variant standard -m demo", cwd);
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(has(r.out, "4 new episodes")) << r.out;
  EXPECT_TRUE(has(r.out, "success@1")) << r.out;
  EXPECT_TRUE(has(r.out, "success@5"));
  EXPECT_TRUE(has(r.out, "success@10"));
  std::size_t episodes = 0;
  for (const auto &e : std::filesystem::recursive_directory_iterator(dir / "qsage-out/repo"))
    episodes += e.path().filename() == "episode.json";
  EXPECT_EQ(episodes, 4u);

  r = cli("campaign -c " + config() + " -I 1 -R 2 -T 3 --variant standard", cwd);
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "0 new episodes")) << r.out;

  r = cli("report success", cwd);
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "success@1"));
  r = cli("report causes", cwd);
  EXPECT_EQ(r.status, 0);
  for (const char *col : {"NumErr", "Timeout", "API", "Deps", "Type", "Gen", "Other"}) EXPECT_TRUE(has(r.out, col));
  r = cli("report durations", cwd);
  EXPECT_EQ(r.status, 0);
  const auto series = qsage::test::read(dir / "qsage-out/reports/duration_series.csv");
  EXPECT_TRUE(has(series, "turn1"));
  EXPECT_TRUE(has(series, "to_success"));
  EXPECT_EQ(cli("report success -r " + (dir / "nothing").string()).status, 1);
}

TEST(Cli, CampaignPreFlightNamesMissingToken) {
  TempDir dir;
  const auto live = qsage::test::data_path("configs/live-example.json").string();
  const auto r = cli("campaign -c " + live, dir.path().string() + "' && unset OPENAI_API_KEY && cd '" + dir.path().string());
  EXPECT_EQ(r.status, 1);
  EXPECT_TRUE(has(r.out, "OPENAI_API_KEY")) << r.out;
  EXPECT_FALSE(std::filesystem::exists(dir / "qsage-out"));
}

TEST(Cli, EpisodeAndClassify) {
  TempDir dir;
  const std::string cwd = dir.path().string();
  auto r = cli("episode -c " + config() + " -i tfim-2-1-1 --variant informed -o ep", cwd);
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(has(r.out, "turn 1: fail (execution-failure, Deps)")) << r.out;
  EXPECT_TRUE(has(r.out, "success at turn 2"));
  r = cli("classify --episode ep/episode.json", cwd);
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "turn 1: Deps (matched \"ModuleNotFoundError\")")) << r.out;
  EXPECT_TRUE(has(r.out, "turn 2: pass"));
  r = cli("classify ep/turn01/stderr.txt", cwd);
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(has(r.out, "Deps"));
  r = cli("classify --timed-out", cwd);
  EXPECT_EQ(r.out, "Timeout\n");
  qsage::test::write(dir / "out.txt", "RESULT: 9\n");
  r = cli("classify --stdout out.txt --exit-status 0", cwd);
  EXPECT_EQ(r.out, "NumErr\n");
  EXPECT_EQ(cli("classify", cwd).status, 2);
}
