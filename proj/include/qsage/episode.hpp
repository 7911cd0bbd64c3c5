#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsage/adjudicator.hpp"
#include "qsage/gateway.hpp"
#include "qsage/prompts.hpp"
#include "qsage/reference.hpp"
#include "qsage/registry.hpp"
#include "qsage/sandbox.hpp"

namespace qsage {

enum class Variant { Standard, Informed };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// A failed gateway or runner call; it does not consume a turn.
struct InfraError {
  std::string stage; ///< "generate" or "execute"
  std::string kind;
  std::string message;
  int attempts = 0;

  nlohmann::json to_json() const;
  static InfraError from_json(const nlohmann::json &j);
  friend bool operator==(const InfraError &, const InfraError &) = default;
};

struct TurnRecord {
  int index = 0; ///< 1-based
  std::string prompt;
  std::string raw_response;
  std::optional<std::string> code;
  std::optional<ExecutionResult> exec;
  std::optional<Verdict> verdict;
  std::optional<FailureCause> cause;
  /// Text handed to the next feedback prompt.
  std::string run_output;
  double wall_time_s = 0.0;
  double llm_latency_s = 0.0;
  int llm_attempts = 0;
  std::vector<InfraError> infra_errors;
  nlohmann::json provider_metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  static TurnRecord from_json(const nlohmann::json &j);
};

struct EpisodeRecord {
  std::string campaign_hash;
  std::string instance_id;
  std::string descriptor;
  std::string instance_hash;
  std::string model;
  Variant variant = Variant::Standard;
  int repetition = 1;
  int turn_budget = 10;
  double reference = 0.0;
  std::string reference_solver;
  double timeout_s = 0.0;
  std::vector<TurnRecord> turns;
  std::optional<int> success_turn;
  bool invalid = false;
  std::string invalid_reason;
  double total_duration_s = 0.0;
  double turn1_duration_s = 0.0;
  std::string started_at;
  std::string finished_at;
  Conversation conversation;

  bool succeeded_by(int t) const { return success_turn && *success_turn <= t; }
  nlohmann::json to_json() const;
  static EpisodeRecord from_json(const nlohmann::json &j);
};

/// Record JSON without wall-clock fields (timestamps, durations, latencies).
nlohmann::json comparable_json(const EpisodeRecord &record);

constexpr const char *kEpisodeFormat = "qsage-episode/1";

struct ExecutionSettings {
  std::vector<std::string> interpreter{"python3"};
  double timeout_scale = 1.0;
  std::optional<double> timeout_override_s;
  std::uint64_t memory_bytes = std::uint64_t{8} << 30;
  bool isolate_network = true;
  bool lenient_parse = false;
  std::filesystem::path work_root;

  double timeout_for(const ProblemInstance &instance) const;
  nlohmann::json to_json() const;
};

struct EpisodeContext {
  const ProblemInstance *instance = nullptr;
  ReferenceResult reference;
  Provider *provider = nullptr;
  Variant variant = Variant::Standard;
  int turn_budget = 10;
  int repetition = 1;
  const TemplateSet *templates = nullptr;
  PromptContext prompt;
  std::string system_prompt;
  ExecutionSettings execution;
  const Taxonomy *taxonomy = nullptr;
  int infra_error_limit = 3;
  std::string campaign_hash;
  /// When set, per-turn artifacts and episode.json are written here.
  std::optional<std::filesystem::path> episode_dir;
};

/// Generate-execute-verify-iterate loop up to the turn budget.
EpisodeRecord run_episode(const EpisodeContext &ctx);

/// Writes turn artifacts then episode.json (each atomically).
void persist_episode(const EpisodeRecord &record, const std::filesystem::path &dir);
EpisodeRecord load_episode(const std::filesystem::path &episode_json);

struct CampaignConfig {
  std::filesystem::path instances_file;
  std::vector<std::string> instance_ids; ///< optional explicit selection
  std::vector<std::string> families;     ///< optional family filter
  int instances_per_family = 4;          ///< I
  int repetitions = 10;                  ///< R
  int turn_budget = 10;                  ///< T
  std::vector<ModelConfig> models;
  std::vector<Variant> variants{Variant::Standard, Variant::Informed};
  int jobs = 1;
  std::filesystem::path repository = "qsage-out/repo";
  std::filesystem::path templates_dir;
  std::filesystem::path taxonomy_file;
  ExecutionSettings execution;
  PromptContext prompt;
  std::string system_prompt;
  int infra_error_limit = 3;

  void validate() const;
  nlohmann::json to_json() const;
  static CampaignConfig from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
  static CampaignConfig load(const std::filesystem::path &path);
};

/// Instances selected by the config: at most I per family, file order.
std::vector<ProblemInstance> select_instances(const CampaignConfig &config);

/// SHA-256 over instances, templates, model configs, T and execution settings.
std::string campaign_hash(const CampaignConfig &config, const std::vector<ProblemInstance> &instances,
                          const TemplateSet &templates);

std::filesystem::path episode_dir(const std::filesystem::path &campaign_root,
                                  const ProblemInstance &instance, const std::string &model,
                                  Variant variant, int repetition);

struct CampaignProgress {
  std::size_t done = 0;
  std::size_t total = 0;
  const EpisodeRecord *record = nullptr; ///< null for skipped episodes
  std::filesystem::path path;
};

struct CampaignSummary {
  std::string campaign_hash;
  std::filesystem::path root;
  std::size_t planned = 0;
  std::size_t new_episodes = 0;
  std::size_t skipped = 0;
  std::size_t invalid = 0;
  std::size_t reference_solves = 0;
  std::vector<std::filesystem::path> records;
  std::vector<std::string> errors;

  nlohmann::json to_json() const;
};

/// Optional provider override (tests); default builds one per model config.
using ProviderFactory = std::function<std::unique_ptr<Provider>(const ModelConfig &)>;

CampaignSummary run_campaign(const CampaignConfig &config,
                             const std::function<void(const CampaignProgress &)> &progress = {},
                             const ProviderFactory &factory = {});

/// One episode of `instance_id` under a campaign's settings, outside the
/// campaign repository layout.
EpisodeRecord run_single_episode(const CampaignConfig &config, const std::string &instance_id,
                                 const std::string &model, Variant variant, int repetition,
                                 const std::optional<std::filesystem::path> &dir,
                                 const ProviderFactory &factory = {});

/// Every episode.json below `root`, sorted by path.
std::vector<std::filesystem::path> find_episode_files(const std::filesystem::path &root);
std::vector<EpisodeRecord> load_episodes(const std::filesystem::path &root);

std::string utc_timestamp();

} // namespace qsage
