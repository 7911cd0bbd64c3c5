#include "qsage/episode.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "qsage/error.hpp"
#include "qsage/util.hpp"

namespace qsage {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class T> json opt_json(const std::optional<T> &v) {
  return v ? v->to_json() : json(nullptr);
}

std::string run_output_text(const ExecutionResult &exec, const Verdict &verdict, double timeout_s) {
  std::string out = exec.stdout_text;
  if (!exec.stderr_text.empty()) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += exec.stderr_text;
  }
  if (!out.empty() && out.back() != '\n') out += '\n';
  if (out.empty()) out = "(no output)\n";
  if (exec.timed_out)
    out += "[execution stopped: time limit of " + format_number(timeout_s) + " s exceeded]\n";
  else if (exec.signal)
    out += "[terminated by signal " + std::to_string(*exec.signal) + "]\n";
  else if (exec.exit_status && *exec.exit_status != 0)
    out += "[exit status " + std::to_string(*exec.exit_status) + "]\n";
  else if (verdict.reason == FailReason::ParseFailure)
    out += "[no output line of the form RESULT: <value> was found]\n";
  return out;
}

std::string family_dir_name(const std::string &descriptor) {
  std::string s = descriptor;
  std::replace(s.begin(), s.end(), '/', '-');
  return s;
}

std::string safe_component(const std::string &s) {
  std::string out = s;
  for (char &c : out)
    if (c == '/' || c == '\\' || c == '\0') c = '_';
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string turn_dir_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "turn%02d", index);
  return buf;
}

} // namespace

std::string_view to_string(Variant v) { return v == Variant::Informed ? "informed" : "standard"; }

Variant parse_variant(std::string_view s) {
  if (s == "standard") return Variant::Standard;
  if (s == "informed") return Variant::Informed;
  throw Error(ErrorCode::Parse, "unknown variant '" + std::string(s) + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json InfraError::to_json() const {
  return {{"stage", stage}, {"kind", kind}, {"message", message}, {"attempts", attempts}};
}

InfraError InfraError::from_json(const json &j) {
  return {j.at("stage").get<std::string>(), j.at("kind").get<std::string>(),
          j.at("message").get<std::string>(), j.value("attempts", 0)};
}

json TurnRecord::to_json() const {
  return {{"index", index},
          {"prompt", prompt},
          {"raw_response", raw_response},
          {"code", code ? json(*code) : json(nullptr)},
          {"execution", opt_json(exec)},
          {"verdict", opt_json(verdict)},
          {"cause", opt_json(cause)},
          {"run_output", run_output},
          {"wall_time_s", wall_time_s},
          {"llm_latency_s", llm_latency_s},
          {"llm_attempts", llm_attempts},
          {"infra_errors", [&] {
             json a = json::array();
             for (const auto &e : infra_errors) a.push_back(e.to_json());
             return a;
           }()},
          {"provider_metadata", provider_metadata}};
}

TurnRecord TurnRecord::from_json(const json &j) {
  TurnRecord t;
  t.index = j.at("index").get<int>();
  t.prompt = j.at("prompt").get<std::string>();
  t.raw_response = j.at("raw_response").get<std::string>();
  if (!j.at("code").is_null()) t.code = j.at("code").get<std::string>();
  if (!j.at("execution").is_null()) t.exec = ExecutionResult::from_json(j.at("execution"));
  if (!j.at("verdict").is_null()) t.verdict = Verdict::from_json(j.at("verdict"));
  if (!j.at("cause").is_null()) t.cause = FailureCause::from_json(j.at("cause"));
  t.run_output = j.value("run_output", "");
  t.wall_time_s = j.value("wall_time_s", 0.0);
  t.llm_latency_s = j.value("llm_latency_s", 0.0);
  t.llm_attempts = j.value("llm_attempts", 0);
  for (const auto &e : j.value("infra_errors", json::array())) t.infra_errors.push_back(InfraError::from_json(e));
  t.provider_metadata = j.value("provider_metadata", json::object());
  return t;
}

json EpisodeRecord::to_json() const {
  json turns_json = json::array();
  for (const auto &t : turns) turns_json.push_back(t.to_json());
  return {{"format", kEpisodeFormat},
          {"campaign_hash", campaign_hash},
          {"instance_id", instance_id},
          {"descriptor", descriptor},
          {"instance_hash", instance_hash},
          {"model", model},
          {"variant", std::string(to_string(variant))},
          {"repetition", repetition},
          {"turn_budget", turn_budget},
          {"reference", reference},
          {"reference_solver", reference_solver},
          {"timeout_s", timeout_s},
          {"success_turn", success_turn ? json(*success_turn) : json(nullptr)},
          {"invalid", invalid},
          {"invalid_reason", invalid_reason},
          {"total_duration_s", total_duration_s},
          {"turn1_duration_s", turn1_duration_s},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"turns", turns_json},
          {"conversation", conversation.to_json()}};
}

EpisodeRecord EpisodeRecord::from_json(const json &j) {
  if (j.value("format", "") != kEpisodeFormat)
    throw Error(ErrorCode::Parse, std::string("episode record: expected format ") + kEpisodeFormat);
  EpisodeRecord r;
  try {
    r.campaign_hash = j.at("campaign_hash").get<std::string>();
    r.instance_id = j.at("instance_id").get<std::string>();
    r.descriptor = j.at("descriptor").get<std::string>();
    r.instance_hash = j.value("instance_hash", "");
    r.model = j.at("model").get<std::string>();
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.repetition = j.at("repetition").get<int>();
    r.turn_budget = j.at("turn_budget").get<int>();
    r.reference = j.at("reference").get<double>();
    r.reference_solver = j.value("reference_solver", "");
    r.timeout_s = j.value("timeout_s", 0.0);
    if (!j.at("success_turn").is_null()) r.success_turn = j.at("success_turn").get<int>();
    r.invalid = j.value("invalid", false);
    r.invalid_reason = j.value("invalid_reason", "");
    r.total_duration_s = j.value("total_duration_s", 0.0);
    r.turn1_duration_s = j.value("turn1_duration_s", 0.0);
    r.started_at = j.value("started_at", "");
    r.finished_at = j.value("finished_at", "");
    for (const auto &t : j.at("turns")) r.turns.push_back(TurnRecord::from_json(t));
    r.conversation = Conversation::from_json(j.value("conversation", json::array()));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, std::string("episode record: ") + e.what());
  }
  return r;
}

json comparable_json(const EpisodeRecord &record) {
  json j = record.to_json();
  for (const char *k : {"started_at", "finished_at", "total_duration_s", "turn1_duration_s"}) j.erase(k);
  for (auto &t : j["turns"]) {
    t.erase("wall_time_s");
    t.erase("llm_latency_s");
    if (!t["execution"].is_null()) t["execution"].erase("duration_s");
  }
  return j;
}

double ExecutionSettings::timeout_for(const ProblemInstance &instance) const {
  if (timeout_override_s) return *timeout_override_s;
  return instance.timeout_s * timeout_scale;
}

json ExecutionSettings::to_json() const {
  return {{"interpreter", interpreter},
          {"timeout_scale", timeout_scale},
          {"timeout_override_s", timeout_override_s ? json(*timeout_override_s) : json(nullptr)},
          {"memory_bytes", memory_bytes},
          {"isolate_network", isolate_network},
          {"lenient_parse", lenient_parse}};
}

EpisodeRecord run_episode(const EpisodeContext &ctx) {
  if (!ctx.instance || !ctx.provider || !ctx.templates)
    throw Error(ErrorCode::InvalidArgument, "episode context is incomplete");
  if (ctx.turn_budget < 1) throw Error(ErrorCode::InvalidArgument, "turn budget must be >= 1");
  const ProblemInstance &in = *ctx.instance;
  const Taxonomy &taxonomy = ctx.taxonomy ? *ctx.taxonomy : Taxonomy::builtin();
  const PromptTemplate &feedback =
      ctx.variant == Variant::Informed ? ctx.templates->informed_feedback : ctx.templates->feedback;
  const double timeout_s = ctx.execution.timeout_for(in);

  EpisodeRecord rec;
  rec.campaign_hash = ctx.campaign_hash;
  rec.instance_id = in.id;
  rec.descriptor = in.descriptor;
  rec.instance_hash = content_hash(in);
  rec.model = ctx.provider->config().name;
  rec.variant = ctx.variant;
  rec.repetition = ctx.repetition;
  rec.turn_budget = ctx.turn_budget;
  rec.reference = ctx.reference.value;
  rec.reference_solver = ctx.reference.solver;
  rec.timeout_s = timeout_s;
  rec.started_at = utc_timestamp();

  const EpisodeKey key{in.id, rec.model, std::string(to_string(ctx.variant)), ctx.repetition};
  Conversation conv(ctx.system_prompt);
  std::string prompt = render_coder(in, ctx.templates->coder_for(in), ctx.prompt);
  int consecutive_infra = 0;

  auto infra = [&](TurnRecord &tr, InfraError e) {
    tr.infra_errors.push_back(std::move(e));
    if (++consecutive_infra >= ctx.infra_error_limit) {
      rec.invalid = true;
      rec.invalid_reason = std::to_string(consecutive_infra) + " consecutive infrastructure errors";
      return false;
    }
    return true;
  };

  for (int turn = 1; turn <= ctx.turn_budget && !rec.invalid; ++turn) {
    TurnRecord tr;
    tr.index = turn;
    tr.prompt = prompt;
    const auto t0 = Clock::now();
    Conversation pending = conv;
    pending.push(Role::User, prompt);

    std::optional<GenerationResult> gen;
    while (!gen) {
      try {
        gen = ctx.provider->generate(pending, key);
      } catch (const GatewayError &e) {
        if (!infra(tr, {"generate", std::string(to_string(e.kind())), e.what(), e.attempts()})) break;
      } catch (const Error &e) {
        if (e.code() != ErrorCode::Infrastructure) throw;
        if (!infra(tr, {"generate", "infrastructure", e.what(), 0})) break;
      }
    }
    if (!gen) {
      tr.wall_time_s = since(t0);
      rec.turns.push_back(std::move(tr));
      break;
    }
    tr.raw_response = gen->raw_text;
    tr.code = gen->extracted_code;
    tr.llm_latency_s = gen->latency_s;
    tr.llm_attempts = gen->attempts;
    tr.provider_metadata = gen->metadata;
    conv = append_turn(conv, prompt, gen->raw_text);

    if (!tr.code) {
      tr.verdict = judge_no_code(ctx.reference.value);
      tr.cause = classify(nullptr, *tr.verdict, taxonomy);
      tr.run_output = "No Python script could be found in the reply.\n";
    } else {
      RunSpec spec;
      spec.script = *tr.code;
      spec.interpreter = ctx.execution.interpreter;
      spec.work_root = ctx.execution.work_root;
      spec.timeout_s = timeout_s;
      spec.memory_bytes = ctx.execution.memory_bytes;
      spec.isolate_network = ctx.execution.isolate_network;
      while (!tr.exec) {
        try {
          tr.exec = run_script(spec);
        } catch (const Error &e) {
          if (e.code() != ErrorCode::Infrastructure) throw;
          if (!infra(tr, {"execute", "infrastructure", e.what(), 0})) break;
        }
      }
      if (!tr.exec) {
        tr.wall_time_s = since(t0);
        rec.turns.push_back(std::move(tr));
        break;
      }
      tr.verdict = judge(*tr.exec, ctx.reference.value, in.tolerance, ctx.execution.lenient_parse);
      if (!tr.verdict->passed()) tr.cause = classify(&*tr.exec, *tr.verdict, taxonomy);
      tr.run_output = run_output_text(*tr.exec, *tr.verdict, timeout_s);
    }
    consecutive_infra = 0;
    tr.wall_time_s = since(t0);
    const bool passed = tr.verdict->passed();
    rec.turns.push_back(std::move(tr));
    if (passed) {
      rec.success_turn = turn;
      break;
    }
    if (turn < ctx.turn_budget) {
      const auto expected = ctx.variant == Variant::Informed ? std::optional<double>(ctx.reference.value)
                                                             : std::nullopt;
      prompt = render_feedback(conv, rec.turns.back().run_output, feedback, expected);
    }
  }

  rec.conversation = conv;
  for (const auto &t : rec.turns) rec.total_duration_s += t.wall_time_s;
  rec.turn1_duration_s = rec.turns.empty() ? 0.0 : rec.turns.front().wall_time_s;
  rec.finished_at = utc_timestamp();
  if (ctx.episode_dir) persist_episode(rec, *ctx.episode_dir);
  return rec;
}

void persist_episode(const EpisodeRecord &record, const fs::path &dir) {
  for (const auto &t : record.turns) {
    const fs::path td = dir / turn_dir_name(t.index);
    write_file_atomic(td / "prompt.txt", t.prompt);
    write_file_atomic(td / "response.txt", t.raw_response);
    if (t.code) write_file_atomic(td / "script.py", *t.code);
    json meta = t.to_json();
    meta.erase("prompt");
    meta.erase("raw_response");
    meta.erase("code");
    if (t.exec) {
      write_file_atomic(td / "stdout.txt", t.exec->stdout_text);
      write_file_atomic(td / "stderr.txt", t.exec->stderr_text);
      meta["execution"].erase("stdout");
      meta["execution"].erase("stderr");
    }
    write_file_atomic(td / "meta.json", meta.dump(2) + "\n");
  }
  write_file_atomic(dir / "episode.json", record.to_json().dump(2) + "\n");
}

EpisodeRecord load_episode(const fs::path &episode_json) {
  json j;
  try {
    j = json::parse(read_text_file(episode_json));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, episode_json.string() + ": " + e.what());
  }
  return EpisodeRecord::from_json(j);
}

void CampaignConfig::validate() const {
  if (instances_per_family < 1 || repetitions < 1 || turn_budget < 1)
    throw Error(ErrorCode::Config, "instances_per_family, repetitions and turn_budget must be >= 1");
  if (models.empty()) throw Error(ErrorCode::Config, "campaign has no models");
  if (variants.empty()) throw Error(ErrorCode::Config, "campaign has no variants");
  if (jobs < 1) throw Error(ErrorCode::Config, "jobs must be >= 1");
  if (infra_error_limit < 1) throw Error(ErrorCode::Config, "infra_error_limit must be >= 1");
  if (!(execution.timeout_scale > 0)) throw Error(ErrorCode::Config, "timeout_scale must be positive");
  if (execution.timeout_override_s && !(*execution.timeout_override_s > 0))
    throw Error(ErrorCode::Config, "timeout_override_s must be positive");
  if (execution.interpreter.empty()) throw Error(ErrorCode::Config, "interpreter is empty");
  std::vector<std::string> names;
  for (const auto &m : models) {
    m.validate();
    if (std::find(names.begin(), names.end(), m.name) != names.end())
      throw Error(ErrorCode::Config, "duplicate model name '" + m.name + "'");
    names.push_back(m.name);
  }
}

json CampaignConfig::to_json() const {
  json models_json = json::array();
  for (const auto &m : models) models_json.push_back(m.to_json());
  json variants_json = json::array();
  for (auto v : variants) variants_json.push_back(std::string(to_string(v)));
  json exec = execution.to_json();
  exec["work_root"] = execution.work_root.generic_string();
  return {{"format", "qsage-campaign/1"},
          {"instances", instances_file.generic_string()},
          {"instance_ids", instance_ids},
          {"families", families},
          {"instances_per_family", instances_per_family},
          {"repetitions", repetitions},
          {"turn_budget", turn_budget},
          {"models", models_json},
          {"variants", variants_json},
          {"jobs", jobs},
          {"repository", repository.generic_string()},
          {"templates", templates_dir.generic_string()},
          {"taxonomy", taxonomy_file.generic_string()},
          {"execution", exec},
          {"stack", prompt.stack},
          {"output_format", prompt.output_format},
          {"system_prompt", system_prompt},
          {"infra_error_limit", infra_error_limit}};
}

CampaignConfig CampaignConfig::from_json(const json &j, const fs::path &base_dir) {
  CampaignConfig c;
  auto path_of = [&](const json &v) {
    fs::path p = v.get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p.lexically_normal();
  };
  try {
    if (j.value("format", "qsage-campaign/1") != "qsage-campaign/1")
      throw Error(ErrorCode::Config, "campaign config: expected format qsage-campaign/1");
    if (j.contains("instances")) c.instances_file = path_of(j.at("instances"));
    c.instance_ids = j.value("instance_ids", c.instance_ids);
    c.families = j.value("families", c.families);
    c.instances_per_family = j.value("instances_per_family", c.instances_per_family);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.turn_budget = j.value("turn_budget", c.turn_budget);
    for (const auto &m : j.at("models")) c.models.push_back(ModelConfig::from_json(m, base_dir));
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto &v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("repository")) c.repository = path_of(j.at("repository"));
    if (j.contains("templates")) c.templates_dir = path_of(j.at("templates"));
    if (j.contains("taxonomy")) c.taxonomy_file = path_of(j.at("taxonomy"));
    if (j.contains("execution")) {
      const auto &e = j.at("execution");
      c.execution.interpreter = e.value("interpreter", c.execution.interpreter);
      c.execution.timeout_scale = e.value("timeout_scale", c.execution.timeout_scale);
      if (e.contains("timeout_override_s") && !e.at("timeout_override_s").is_null())
        c.execution.timeout_override_s = e.at("timeout_override_s").get<double>();
      c.execution.memory_bytes = e.value("memory_bytes", c.execution.memory_bytes);
      c.execution.isolate_network = e.value("isolate_network", c.execution.isolate_network);
      c.execution.lenient_parse = e.value("lenient_parse", c.execution.lenient_parse);
      if (e.contains("work_root") && !e.at("work_root").get<std::string>().empty())
        c.execution.work_root = path_of(e.at("work_root"));
    }
    c.prompt.stack = j.value("stack", c.prompt.stack);
    c.prompt.output_format = j.value("output_format", c.prompt.output_format);
    c.system_prompt = j.value("system_prompt", c.system_prompt);
    c.infra_error_limit = j.value("infra_error_limit", c.infra_error_limit);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Config, std::string("campaign config: ") + e.what());
  }
  c.validate();
  return c;
}

CampaignConfig CampaignConfig::load(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

std::vector<ProblemInstance> select_instances(const CampaignConfig &config) {
  const fs::path file =
      config.instances_file.empty() ? data_dir() / "instances" / "bundled.json" : config.instances_file;
  const auto all = load_instances(file);
  std::vector<ProblemInstance> out;
  if (!config.instance_ids.empty()) {
    for (const auto &id : config.instance_ids) {
      auto it = std::find_if(all.begin(), all.end(), [&](const auto &i) { return i.id == id; });
      if (it == all.end()) throw Error(ErrorCode::NotFound, "instance '" + id + "' not in " + file.string());
      out.push_back(*it);
    }
    return out;
  }
  std::map<std::string, int> per_family;
  for (const auto &in : all) {
    if (!config.families.empty() &&
        std::find(config.families.begin(), config.families.end(), in.descriptor) == config.families.end())
      continue;
    if (per_family[in.descriptor]++ < config.instances_per_family) out.push_back(in);
  }
  return out;
}

std::string campaign_hash(const CampaignConfig &config, const std::vector<ProblemInstance> &instances,
                          const TemplateSet &templates) {
  json j;
  for (const auto &in : instances) j["instances"].push_back(content_hash(in));
  j["templates"] = sha256_hex(templates.fingerprint());
  for (const auto &m : config.models) j["models"].push_back(m.to_json());
  j["turn_budget"] = config.turn_budget;
  j["execution"] = config.execution.to_json();
  j["prompt"] = {{"stack", config.prompt.stack},
                 {"output_format", config.prompt.output_format},
                 {"system_prompt", config.system_prompt}};
  return sha256_hex(j.dump()).substr(0, 16);
}

fs::path episode_dir(const fs::path &campaign_root, const ProblemInstance &instance, const std::string &model,
                     Variant variant, int repetition) {
  return campaign_root / family_dir_name(instance.descriptor) / safe_component(instance.id) /
         safe_component(model) / std::string(to_string(variant)) / ("rep" + std::to_string(repetition));
}

json CampaignSummary::to_json() const {
  json paths = json::array();
  for (const auto &p : records) paths.push_back(p.generic_string());
  return {{"campaign_hash", campaign_hash}, {"root", root.generic_string()}, {"planned", planned},
          {"new_episodes", new_episodes},   {"skipped", skipped},            {"invalid", invalid},
          {"reference_solves", reference_solves}, {"records", paths},      {"errors", errors}};
}

CampaignSummary run_campaign(const CampaignConfig &config,
                             const std::function<void(const CampaignProgress &)> &progress,
                             const ProviderFactory &factory) {
  config.validate();
  for (const auto &m : config.models)
    if (m.provider == "chat") {
      const char *token = std::getenv(m.auth_env.c_str());
      if (!token || !*token)
        throw Error(ErrorCode::Config,
                    "model '" + m.name + "': environment variable " + m.auth_env + " is not set");
    }

  const auto instances = select_instances(config);
  if (instances.empty()) throw Error(ErrorCode::Config, "campaign selects no instances");
  const TemplateSet templates =
      TemplateSet::load(config.templates_dir.empty() ? data_dir() / "templates" : config.templates_dir);
  for (const auto &in : instances) templates.coder_for(in);
  const fs::path tax_file = config.taxonomy_file.empty() ? data_dir() / "taxonomy.json" : config.taxonomy_file;
  const Taxonomy taxonomy = fs::exists(tax_file) ? Taxonomy::load(tax_file) : Taxonomy::builtin();

  CampaignSummary summary;
  summary.campaign_hash = campaign_hash(config, instances, templates);
  summary.root = config.repository / summary.campaign_hash;
  fs::create_directories(summary.root);
  {
    json manifest = config.to_json();
    manifest.erase("jobs");
    manifest["campaign_hash"] = summary.campaign_hash;
    json ids = json::array();
    for (const auto &in : instances) ids.push_back(in.id);
    manifest["selected_instances"] = ids;
    write_file_atomic(summary.root / "campaign.json", manifest.dump(2) + "\n");
  }

  std::vector<std::unique_ptr<Provider>> providers;
  for (const auto &m : config.models) providers.push_back(factory ? factory(m) : make_provider(m));

  struct Job {
    const ProblemInstance *instance;
    std::size_t model;
    Variant variant;
    int rep;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (std::size_t mi = 0; mi < config.models.size(); ++mi)
    for (const auto variant : config.variants)
      for (const auto &in : instances)
        for (int rep = 1; rep <= config.repetitions; ++rep)
          jobs.push_back({&in, mi, variant, rep,
                          episode_dir(summary.root, in, config.models[mi].name, variant, rep)});
  summary.planned = jobs.size();

  ReferenceCache cache;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  summary.records.resize(jobs.size());

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job &job = jobs[i];
      const fs::path file = job.dir / "episode.json";
      std::optional<EpisodeRecord> rec;
      bool skipped = false;
      std::string error;
      try {
        if (fs::exists(file)) {
          const EpisodeRecord existing = load_episode(file);
          if (existing.campaign_hash == summary.campaign_hash) {
            skipped = true;
            rec = existing;
          }
        }
        if (!skipped) {
          EpisodeContext ctx;
          ctx.instance = job.instance;
          ctx.reference = cache.get(*job.instance);
          ctx.provider = providers[job.model].get();
          ctx.variant = job.variant;
          ctx.turn_budget = config.turn_budget;
          ctx.repetition = job.rep;
          ctx.templates = &templates;
          ctx.prompt = config.prompt;
          ctx.system_prompt = config.system_prompt;
          ctx.execution = config.execution;
          ctx.taxonomy = &taxonomy;
          ctx.infra_error_limit = config.infra_error_limit;
          ctx.campaign_hash = summary.campaign_hash;
          ctx.episode_dir = job.dir;
          rec = run_episode(ctx);
        }
      } catch (const std::exception &e) {
        error = job.dir.lexically_relative(summary.root).generic_string() + ": " + e.what();
      }
      std::lock_guard lock(mutex);
      ++done;
      if (!error.empty()) {
        summary.errors.push_back(error);
      } else {
        summary.records[i] = file;
        if (skipped) ++summary.skipped;
        else ++summary.new_episodes;
        if (rec->invalid) ++summary.invalid;
      }
      if (progress) progress({done, jobs.size(), skipped || !rec ? nullptr : &*rec, file});
    }
  };

  const int n_threads = std::min<int>(config.jobs, static_cast<int>(jobs.size()));
  std::vector<std::thread> threads;
  for (int t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto &t : threads) t.join();

  std::erase_if(summary.records, [](const fs::path &p) { return p.empty(); });
  std::sort(summary.errors.begin(), summary.errors.end());
  summary.reference_solves = cache.solves();
  return summary;
}

EpisodeRecord run_single_episode(const CampaignConfig &config, const std::string &instance_id,
                                 const std::string &model, Variant variant, int repetition,
                                 const std::optional<fs::path> &dir, const ProviderFactory &factory) {
  config.validate();
  const fs::path file =
      config.instances_file.empty() ? data_dir() / "instances" / "bundled.json" : config.instances_file;
  const auto all = load_instances(file);
  auto it = std::find_if(all.begin(), all.end(), [&](const auto &i) { return i.id == instance_id; });
  if (it == all.end()) throw Error(ErrorCode::NotFound, "instance '" + instance_id + "' not in " + file.string());
  auto mit = std::find_if(config.models.begin(), config.models.end(), [&](const auto &m) { return m.name == model; });
  if (mit == config.models.end()) throw Error(ErrorCode::NotFound, "model '" + model + "' not in campaign config");
  if (mit->provider == "chat") {
    const char *token = std::getenv(mit->auth_env.c_str());
    if (!token || !*token)
      throw Error(ErrorCode::Config, "model '" + mit->name + "': environment variable " + mit->auth_env + " is not set");
  }
  const TemplateSet templates =
      TemplateSet::load(config.templates_dir.empty() ? data_dir() / "templates" : config.templates_dir);
  const fs::path tax_file = config.taxonomy_file.empty() ? data_dir() / "taxonomy.json" : config.taxonomy_file;
  const Taxonomy taxonomy = fs::exists(tax_file) ? Taxonomy::load(tax_file) : Taxonomy::builtin();
  auto provider = factory ? factory(*mit) : make_provider(*mit);

  EpisodeContext ctx;
  ctx.instance = &*it;
  ctx.reference = solve_reference(*it);
  ctx.provider = provider.get();
  ctx.variant = variant;
  ctx.turn_budget = config.turn_budget;
  ctx.repetition = repetition;
  ctx.templates = &templates;
  ctx.prompt = config.prompt;
  ctx.system_prompt = config.system_prompt;
  ctx.execution = config.execution;
  ctx.taxonomy = &taxonomy;
  ctx.infra_error_limit = config.infra_error_limit;
  ctx.campaign_hash = campaign_hash(config, {*it}, templates);
  ctx.episode_dir = dir;
  return run_episode(ctx);
}

std::vector<fs::path> find_episode_files(const fs::path &root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "episode.json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EpisodeRecord> load_episodes(const fs::path &root) {
  std::vector<EpisodeRecord> out;
  for (const auto &p : find_episode_files(root)) out.push_back(load_episode(p));
  return out;
}

} // namespace qsage
