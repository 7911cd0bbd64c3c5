// qsage command-line driver over the C API.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsage/qsage.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

int verbosity = 0; // -1 quiet, 0 normal, 1 verbose

struct Failure {
  qsage_status status;
  std::string message;
};

std::string take(char *s) {
  std::string out = s ? s : "";
  qsage_string_free(s);
  return out;
}

void check(qsage_status st) {
  if (st != QSAGE_OK) throw Failure{st, qsage_last_error()};
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{QSAGE_E_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_instances() {
  char *p = nullptr;
  check(qsage_data_dir(&p));
  return (fs::path(take(p)) / "instances" / "bundled.json").string();
}

std::string format_value(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::round(v) && std::fabs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

struct InstanceSet {
  qsage_instance_set *set = nullptr;
  ~InstanceSet() { qsage_instances_free(set); }
};

struct Campaign {
  qsage_campaign *c = nullptr;
  ~Campaign() { qsage_campaign_free(c); }
};

// ---- validate ---------------------------------------------------------------

int cmd_validate(const std::string &path) {
  char *out = nullptr;
  check(qsage_instances_check(path.c_str(), &out));
  const json report = json::parse(take(out));
  int bad = 0;
  for (const auto &row : report) {
    const std::string id = row.value("id", "");
    const std::string label = id.empty() ? "#" + std::to_string(row.at("index").get<int>()) : id;
    if (row.at("ok").get<bool>()) {
      if (verbosity >= 0) std::cout << label << ": ok\n";
    } else {
      ++bad;
      for (const auto &v : row.at("violations")) std::cout << label << ": " << v.get<std::string>() << "\n";
    }
  }
  std::cout << report.size() << " instances, " << bad << " invalid\n";
  return bad ? kExitDomain : kExitOk;
}

// ---- solve ------------------------------------------------------------------

json param_value(const std::string &text) {
  if (!text.empty() && (text.front() == '[' || text.front() == '{')) return json::parse(text);
  std::size_t pos = 0;
  try {
    const long long i = std::stoll(text, &pos);
    if (pos == text.size()) return i;
  } catch (const std::exception &) {
  }
  try {
    const double d = std::stod(text, &pos);
    if (pos == text.size()) return d;
  } catch (const std::exception &) {
  }
  return text;
}

void print_solution(const json &r) {
  if (verbosity > 0) {
    std::cout << r.dump(2) << "\n";
    return;
  }
  std::cout << r.at("id").get<std::string>() << "  " << format_value(r.at("value").get<double>());
  if (verbosity >= 0) {
    char t[32];
    std::snprintf(t, sizeof t, "%.3f", r.at("wall_time_s").get<double>());
    std::cout << "  (" << r.at("label").get<std::string>() << "; " << r.at("solver").get<std::string>() << ", " << t
              << " s)";
  }
  std::cout << "\n";
}

int cmd_solve(const std::string &instances, const std::vector<std::string> &ids, bool all,
              const std::string &family, const std::vector<std::string> &params) {
  InstanceSet set;
  if (!family.empty()) {
    json p = json::object();
    for (const auto &kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Failure{QSAGE_E_INVALID_ARGUMENT, "--param expects key=value, got '" + kv + "'"};
      p[kv.substr(0, eq)] = param_value(kv.substr(eq + 1));
    }
    char *d = nullptr;
    check(qsage_data_dir(&d));
    const std::string base = (fs::path(take(d)) / "integrals").string();
    const json doc{{"format", "qsage-instances/1"},
                   {"instances", json::array({{{"id", "adhoc"}, {"descriptor", family}, {"params", p}}})}};
    check(qsage_instances_parse(doc.dump().c_str(), base.c_str(), &set.set));
  } else {
    check(qsage_instances_load(instances.c_str(), &set.set));
  }
  std::vector<std::size_t> indices;
  if (!family.empty() || all) {
    for (std::size_t i = 0; i < qsage_instances_count(set.set); ++i) indices.push_back(i);
  } else {
    for (const auto &id : ids) {
      std::size_t idx = 0;
      check(qsage_instances_find(set.set, id.c_str(), &idx));
      indices.push_back(idx);
    }
  }
  for (auto idx : indices) {
    char *out = nullptr;
    check(qsage_solve(set.set, idx, &out));
    print_solution(json::parse(take(out)));
  }
  return kExitOk;
}

// ---- campaign / episode -------------------------------------------------------

struct Overrides {
  int repetitions = 0;
  int budget = 0;
  int per_family = 0;
  int jobs = 0;
  std::vector<std::string> variants;
  std::vector<std::string> models;
  std::string repository;
  double timeout_scale = 0.0;

  json to_json() const {
    json o = json::object();
    if (repetitions) o["repetitions"] = repetitions;
    if (budget) o["turn_budget"] = budget;
    if (per_family) o["instances_per_family"] = per_family;
    if (jobs) o["jobs"] = jobs;
    if (!variants.empty()) o["variants"] = variants;
    if (!models.empty()) o["models"] = models;
    if (!repository.empty()) o["repository"] = repository;
    if (timeout_scale > 0) o["timeout_scale"] = timeout_scale;
    return o;
  }
};

void load_campaign(Campaign &c, const std::string &config, const Overrides &o) {
  check(qsage_campaign_load(config.c_str(), &c.c));
  const json ov = o.to_json();
  if (!ov.empty()) check(qsage_campaign_override(c.c, ov.dump().c_str()));
}

void on_progress(const char *event, void *) {
  if (verbosity < 0) return;
  const json e = json::parse(event);
  std::cout << "[" << e.at("done").get<std::size_t>() << "/" << e.at("total").get<std::size_t>() << "] ";
  if (e.at("skipped").get<bool>()) {
    std::cout << e.at("path").get<std::string>() << ": already recorded\n";
  } else {
    std::cout << e.at("instance").get<std::string>() << " " << e.at("model").get<std::string>() << " "
              << e.at("variant").get<std::string>() << " rep" << e.at("repetition").get<int>() << ": ";
    if (e.at("invalid").get<bool>())
      std::cout << "invalid (infrastructure errors)";
    else if (!e.at("success_turn").is_null())
      std::cout << "success at turn " << e.at("success_turn").get<int>();
    else
      std::cout << "no success in " << e.at("turns").get<int>() << " turns";
    std::cout << "\n";
  }
  std::cout.flush();
}

int cmd_campaign(const std::string &config, const Overrides &o, bool dry_run) {
  Campaign c;
  load_campaign(c, config, o);
  if (dry_run) {
    char *out = nullptr;
    check(qsage_campaign_json(c.c, &out));
    std::cout << take(out) << "\n";
    return kExitOk;
  }
  char *out = nullptr;
  check(qsage_campaign_run(c.c, on_progress, nullptr, &out));
  const json s = json::parse(take(out));
  const auto new_episodes = s.at("new_episodes").get<std::size_t>();
  std::cout << "campaign " << s.at("campaign_hash").get<std::string>() << ": " << s.at("planned").get<std::size_t>()
            << " planned, " << new_episodes << (new_episodes == 1 ? " new episode, " : " new episodes, ")
            << s.at("skipped").get<std::size_t>() << " skipped, " << s.at("invalid").get<std::size_t>()
            << " invalid\n";
  std::cout << "repository: " << s.at("root").get<std::string>() << "\n";
  for (const auto &e : s.at("errors")) std::cerr << "error: " << e.get<std::string>() << "\n";
  if (s.at("planned").get<std::size_t>() > 0) {
    char *text = nullptr;
    const std::string root = s.at("root").get<std::string>();
    if (qsage_report(root.c_str(), "success", nullptr, 0.25, &text) == QSAGE_OK) std::cout << "\n" << take(text);
  }
  return s.at("errors").empty() ? kExitOk : kExitDomain;
}

int cmd_episode(const std::string &config, const std::string &instance, const std::string &model,
                const std::string &variant, int rep, const std::string &out_dir, const Overrides &o) {
  Campaign c;
  load_campaign(c, config, o);
  fs::path dir = out_dir;
  if (dir.empty())
    dir = fs::path("qsage-out") / "episodes" /
          (instance + "-" + (model.empty() ? std::string("model") : model) + "-" + variant + "-rep" +
           std::to_string(rep));
  char *out = nullptr;
  check(qsage_episode_run(c.c, instance.c_str(), model.empty() ? nullptr : model.c_str(), variant.c_str(), rep,
                          dir.string().c_str(), &out));
  const json r = json::parse(take(out));
  if (verbosity >= 0) {
    for (const auto &t : r.at("turns")) {
      std::cout << "turn " << t.at("index").get<int>() << ": ";
      if (t.at("verdict").is_null()) {
        std::cout << "not judged (infrastructure errors)\n";
        continue;
      }
      const json &v = t.at("verdict");
      if (v.at("outcome") == "pass") {
        std::cout << "pass";
      } else {
        std::cout << "fail (" << v.at("reason").get<std::string>();
        if (t.contains("cause") && !t.at("cause").is_null())
          std::cout << ", " << t.at("cause").at("category").get<std::string>();
        std::cout << ")";
      }
      if (!v.at("observed").is_null()) std::cout << " observed " << format_value(v.at("observed").get<double>());
      std::cout << "\n";
    }
  }
  std::cout << r.at("instance_id").get<std::string>() << " reference " << format_value(r.at("reference").get<double>())
            << ": ";
  if (r.at("invalid").get<bool>())
    std::cout << "invalid (" << r.value("invalid_reason", "") << ")\n";
  else if (!r.at("success_turn").is_null())
    std::cout << "success at turn " << r.at("success_turn").get<int>() << "\n";
  else
    std::cout << "no success within " << r.at("turn_budget").get<int>() << " turns\n";
  std::cout << "episode written to " << dir.string() << "\n";
  return kExitOk;
}

// ---- classify -----------------------------------------------------------------

void print_cause(const std::string &label, const json &cause) {
  if (!label.empty()) std::cout << label << ": ";
  std::cout << cause.at("category").get<std::string>();
  if (cause.contains("matched_keyword") && !cause.at("matched_keyword").is_null())
    std::cout << " (matched \"" << cause.at("matched_keyword").get<std::string>() << "\")";
  std::cout << "\n";
}

int cmd_classify(const std::vector<std::string> &logs, const std::string &stdout_file, int exit_status,
                 bool timed_out, const std::string &reason, const std::string &episode,
                 const std::string &taxonomy) {
  const char *tax = taxonomy.empty() ? nullptr : taxonomy.c_str();
  if (!episode.empty()) {
    char *out = nullptr;
    check(qsage_episode_classify(episode.c_str(), tax, &out));
    for (const auto &row : json::parse(take(out))) {
      const std::string label = "turn " + std::to_string(row.at("turn").get<int>());
      if (row.at("outcome").is_null())
        std::cout << label << ": not judged\n";
      else if (row.at("outcome") == "pass")
        std::cout << label << ": pass\n";
      else
        print_cause(label, row.at("cause"));
    }
    return kExitOk;
  }
  if (logs.empty() && stdout_file.empty() && !timed_out)
    throw Failure{QSAGE_E_INVALID_ARGUMENT, "nothing to classify: give log files, --stdout, --timed-out or --episode"};
  std::string err;
  for (const auto &f : logs) err += read_file(f);
  const std::string out_text = stdout_file.empty() ? "" : read_file(stdout_file);
  char *out = nullptr;
  check(qsage_classify(out_text.c_str(), err.c_str(), exit_status, timed_out ? 1 : 0,
                       reason.empty() ? nullptr : reason.c_str(), tax, &out));
  print_cause("", json::parse(take(out)));
  return kExitOk;
}

// ---- report -------------------------------------------------------------------

int cmd_report(const std::string &kind, const std::string &repository, const std::string &out_dir, bool no_files,
               double tail) {
  char *text = nullptr;
  check(qsage_report(repository.c_str(), kind.c_str(), no_files ? nullptr : out_dir.c_str(), tail, &text));
  std::cout << take(text);
  if (!no_files && verbosity >= 0) std::cout << "CSV written to " << out_dir << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"qsage: execution-based evaluation of generated quantum solver scripts"};
  app.set_version_flag("--version", std::string(qsage_version()));
  app.require_subcommand(1, 1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Print full JSON records");
  app.add_flag("-q,--quiet", quiet, "Only print results and errors");

  std::string instances;
  const std::string bundled = [] {
    try {
      return default_instances();
    } catch (const Failure &) {
      return std::string("data/instances/bundled.json");
    }
  }();

  auto *validate = app.add_subcommand("validate", "Check an instance file against the family schemas");
  validate->add_option("--instances", instances, "Instance file")->default_val(bundled);

  std::vector<std::string> ids, params;
  bool all = false;
  std::string family;
  auto *solve = app.add_subcommand("solve", "Compute classical reference values");
  solve->add_option("--instances", instances, "Instance file")->default_val(bundled);
  auto *o_inst = solve->add_option("-i,--instance", ids, "Instance id (repeatable)");
  auto *o_all = solve->add_flag("--all", all, "Solve every instance in the file");
  auto *o_fam = solve->add_option("--family", family, "Ad hoc instance family descriptor, e.g. condensedmatter/tfim");
  solve->add_option("-p,--param", params, "Ad hoc parameter key=value (repeatable; edges as JSON)")->needs(o_fam);
  o_inst->excludes(o_all)->excludes(o_fam);
  o_all->excludes(o_fam);

  std::string config, model, variant = "standard", out_dir;
  std::string instance;
  int rep = 1;
  Overrides ov;
  auto *episode = app.add_subcommand("episode", "Run one episode under a campaign config");
  episode->add_option("-c,--config", config, "Campaign config file")->required()->check(CLI::ExistingFile);
  episode->add_option("-i,--instance", instance, "Instance id")->required();
  episode->add_option("-m,--model", model, "Model name from the config (optional with one model)");
  episode->add_option("--variant", variant, "Feedback variant")->check(CLI::IsMember({"standard", "informed"}));
  episode->add_option("--rep", rep, "Repetition index")->check(CLI::PositiveNumber);
  episode->add_option("-T,--budget", ov.budget, "Turn budget override")->check(CLI::PositiveNumber);
  episode->add_option("--timeout-scale", ov.timeout_scale, "Multiplier on per-family timeouts")
      ->check(CLI::PositiveNumber);
  episode->add_option("-o,--out", out_dir, "Episode directory (default ./qsage-out/episodes/...)");

  bool dry_run = false;
  auto *campaign = app.add_subcommand("campaign", "Run a campaign into the episode repository");
  campaign->add_option("-c,--config", config, "Campaign config file")->required()->check(CLI::ExistingFile);
  campaign->add_option("-R,--repetitions", ov.repetitions, "Repetitions per instance")->check(CLI::PositiveNumber);
  campaign->add_option("-T,--budget", ov.budget, "Turn budget")->check(CLI::PositiveNumber);
  campaign->add_option("-I,--instances-per-family", ov.per_family, "Instances per family")
      ->check(CLI::PositiveNumber);
  campaign->add_option("--variant", ov.variants, "Restrict to variant (repeatable)")
      ->check(CLI::IsMember({"standard", "informed"}));
  campaign->add_option("-m,--model", ov.models, "Restrict to model name (repeatable)");
  campaign->add_option("-j,--jobs", ov.jobs, "Parallel episodes")->check(CLI::PositiveNumber);
  campaign->add_option("--repository", ov.repository, "Repository directory (default from config)");
  campaign->add_option("--timeout-scale", ov.timeout_scale, "Multiplier on per-family timeouts")
      ->check(CLI::PositiveNumber);
  campaign->add_flag("--dry-run", dry_run, "Print the effective config and exit");

  std::vector<std::string> logs;
  std::string stdout_file, reason, episode_path, taxonomy;
  int exit_status = 1;
  bool timed_out = false;
  auto *classify = app.add_subcommand("classify", "Assign a failure cause to captured run output");
  classify->add_option("logs", logs, "Files with captured stderr")->check(CLI::ExistingFile);
  classify->add_option("--stdout", stdout_file, "File with captured stdout")->check(CLI::ExistingFile);
  classify->add_option("--exit-status", exit_status, "Exit status of the run");
  classify->add_flag("--timed-out", timed_out, "The run hit its time limit");
  classify->add_option("--reason", reason, "Verdict reason (default inferred)")
      ->check(CLI::IsMember({"parse-failure", "out-of-tolerance", "execution-failure", "timeout"}));
  classify->add_option("--episode", episode_path, "Classify every failed turn of an episode.json")
      ->check(CLI::ExistingFile);
  classify->add_option("--taxonomy", taxonomy, "Taxonomy file (default built-in)")->check(CLI::ExistingFile);

  std::string kind = "all", repository = "qsage-out/repo", report_out = "qsage-out/reports";
  double tail = 0.25;
  bool no_files = false;
  auto *report = app.add_subcommand("report", "Tables and CSV series over an episode repository");
  report->add_option("kind", kind, "success, compare, causes, durations or all")
      ->check(CLI::IsMember({"success", "compare", "causes", "durations", "all"}));
  report->add_option("-r,--repository", repository, "Episode repository")->capture_default_str();
  report->add_option("-o,--out", report_out, "CSV output directory")->capture_default_str();
  report->add_option("--tail-fraction", tail, "Share of rarest failures folded into Other")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.999));
  report->add_flag("--no-files", no_files, "Print tables only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  verbosity = quiet ? -1 : (verbose ? 1 : 0);

  try {
    if (*validate) return cmd_validate(instances);
    if (*solve) {
      if (ids.empty() && !all && family.empty()) {
        std::cerr << "error: solve needs --instance, --all or --family\n";
        return kExitUsage;
      }
      return cmd_solve(instances, ids, all, family, params);
    }
    if (*episode) return cmd_episode(config, instance, model, variant, rep, out_dir, ov);
    if (*campaign) return cmd_campaign(config, ov, dry_run);
    if (*classify) return cmd_classify(logs, stdout_file, exit_status, timed_out, reason, episode_path, taxonomy);
    if (*report) return cmd_report(kind, repository, report_out, no_files, tail);
  } catch (const Failure &f) {
    std::cerr << "error: " << f.message << "\n";
    return f.status == QSAGE_E_INVALID_ARGUMENT ? kExitUsage : kExitDomain;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
