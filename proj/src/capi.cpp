#include "qsage/qsage.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "qsage/adjudicator.hpp"
#include "qsage/episode.hpp"
#include "qsage/error.hpp"
#include "qsage/reference.hpp"
#include "qsage/registry.hpp"
#include "qsage/stats.hpp"
#include "qsage/util.hpp"

struct qsage_instance_set {
  std::vector<qsage::ProblemInstance> instances;
};

struct qsage_campaign {
  qsage::CampaignConfig config;
};

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

qsage_status to_status(qsage::ErrorCode c) { return static_cast<qsage_status>(static_cast<int>(c)); }

template <class F> qsage_status guarded(F &&f) {
  try {
    f();
    g_last_error.clear();
    return QSAGE_OK;
  } catch (const qsage::Error &e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception &e) {
    g_last_error = std::string("json: ") + e.what();
    return QSAGE_E_PARSE;
  } catch (const fs::filesystem_error &e) {
    g_last_error = e.what();
    return QSAGE_E_IO;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return QSAGE_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return QSAGE_E_INTERNAL;
  }
}

void require(const void *p, const char *name) {
  if (!p) throw qsage::Error(qsage::ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char **out, const std::string &s) {
  require(out, "output pointer");
  *out = dup_string(s);
}

json families_to_json() {
  json arr = json::array();
  for (const auto &f : qsage::families()) {
    json params = json::array();
    for (const auto &p : f.params) {
      static const char *types[] = {"integer", "real", "string", "edges"};
      json pj{{"name", p.name},
              {"type", types[static_cast<int>(p.type)]},
              {"description", p.description},
              {"required", p.required},
              {"oracle_only", p.oracle_only}};
      if (p.default_value) pj["default"] = qsage::format_param(*p.default_value);
      params.push_back(pj);
    }
    arr.push_back({{"descriptor", f.descriptor},
                   {"title", f.title},
                   {"params", params},
                   {"tolerance", {{"absolute", f.default_tolerance.absolute}, {"relative", f.default_tolerance.relative}}},
                   {"timeout_s", f.default_timeout_s},
                   {"expected_output_label", f.expected_output_label},
                   {"solver", f.solver}});
  }
  return arr;
}

void write_report(const fs::path *dir, const std::string &name, const qsage::Table &t) {
  if (dir) qsage::write_file_atomic(*dir / name, t.csv());
}

} // namespace

extern "C" {

const char *qsage_version(void) { return "1.0.0"; }

const char *qsage_status_name(qsage_status s) {
  switch (s) {
  case QSAGE_OK: return "ok";
  case QSAGE_E_INVALID_ARGUMENT: return "invalid argument";
  case QSAGE_E_PARSE: return "parse error";
  case QSAGE_E_VALIDATION: return "validation error";
  case QSAGE_E_UNKNOWN_FAMILY: return "unknown family";
  case QSAGE_E_IO: return "i/o error";
  case QSAGE_E_SOLVER: return "solver error";
  case QSAGE_E_NOT_FOUND: return "not found";
  case QSAGE_E_CONFIG: return "configuration error";
  case QSAGE_E_INFRASTRUCTURE: return "infrastructure error";
  case QSAGE_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char *qsage_last_error(void) { return g_last_error.c_str(); }

void qsage_string_free(char *s) { std::free(s); }

qsage_status qsage_data_dir(char **out_path) {
  return guarded([&] { emit(out_path, qsage::data_dir().string()); });
}

qsage_status qsage_families_json(char **out_json) {
  return guarded([&] { emit(out_json, families_to_json().dump(2)); });
}

qsage_status qsage_instances_load(const char *path, qsage_instance_set **out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto set = std::make_unique<qsage_instance_set>();
    set->instances = qsage::load_instances(path);
    *out = set.release();
  });
}

qsage_status qsage_instances_parse(const char *json_text, const char *base_dir, qsage_instance_set **out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    auto set = std::make_unique<qsage_instance_set>();
    set->instances = qsage::parse_instances(json_text, base_dir ? fs::path(base_dir) : fs::path());
    *out = set.release();
  });
}

void qsage_instances_free(qsage_instance_set *set) { delete set; }

size_t qsage_instances_count(const qsage_instance_set *set) { return set ? set->instances.size() : 0; }

qsage_status qsage_instances_find(const qsage_instance_set *set, const char *id, size_t *index) {
  return guarded([&] {
    require(set, "set");
    require(id, "id");
    require(index, "index");
    for (size_t i = 0; i < set->instances.size(); ++i)
      if (set->instances[i].id == id) {
        *index = i;
        return;
      }
    throw qsage::Error(qsage::ErrorCode::NotFound, std::string("no instance with id '") + id + "'");
  });
}

qsage_status qsage_instance_json(const qsage_instance_set *set, size_t index, char **out_json) {
  return guarded([&] {
    require(set, "set");
    if (index >= set->instances.size()) throw qsage::Error(qsage::ErrorCode::InvalidArgument, "index out of range");
    emit(out_json, qsage::instance_to_json(set->instances[index]).dump(2));
  });
}

qsage_status qsage_instances_check(const char *path, char **out_json) {
  return guarded([&] {
    require(path, "path");
    const std::string text = qsage::read_text_file(path);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception &e) {
      throw qsage::Error(qsage::ErrorCode::Parse, std::string(path) + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("instances") || !doc.at("instances").is_array())
      throw qsage::Error(qsage::ErrorCode::Parse, std::string(path) + ": expected an object with an 'instances' array");
    fs::path base = fs::absolute(path).parent_path();
    if (doc.contains("integrals_dir")) base = base / doc.at("integrals_dir").get<std::string>();
    json report = json::array();
    std::map<std::string, int> seen;
    size_t index = 0;
    for (const auto &entry : doc.at("instances")) {
      json row{{"index", index}, {"id", entry.is_object() ? entry.value("id", "") : ""}};
      json violations = json::array();
      try {
        const auto inst = qsage::instance_from_json(entry, base);
        if (seen[inst.id]++) violations.push_back("duplicate id '" + inst.id + "'");
      } catch (const qsage::Error &e) {
        violations.push_back(e.what());
      }
      row["ok"] = violations.empty();
      row["violations"] = violations;
      report.push_back(row);
      ++index;
    }
    emit(out_json, report.dump(2));
  });
}

qsage_status qsage_solve(const qsage_instance_set *set, size_t index, char **out_json) {
  return guarded([&] {
    require(set, "set");
    if (index >= set->instances.size()) throw qsage::Error(qsage::ErrorCode::InvalidArgument, "index out of range");
    const auto &in = set->instances[index];
    const auto r = qsage::solve_reference(in);
    emit(out_json, json{{"id", in.id},
                        {"descriptor", in.descriptor},
                        {"label", in.expected_output_label},
                        {"value", r.value},
                        {"solver", r.solver},
                        {"wall_time_s", r.wall_time_s},
                        {"iterations", r.iterations}}
                       .dump());
  });
}

qsage_status qsage_verify(double observed, double reference, double tol_abs, double tol_rel, char **verdict_json) {
  return guarded([&] {
    if (tol_abs < 0 || tol_rel < 0)
      throw qsage::Error(qsage::ErrorCode::InvalidArgument, "tolerance must be non-negative");
    emit(verdict_json, qsage::verify(observed, reference, {tol_abs, tol_rel}).to_json().dump());
  });
}

qsage_status qsage_parse_result(const char *stdout_text, int lenient, double *value) {
  return guarded([&] {
    require(stdout_text, "stdout_text");
    require(value, "value");
    const auto r = qsage::parse_result(stdout_text, lenient != 0);
    if (!r.ok()) throw qsage::Error(qsage::ErrorCode::Parse, r.failure);
    *value = *r.value;
  });
}

qsage_status qsage_classify(const char *stdout_text, const char *stderr_text, int exit_status, int timed_out,
                            const char *verdict_reason, const char *taxonomy_path, char **cause_json) {
  return guarded([&] {
    qsage::ExecutionResult exec;
    exec.stdout_text = stdout_text ? stdout_text : "";
    exec.stderr_text = stderr_text ? stderr_text : "";
    exec.exit_status = exit_status;
    exec.timed_out = timed_out != 0;
    qsage::Verdict v;
    v.outcome = qsage::Outcome::Fail;
    if (verdict_reason)
      v.reason = qsage::parse_fail_reason(verdict_reason);
    else if (exec.timed_out)
      v.reason = qsage::FailReason::Timeout;
    else if (exit_status != 0)
      v.reason = qsage::FailReason::ExecutionFailure;
    else
      v.reason = qsage::parse_result(exec.stdout_text).ok() ? qsage::FailReason::OutOfTolerance
                                                            : qsage::FailReason::ParseFailure;
    const qsage::Taxonomy tax =
        taxonomy_path ? qsage::Taxonomy::load(taxonomy_path) : qsage::Taxonomy::builtin();
    emit(cause_json, qsage::classify(&exec, v, tax).to_json().dump());
  });
}

qsage_status qsage_campaign_load(const char *config_path, qsage_campaign **out) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out, "out");
    auto c = std::make_unique<qsage_campaign>();
    c->config = qsage::CampaignConfig::load(config_path);
    *out = c.release();
  });
}

qsage_status qsage_campaign_parse(const char *json_text, const char *base_dir, qsage_campaign **out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    json j;
    try {
      j = json::parse(json_text);
    } catch (const json::exception &e) {
      throw qsage::Error(qsage::ErrorCode::Config, std::string("campaign config: ") + e.what());
    }
    auto c = std::make_unique<qsage_campaign>();
    c->config = qsage::CampaignConfig::from_json(j, base_dir ? fs::path(base_dir) : fs::path());
    *out = c.release();
  });
}

void qsage_campaign_free(qsage_campaign *campaign) { delete campaign; }

qsage_status qsage_campaign_override(qsage_campaign *campaign, const char *overrides_json) {
  return guarded([&] {
    require(campaign, "campaign");
    require(overrides_json, "overrides_json");
    json o;
    try {
      o = json::parse(overrides_json);
    } catch (const json::exception &e) {
      throw qsage::Error(qsage::ErrorCode::Config, std::string("overrides: ") + e.what());
    }
    qsage::CampaignConfig c = campaign->config;
    try {
      for (const auto &[key, value] : o.items()) {
        if (key == "repetitions") c.repetitions = value.get<int>();
        else if (key == "turn_budget") c.turn_budget = value.get<int>();
        else if (key == "instances_per_family") c.instances_per_family = value.get<int>();
        else if (key == "jobs") c.jobs = value.get<int>();
        else if (key == "repository") c.repository = value.get<std::string>();
        else if (key == "timeout_scale") c.execution.timeout_scale = value.get<double>();
        else if (key == "timeout_override_s") c.execution.timeout_override_s = value.get<double>();
        else if (key == "variants") {
          c.variants.clear();
          for (const auto &v : value) c.variants.push_back(qsage::parse_variant(v.get<std::string>()));
        } else if (key == "models") {
          std::vector<qsage::ModelConfig> kept;
          for (const auto &m : c.models)
            for (const auto &name : value)
              if (m.name == name.get<std::string>()) kept.push_back(m);
          if (kept.size() != value.size())
            throw qsage::Error(qsage::ErrorCode::Config, "model filter names a model not in the config");
          c.models = kept;
        } else
          throw qsage::Error(qsage::ErrorCode::Config, "unknown override '" + key + "'");
      }
    } catch (const json::exception &e) {
      throw qsage::Error(qsage::ErrorCode::Config, std::string("overrides: ") + e.what());
    }
    c.validate();
    campaign->config = std::move(c);
  });
}

qsage_status qsage_campaign_json(const qsage_campaign *campaign, char **out_json) {
  return guarded([&] {
    require(campaign, "campaign");
    emit(out_json, campaign->config.to_json().dump(2));
  });
}

qsage_status qsage_campaign_run(const qsage_campaign *campaign, qsage_progress_fn progress, void *user,
                                char **summary_json) {
  return guarded([&] {
    require(campaign, "campaign");
    std::function<void(const qsage::CampaignProgress &)> cb;
    if (progress)
      cb = [&](const qsage::CampaignProgress &p) {
        json e{{"done", p.done}, {"total", p.total}, {"path", p.path.generic_string()},
               {"skipped", p.record == nullptr}};
        if (p.record) {
          e["instance"] = p.record->instance_id;
          e["model"] = p.record->model;
          e["variant"] = std::string(qsage::to_string(p.record->variant));
          e["repetition"] = p.record->repetition;
          e["turns"] = p.record->turns.size();
          e["success_turn"] = p.record->success_turn ? json(*p.record->success_turn) : json(nullptr);
          e["invalid"] = p.record->invalid;
        }
        progress(e.dump().c_str(), user);
      };
    const auto summary = qsage::run_campaign(campaign->config, cb);
    if (summary_json) *summary_json = dup_string(summary.to_json().dump(2));
  });
}

qsage_status qsage_episode_run(const qsage_campaign *campaign, const char *instance_id, const char *model,
                               const char *variant, int repetition, const char *out_dir, char **record_json) {
  return guarded([&] {
    require(campaign, "campaign");
    require(instance_id, "instance_id");
    std::string model_name = model ? model : "";
    if (model_name.empty()) {
      if (campaign->config.models.size() != 1)
        throw qsage::Error(qsage::ErrorCode::InvalidArgument, "config has several models; name one");
      model_name = campaign->config.models.front().name;
    }
    const auto v = qsage::parse_variant(variant ? variant : "standard");
    std::optional<fs::path> dir;
    if (out_dir) dir = fs::path(out_dir);
    const auto rec = qsage::run_single_episode(campaign->config, instance_id, model_name, v, repetition, dir);
    if (record_json) *record_json = dup_string(rec.to_json().dump(2));
  });
}

qsage_status qsage_episode_classify(const char *episode_json_path, const char *taxonomy_path, char **out_json) {
  return guarded([&] {
    require(episode_json_path, "episode_json_path");
    const auto rec = qsage::load_episode(episode_json_path);
    const qsage::Taxonomy tax =
        taxonomy_path ? qsage::Taxonomy::load(taxonomy_path) : qsage::Taxonomy::builtin();
    json rows = json::array();
    for (const auto &t : rec.turns) {
      json row{{"turn", t.index}};
      if (!t.verdict) {
        row["outcome"] = nullptr;
      } else if (t.verdict->passed()) {
        row["outcome"] = "pass";
      } else {
        row["outcome"] = "fail";
        row["reason"] = std::string(qsage::to_string(*t.verdict->reason));
        const auto cause = qsage::classify(t.exec ? &*t.exec : nullptr, *t.verdict, tax);
        row["cause"] = cause.to_json();
        row["recorded_cause"] = t.cause ? t.cause->to_json() : json(nullptr);
      }
      rows.push_back(row);
    }
    emit(out_json, rows.dump(2));
  });
}

qsage_status qsage_report(const char *repo_path, const char *kind, const char *out_dir, double tail_fraction,
                          char **text_out) {
  return guarded([&] {
    require(repo_path, "repo_path");
    const std::string k = kind ? kind : "all";
    if (k != "success" && k != "compare" && k != "causes" && k != "durations" && k != "all")
      throw qsage::Error(qsage::ErrorCode::InvalidArgument, "unknown report kind '" + k + "'");
    if (!fs::exists(repo_path)) throw qsage::Error(qsage::ErrorCode::NotFound, std::string("no such repository: ") + repo_path);
    const auto records = qsage::load_episodes(repo_path);
    if (records.empty())
      throw qsage::Error(qsage::ErrorCode::NotFound, std::string("no episodes under ") + repo_path);
    std::optional<fs::path> dir;
    if (out_dir) dir = fs::path(out_dir);
    const fs::path *d = dir ? &*dir : nullptr;

    std::string text;
    std::size_t excluded = 0;
    for (const auto &r : records) excluded += r.invalid;
    text += std::to_string(records.size()) + " episodes, " + std::to_string(excluded) +
            " excluded after infrastructure errors\n\n";
    if (k == "success" || k == "all") {
      const auto t = qsage::success_table(records);
      text += "success@t\n" + t.text() + "\n";
      write_report(d, "success.csv", t);
      write_report(d, "success_series.csv", qsage::success_series(records));
    }
    if (k == "compare" || k == "all") {
      std::vector<std::string> notes;
      const auto t = qsage::comparison_table(records, {{1, 5}, {1, 10}}, &notes);
      text += "Mann-Whitney U p-value (Vargha-Delaney effect)\n" + t.text();
      for (const auto &n : notes) text += "note: " + n + "\n";
      text += "\n";
      write_report(d, "compare.csv", t);
    }
    if (k == "causes" || k == "all") {
      const auto t = qsage::causes_table(records, tail_fraction);
      text += "failure causes (least common " + qsage::format_number(tail_fraction * 100) +
              "% folded into Other)\n" + t.text() + "\n";
      write_report(d, "causes.csv", t);
      write_report(d, "causes_histogram.csv", qsage::causes_histogram(records));
    }
    if (k == "durations" || k == "all") {
      const auto rep = qsage::duration_report(records);
      const auto t = qsage::duration_table(rep);
      text += "durations (turn 1 vs time to first success; log scale)\n" + t.text() + "\n";
      write_report(d, "durations.csv", t);
      write_report(d, "duration_series.csv", qsage::duration_series(rep));
    }
    emit(text_out, text);
  });
}

} // extern "C"
