/* qsage C interface. Strings returned through char** are heap copies owned
 * by the caller and released with qsage_string_free. JSON is UTF-8. */
#ifndef QSAGE_H
#define QSAGE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define QSAGE_API __attribute__((visibility("default")))
#else
#define QSAGE_API
#endif

typedef enum qsage_status {
  QSAGE_OK = 0,
  QSAGE_E_INVALID_ARGUMENT = 1,
  QSAGE_E_PARSE = 2,
  QSAGE_E_VALIDATION = 3,
  QSAGE_E_UNKNOWN_FAMILY = 4,
  QSAGE_E_IO = 5,
  QSAGE_E_SOLVER = 6,
  QSAGE_E_NOT_FOUND = 7,
  QSAGE_E_CONFIG = 8,
  QSAGE_E_INFRASTRUCTURE = 9,
  QSAGE_E_INTERNAL = 10
} qsage_status;

typedef struct qsage_instance_set qsage_instance_set;
typedef struct qsage_campaign qsage_campaign;

/* Progress events of a campaign run, one JSON object per finished episode. */
typedef void (*qsage_progress_fn)(const char *event_json, void *user);

QSAGE_API const char *qsage_version(void);
QSAGE_API const char *qsage_status_name(qsage_status status);
/* Message of the last failed call on this thread ("" if none). */
QSAGE_API const char *qsage_last_error(void);
QSAGE_API void qsage_string_free(char *s);
/* Bundled data directory (instances, templates, integrals, taxonomy). */
QSAGE_API qsage_status qsage_data_dir(char **out_path);

/* Registry */
QSAGE_API qsage_status qsage_families_json(char **out_json);
QSAGE_API qsage_status qsage_instances_load(const char *path, qsage_instance_set **out);
QSAGE_API qsage_status qsage_instances_parse(const char *json_text, const char *base_dir,
                                             qsage_instance_set **out);
QSAGE_API void qsage_instances_free(qsage_instance_set *set);
QSAGE_API size_t qsage_instances_count(const qsage_instance_set *set);
QSAGE_API qsage_status qsage_instances_find(const qsage_instance_set *set, const char *id, size_t *index);
QSAGE_API qsage_status qsage_instance_json(const qsage_instance_set *set, size_t index, char **out_json);
/* Per-instance check of an instance document without stopping at the first
 * bad entry: [{"index", "id", "ok", "violations": [...]}]. */
QSAGE_API qsage_status qsage_instances_check(const char *path, char **out_json);

/* Reference solvers: {"id", "value", "solver", "wall_time_s", "iterations"}. */
QSAGE_API qsage_status qsage_solve(const qsage_instance_set *set, size_t index, char **out_json);

/* Adjudication */
QSAGE_API qsage_status qsage_verify(double observed, double reference, double tol_abs, double tol_rel,
                                    char **verdict_json);
QSAGE_API qsage_status qsage_parse_result(const char *stdout_text, int lenient, double *value);
/* Classifies captured streams of a failed run. verdict_reason is one of
 * parse-failure, out-of-tolerance, execution-failure, timeout; a NULL
 * taxonomy_path selects the built-in table. */
QSAGE_API qsage_status qsage_classify(const char *stdout_text, const char *stderr_text, int exit_status,
                                      int timed_out, const char *verdict_reason, const char *taxonomy_path,
                                      char **cause_json);

/* Campaigns */
QSAGE_API qsage_status qsage_campaign_load(const char *config_path, qsage_campaign **out);
QSAGE_API qsage_status qsage_campaign_parse(const char *json_text, const char *base_dir, qsage_campaign **out);
QSAGE_API void qsage_campaign_free(qsage_campaign *campaign);
/* Keys: repetitions, turn_budget, instances_per_family, variants, models
 * (name filter), jobs, repository, timeout_scale, timeout_override_s. */
QSAGE_API qsage_status qsage_campaign_override(qsage_campaign *campaign, const char *overrides_json);
QSAGE_API qsage_status qsage_campaign_json(const qsage_campaign *campaign, char **out_json);
QSAGE_API qsage_status qsage_campaign_run(const qsage_campaign *campaign, qsage_progress_fn progress, void *user,
                                          char **summary_json);
/* Single episode written to out_dir (NULL: not persisted). */
QSAGE_API qsage_status qsage_episode_run(const qsage_campaign *campaign, const char *instance_id,
                                         const char *model, const char *variant, int repetition,
                                         const char *out_dir, char **record_json);
QSAGE_API qsage_status qsage_episode_classify(const char *episode_json_path, const char *taxonomy_path,
                                              char **out_json);

/* Reports over every episode.json below repo_path. kind: success, compare,
 * causes, durations or all. CSV files go to out_dir unless it is NULL; the
 * aligned text tables are returned. */
QSAGE_API qsage_status qsage_report(const char *repo_path, const char *kind, const char *out_dir,
                                    double tail_fraction, char **text_out);

#ifdef __cplusplus
}
#endif

#endif
