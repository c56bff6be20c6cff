#ifndef SPATIALREF_H
#define SPATIALREF_H

/* C interface to the spatialref core: scene graphs, free-space sampling,
 * QA generation, response scoring, and benchmark evaluation.
 *
 * Conventions:
 *   - Functions returning srf_status put a message for the calling thread
 *     behind srf_last_error() on failure.
 *   - char** outputs receive malloc'd NUL-terminated UTF-8; release with
 *     srf_string_free. They are left untouched on failure.
 *   - Handles are opaque; create/open and free/close come in pairs.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srf_status {
  SRF_OK = 0,
  SRF_ERROR = 1,          /* internal failure */
  SRF_INVALID_INPUT = 2,  /* malformed file, bad argument, id mismatch */
  SRF_UNSATISFIABLE = 3   /* well-formed request the scene cannot satisfy */
} srf_status;

const char* srf_version(void);

/* Message of the calling thread's most recent failure; empty string when
 * none. Valid until the thread's next srf_* call. */
const char* srf_last_error(void);

void srf_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */

typedef struct srf_config srf_config;

srf_config* srf_config_create(void);
void srf_config_free(srf_config* cfg);

/* Numeric fields by their JSON key, e.g. "cell_size", "alpha". */
srf_status srf_config_set(srf_config* cfg, const char* key, double value);
srf_status srf_config_set_seed(srf_config* cfg, uint64_t seed);

/* JSON table of the built-in defaults, alphabetical keys. */
char* srf_config_defaults_json(void);

/* ------------------------------------------------------------------ */
/* Scenes                                                              */

typedef struct srf_scene srf_scene;

/* Loads a scene JSON plus its depth file. */
srf_status srf_scene_open(const char* path, srf_scene** out);
void srf_scene_close(srf_scene* scene);

/* ------------------------------------------------------------------ */
/* Pipelines                                                           */

/* Scene graph over the default relation set, as JSON. */
srf_status srf_build_graph(const srf_scene* scene, const srf_config* cfg,
                           char** out_json);

/* One free-space query, e.g.
 *   {"relation": "right", "target_ids": ["cup-0"], "seed": 7}
 * Returns the region JSON (selected point, visible count, rejection). */
srf_status srf_sample_free_space(const srf_scene* scene, const srf_config* cfg,
                                 const char* query_json, char** out_json);

/* QA over comma-separated families ("relative-position,...,fact,between,
 * reasoning"). Returns {"items": [QA...], "report": {"counts", "skipped"}}.
 * When benchmark_dir is non-NULL, point items are also exported there as
 * benchmark samples with masks, under keys "benchmark" and "predictions". */
srf_status srf_generate_qa(const srf_scene* scene, const srf_config* cfg,
                           const char* families_csv, uint64_t seed,
                           const char* benchmark_dir, char** out_json);

/* Scores a responses JSONL against a point ground-truth JSONL. group_size 0
 * disables advantages; otherwise it must divide the row count. Returns the
 * score rows as JSONL text. */
srf_status srf_score_responses(const srf_config* cfg,
                               const char* responses_path, const char* gt_path,
                               int group_size, char** out_jsonl);

/* Evaluates a predictions JSONL against a benchmark JSONL (mask paths
 * resolve relative to the benchmark file). Returns the report JSON. */
srf_status srf_evaluate(const char* predictions_path,
                        const char* benchmark_path, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPATIALREF_H */
