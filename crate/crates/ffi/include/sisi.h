#ifndef SISI_H
#define SISI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SisiStatus {
  SISI_STATUS_OK = 0,
  SISI_STATUS_NULL_POINTER = 1,
  SISI_STATUS_INVALID_ARGUMENT = 2,
  SISI_STATUS_PARSE = 3,
  SISI_STATUS_IO = 4,
  SISI_STATUS_NO_BLUE_SETS = 5,
  SISI_STATUS_DEGENERATE = 6,
  SISI_STATUS_PANIC = 7,
} SisiStatus;

typedef enum SisiModel {
  SISI_MODEL_SI = 0,
  SISI_MODEL_IC = 1,
} SisiModel;

typedef enum SisiAlgorithm {
  SISI_ALGORITHM_SISI = 0,
  SISI_ALGORITHM_SISI_RELAX = 1,
  SISI_ALGORITHM_GREEDY = 2,
  SISI_ALGORITHM_MAX_DEGREE = 3,
} SisiAlgorithm;

typedef enum SisiMode {
  SISI_MODE_STRICT = 0,
  SISI_MODE_RELAX = 1,
} SisiMode;

typedef struct SisiGraph SisiGraph;

typedef struct SisiObservation SisiObservation;

typedef struct SisiReport SisiReport;

/**
 * Detection settings. Start from [`sisi_detect_config_default`].
 */
typedef struct SisiDetectConfig {
  enum SisiAlgorithm algorithm;
  double epsilon;
  double delta;
  uint64_t seed;
  size_t trials_per_eval;
  size_t eval_trials;
  /**
   * 0 means no cap.
   */
  uint64_t max_samples;
  /**
   * 0 means no cap.
   */
  uint64_t max_memberships;
} SisiDetectConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *sisi_last_error(void);

/**
 * Loads an edge-list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SisiStatus sisi_graph_load(const char *path, struct SisiGraph **out);

/**
 * Builds a graph on nodes `0..n` from `m` edges `from[i] -> to[i]`.
 *
 * # Safety
 * `from` and `to` must point to `m` readable values; `out` must be writable.
 */
enum SisiStatus sisi_graph_from_edges(size_t n,
                                      const uint32_t *from,
                                      const uint32_t *to,
                                      size_t m,
                                      struct SisiGraph **out);

/**
 * `rows x cols` grid; node `r * cols + c`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SisiStatus sisi_graph_grid(size_t rows, size_t cols, struct SisiGraph **out);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t sisi_graph_node_count(const struct SisiGraph *g);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t sisi_graph_edge_count(const struct SisiGraph *g);

/**
 * # Safety
 * `g` must be null or a handle not freed before.
 */
void sisi_graph_free(struct SisiGraph *g);

/**
 * Observation with the given infected ids. `tau_steps` 0 means no limit.
 * `true_sources` may be null when `source_count` is 0.
 *
 * # Safety
 * Pointers must reference the stated number of values; `out` must be writable.
 */
enum SisiStatus sisi_observation_new(const struct SisiGraph *g,
                                     const uint64_t *infected,
                                     size_t infected_count,
                                     const uint64_t *true_sources,
                                     size_t source_count,
                                     enum SisiModel model_kind,
                                     double beta,
                                     uint64_t tau_steps,
                                     struct SisiObservation **out);

/**
 * Reads an observation file whose ids refer to `g`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SisiStatus sisi_observation_load(const struct SisiGraph *g,
                                      const char *path,
                                      struct SisiObservation **out);

/**
 * Simulates from `sources` until at least `min_infected` nodes are infected
 * and records the result, with the stopping step as `tau`.
 *
 * # Safety
 * `sources` must point to `source_count` values; `out` must be writable.
 */
enum SisiStatus sisi_observation_simulate(const struct SisiGraph *g,
                                          const uint64_t *sources,
                                          size_t source_count,
                                          enum SisiModel model_kind,
                                          double beta,
                                          size_t min_infected,
                                          uint64_t tau_cap,
                                          uint64_t seed,
                                          struct SisiObservation **out);

/**
 * # Safety
 * `o` must be null or a live observation handle.
 */
size_t sisi_observation_infected_count(const struct SisiObservation *o);

/**
 * Step limit of the observation; 0 when unlimited.
 *
 * # Safety
 * `o` must be null or a live observation handle.
 */
uint64_t sisi_observation_tau(const struct SisiObservation *o);

/**
 * # Safety
 * `o` must be null or a handle not freed before.
 */
void sisi_observation_free(struct SisiObservation *o);

struct SisiDetectConfig sisi_detect_config_default(void);

/**
 * Runs a detector. `cfg` may be null for defaults.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SisiStatus sisi_detect(const struct SisiGraph *g,
                            const struct SisiObservation *o,
                            const struct SisiDetectConfig *cfg,
                            struct SisiReport **out);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t sisi_report_source_count(const struct SisiReport *r);

/**
 * Copies up to `capacity` source ids into `buf` and returns the total count.
 *
 * # Safety
 * `buf` must have room for `capacity` values (may be null if 0).
 */
size_t sisi_report_sources(const struct SisiReport *r, uint64_t *buf, size_t capacity);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
double sisi_report_estimated_sd(const struct SisiReport *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
uint64_t sisi_report_samples_used(const struct SisiReport *r);

/**
 * Size of the largest RR set; 0 for the baselines.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t sisi_report_delta(const struct SisiReport *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
bool sisi_report_budget_exhausted(const struct SisiReport *r);

/**
 * # Safety
 * `r` must be null or a handle not freed before.
 */
void sisi_report_free(struct SisiReport *r);

/**
 * Forward Monte Carlo estimate of the expected symmetric difference between
 * cascades from `sources` and the observed set.
 *
 * # Safety
 * `sources` must point to `count` values; `mean` and `stderr` must be writable
 * (`stderr` may be null).
 */
enum SisiStatus sisi_estimate_sd(const struct SisiGraph *g,
                                 const struct SisiObservation *o,
                                 const uint64_t *sources,
                                 size_t count,
                                 size_t trials,
                                 uint64_t seed,
                                 double *mean,
                                 double *stderr);

/**
 * F1 score and detection rate (percent) of `detected` against `truth`.
 * Either output may be null.
 *
 * # Safety
 * Arrays must hold the stated counts.
 */
enum SisiStatus sisi_score(const uint64_t *detected,
                           size_t detected_count,
                           const uint64_t *truth,
                           size_t truth_count,
                           double *f1,
                           double *rate);

/**
 * Sample threshold used by the stopping rule.
 *
 * # Safety
 * `out` must be writable.
 */
enum SisiStatus sisi_lambda(double epsilon,
                            double delta,
                            size_t k,
                            enum SisiMode mode,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SISI_H */
