#ifndef P2DYN_H
#define P2DYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. `P2_STATUS_OK` is zero.
 */
typedef enum P2Status {
  P2_STATUS_OK = 0,
  P2_STATUS_NULL_POINTER = 1,
  P2_STATUS_INVALID_UTF8 = 2,
  P2_STATUS_PANIC = 3,
  P2_STATUS_OUT_OF_RANGE = 4,
  P2_STATUS_DEGENERATE_MAP = 10,
  P2_STATUS_INVALID_MAP = 11,
  P2_STATUS_CRITICAL_POINT = 12,
  P2_STATUS_SOLVER_FAILURE = 13,
  P2_STATUS_DOMAIN = 14,
  P2_STATUS_RESOLUTION = 15,
  P2_STATUS_INSUFFICIENT_SAMPLE = 16,
  P2_STATUS_ILL_CONDITIONED_FRAME = 17,
  P2_STATUS_NEGATIVE_MASS = 18,
  P2_STATUS_PARSE = 19,
  P2_STATUS_CONFIG = 20,
  P2_STATUS_USAGE = 21,
  P2_STATUS_INVALID_ARGUMENT = 22,
  P2_STATUS_IO = 23,
} P2Status;

/**
 * Opaque experiment configuration.
 */
typedef struct P2Config P2Config;

/**
 * Opaque map handle.
 */
typedef struct P2Map P2Map;

/**
 * Opaque verify report; owns its serialised forms.
 */
typedef struct P2Report P2Report;

/**
 * Opaque sample handle.
 */
typedef struct P2Sample P2Sample;

typedef struct P2Exponents {
  double lambda1;
  double lambda2;
  double stderr1;
  double stderr2;
} P2Exponents;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *p2dyn_last_error(void);

/**
 * Power map `[z^d : w^d : t^d]`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum P2Status p2dyn_map_power(uint32_t degree, struct P2Map **out);

/**
 * Suspension of the degree-2 Lattès map.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum P2Status p2dyn_map_lattes_suspension(struct P2Map **out);

/**
 * Map from the plain-text coefficient format.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid handle slot.
 */
enum P2Status p2dyn_map_parse(const char *text, struct P2Map **out);

/**
 * # Safety
 * `map` must come from a `p2dyn_map_*` constructor and not be used afterwards.
 */
void p2dyn_map_free(struct P2Map *map);

/**
 * Degree of `map`, or 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
uint32_t p2dyn_map_degree(const struct P2Map *map);

/**
 * Image of a point, normalised to unit sup norm.
 *
 * # Safety
 * `map` must be live; `point` and `out` must each hold 6 doubles.
 */
enum P2Status p2dyn_map_evaluate(const struct P2Map *map, const double *point, double *out);

/**
 * Green function `G_N` of `map` at the lift given by `point` itself, with
 * the truncation bound for `N = depth`.
 *
 * # Safety
 * `map` must be live; `point` must hold 6 doubles; `value` and `bound`
 * must be writable.
 */
enum P2Status p2dyn_green_value(const struct P2Map *map,
                                size_t depth,
                                const double *point,
                                double *value,
                                double *bound);

/**
 * Backward-iteration sample of the equilibrium measure.
 *
 * # Safety
 * `map` must be live and `out` a valid handle slot.
 */
enum P2Status p2dyn_sample_new(const struct P2Map *map,
                               size_t depth,
                               size_t count,
                               uint64_t seed,
                               struct P2Sample **out);

/**
 * # Safety
 * `sample` must come from [`p2dyn_sample_new`] and not be used afterwards.
 */
void p2dyn_sample_free(struct P2Sample *sample);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t p2dyn_sample_len(const struct P2Sample *sample);

/**
 * Point `index` of the sample.
 *
 * # Safety
 * `sample` must be live and `out` must hold 6 doubles.
 */
enum P2Status p2dyn_sample_point(const struct P2Sample *sample, size_t index, double *out);

/**
 * Lyapunov exponents from `walkers` walkers of `iterations` steps.
 *
 * # Safety
 * `map` must be live and `out` writable.
 */
enum P2Status p2dyn_lyapunov(const struct P2Map *map,
                             size_t walkers,
                             size_t iterations,
                             uint64_t seed,
                             struct P2Exponents *out);

/**
 * Experiment configuration from `key=value` text. A nonnegative
 * `seed_override` replaces the seed line.
 *
 * # Safety
 * `text` must be nul-terminated and `out` a valid handle slot.
 */
enum P2Status p2dyn_config_parse(const char *text, int64_t seed_override, struct P2Config **out);

/**
 * # Safety
 * `config` must come from [`p2dyn_config_parse`] and not be used afterwards.
 */
void p2dyn_config_free(struct P2Config *config);

/**
 * Full verification run.
 *
 * # Safety
 * `config` must be live and `out` a valid handle slot.
 */
enum P2Status p2dyn_verify(const struct P2Config *config, struct P2Report **out);

/**
 * # Safety
 * `report` must come from [`p2dyn_verify`] and not be used afterwards.
 */
void p2dyn_report_free(struct P2Report *report);

/**
 * Exit code of the run: 0, 1 (a fail) or 3 (inconclusive only); −1 for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int32_t p2dyn_report_exit_code(const struct P2Report *report);

/**
 * JSON report, owned by the handle; null for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle; the string dies with it.
 */
const char *p2dyn_report_json(const struct P2Report *report);

/**
 * CSV report, owned by the handle; null for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle; the string dies with it.
 */
const char *p2dyn_report_csv(const struct P2Report *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* P2DYN_H */
