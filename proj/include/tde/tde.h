/* SPDX-License-Identifier: Apache-2.0 */
#ifndef TDE_TDE_H
#define TDE_TDE_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(TDE_BUILDING_LIBRARY)
#define TDE_API __declspec(dllexport)
#else
#define TDE_API __declspec(dllimport)
#endif
#else
#define TDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every call that can fail returns one; tde_last_error() then holds the
 * message for the calling thread. */
typedef enum tde_status
{
  TDE_OK = 0,
  TDE_ERR_INVALID_ARGUMENT = 1,
  TDE_ERR_DOMAIN = 2,
  TDE_ERR_NOT_ON_SURFACE = 3,
  TDE_ERR_SINGULAR = 4,
  TDE_ERR_OVERFLOW = 5,
  TDE_ERR_PRECISION_LOSS = 6,
  TDE_ERR_NON_FINITE_REFLECTOR = 7,
  TDE_ERR_CFL = 8,
  TDE_ERR_UNRESOLVABLE = 9,
  TDE_ERR_MIXED_SIGN = 10,
  TDE_ERR_INCONCLUSIVE = 11,
  TDE_ERR_CONFIG = 12,
  TDE_ERR_IO = 13,
  TDE_ERR_INTERNAL = 99
} tde_status;

/* Parsed experiment configuration. */
typedef struct tde_experiment tde_experiment;
/* Result of a run, sweep or validation: exit code plus JSON and text renderings. */
typedef struct tde_result tde_result;
/* Indicator samples over a tau grid, values kept as sign and log magnitude. */
typedef struct tde_samples tde_samples;

TDE_API const char *tde_version(void);
TDE_API const char *tde_status_string(tde_status status);
/* Message of the last failed call on this thread; empty after a successful call. */
TDE_API const char *tde_last_error(void);

TDE_API tde_status tde_experiment_load(const char *path, tde_experiment **out);
TDE_API tde_status tde_experiment_parse(const char *json_text, tde_experiment **out);
TDE_API void tde_experiment_free(tde_experiment *experiment);
/* Overrides one scalar (tau_max, tau_min, h, T, eta, s, theta or a JSON pointer). */
TDE_API tde_status tde_experiment_set(tde_experiment *experiment, const char *parameter,
                                      double value);
/* Warnings about unmet hypotheses, as a JSON array of strings. Owned by the experiment. */
TDE_API tde_status tde_experiment_warnings(tde_experiment *experiment, const char **json_out);

/* out_dir may be NULL or empty to skip writing artifacts. */
TDE_API tde_status tde_experiment_run(const tde_experiment *experiment, const char *out_dir,
                                      tde_result **out);
TDE_API tde_status tde_experiment_sweep(const tde_experiment *experiment, const char *parameter,
                                        const double *values, size_t count, int workers,
                                        const char *out_dir, tde_result **out);
TDE_API tde_status tde_oracle_validate(unsigned seed, tde_result **out);

/* 0 success, 1 error, 2 inconclusive extraction. */
TDE_API int tde_result_exit_code(const tde_result *result);
TDE_API const char *tde_result_json(const tde_result *result);
TDE_API const char *tde_result_summary(const tde_result *result);
TDE_API void tde_result_free(tde_result *result);

/* Exact indicator of one sphere; a nonzero dirichlet flag ignores damping and stiffness. */
TDE_API tde_status tde_sphere_indicator(const double center[3], double radius, int dirichlet,
                                        double damping, double stiffness,
                                        const double probe_center[3], double probe_radius,
                                        const double *taus, size_t count, tde_samples **out);
TDE_API tde_status tde_samples_read_csv(const char *path, tde_samples **out);
TDE_API tde_status tde_samples_write_csv(const tde_samples *samples, const char *path);
TDE_API size_t tde_samples_size(const tde_samples *samples);
TDE_API tde_status tde_samples_get(const tde_samples *samples, size_t index, double *tau,
                                   int *sign, double *log_abs);
TDE_API void tde_samples_free(tde_samples *samples);

/* dist(D, B) from monostatic samples; window and residual are optional outputs. */
TDE_API tde_status tde_extract_distance(const tde_samples *samples, double *distance,
                                        double *tau_lo, double *tau_hi, double *residual);

#ifdef __cplusplus
}
#endif

#endif
