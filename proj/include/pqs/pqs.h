/* Planar quantum squeezing simulation and estimation pipeline: C API.
 *
 * All functions return a pqs_status. On failure a message describing the
 * error is available from pqs_last_error() on the calling thread until the
 * next failing call on that thread. Objects are opaque and owned by the
 * caller, who releases them with the matching *_free function (NULL is
 * accepted). Matrices are 2x2, row-major, ordered (y, z).
 */
#ifndef PQS_PQS_H
#define PQS_PQS_H

#include <stddef.h>

#if defined(PQS_BUILDING_LIBRARY)
#define PQS_API __attribute__((visibility("default")))
#else
#define PQS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pqs_status {
  PQS_OK = 0,
  PQS_ERR_INVALID_ARGUMENT = 1,
  PQS_ERR_CONFIG = 2,
  PQS_ERR_IO = 3,
  PQS_ERR_PARSE = 4,
  PQS_ERR_FIT = 5,
  PQS_ERR_IDENTIFIABILITY = 6,
  PQS_ERR_CONDITIONING = 7,
  PQS_ERR_DOMAIN = 8,
  PQS_ERR_INTERNAL = 9
} pqs_status;

typedef struct pqs_config pqs_config;
typedef struct pqs_result pqs_result;
typedef struct pqs_scan pqs_scan;

typedef struct pqs_metrics {
  double f_par;              /* spins */
  double n_atoms_in;         /* spins */
  double n_tilde;            /* spins remaining in f = 1 */
  double xi_par_sq, xi_par_sq_err;
  double xi_y_sq, xi_y_sq_err;
  double xi_z_sq, xi_z_sq_err;
  double xi_e_sq, xi_e_sq_err;
  double xi_m_sq, xi_m_sq_err;
  int entangled;             /* xi_e_sq < 7/16 */
  double sql_phase_variance; /* rad^2 */
  double min_phase_variance; /* rad^2 */
  double trace_gamma_cond;   /* spins^2 */
} pqs_metrics;

PQS_API const char* pqs_version(void);
PQS_API const char* pqs_last_error(void);
PQS_API const char* pqs_status_name(pqs_status status);

/* Configuration. */
PQS_API pqs_status pqs_config_default(pqs_config** out);
PQS_API pqs_status pqs_config_load(const char* path, pqs_config** out);
PQS_API pqs_status pqs_config_set(pqs_config* cfg, const char* key, const char* value);
/* Resolved config text (every key); valid until the next call on cfg. */
PQS_API pqs_status pqs_config_resolved(pqs_config* cfg, const char** text);
PQS_API pqs_status pqs_config_write(const pqs_config* cfg, const char* path);
PQS_API void pqs_config_free(pqs_config* cfg);

/* Runs. A result keeps a copy of the config it was produced with. */
PQS_API pqs_status pqs_simulate(const pqs_config* cfg, pqs_result** out);
PQS_API pqs_status pqs_analyze_files(const pqs_config* cfg, const char* const* trace_paths,
                                     size_t n_paths, pqs_result** out);
/* Stats from a file written by pqs_result_write_stats (or by hand). */
PQS_API pqs_status pqs_stats_load(const pqs_config* cfg, const char* stats_path, pqs_result** out);
/* Readout-noise run without atoms; the result carries gamma_zero only. */
PQS_API pqs_status pqs_calibrate(const pqs_config* cfg, pqs_result** out);

PQS_API pqs_status pqs_result_gamma_cond(const pqs_result* r, double out[4]);
PQS_API pqs_status pqs_result_gamma_zero(const pqs_result* r, double out[4]);
PQS_API pqs_status pqs_result_metrics(const pqs_result* r, pqs_metrics* out);
PQS_API pqs_status pqs_result_write_traces(const pqs_result* r, const char* path);
PQS_API pqs_status pqs_result_write_stats(const pqs_result* r, const char* path);
PQS_API pqs_status pqs_result_write_metrics(const pqs_result* r, const char* path);
PQS_API pqs_status pqs_result_write_phase_curve(const pqs_result* r, const char* path);
PQS_API void pqs_result_free(pqs_result* r);

/* Scans. values == NULL uses the list from the config. */
PQS_API pqs_status pqs_scan_coherence(const pqs_config* cfg, const double* n_atoms, size_t n,
                                      pqs_scan** out);
PQS_API pqs_status pqs_scan_window(const pqs_config* cfg, const double* window_us, size_t n,
                                   pqs_scan** out);
PQS_API size_t pqs_scan_size(const pqs_scan* scan);
PQS_API pqs_status pqs_scan_point(const pqs_scan* scan, size_t index, double* axis, pqs_metrics* out);
PQS_API pqs_status pqs_scan_write_csv(const pqs_scan* scan, const char* path);
PQS_API void pqs_scan_free(pqs_scan* scan);

#ifdef __cplusplus
}
#endif

#endif /* PQS_PQS_H */
