#ifndef ELASTIC_CGO_H
#define ELASTIC_CGO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EcgoStatus {
  ECGO_STATUS_OK = 0,
  ECGO_STATUS_NULL_POINTER = 1,
  ECGO_STATUS_INVALID_ARGUMENT = 2,
  ECGO_STATUS_INVALID_CONFIG = 3,
  ECGO_STATUS_IO = 4,
  ECGO_STATUS_NUMERICAL = 5,
  ECGO_STATUS_NOT_FOUND = 6,
  ECGO_STATUS_BUFFER_TOO_SMALL = 7,
  ECGO_STATUS_PANIC = 8,
} EcgoStatus;

/*
 Experiment configuration.
 */
typedef struct EcgoConfig EcgoConfig;

/*
 Truth, reconstruction and error table of one forward/inverse run.
 */
typedef struct EcgoRun EcgoRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL terminated,
 truncated to `len`). Returns the full message length in bytes, without
 the terminator.
 */
uintptr_t ecgo_last_error(char *buf, uintptr_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *ecgo_version(void);

/*
 Default static configuration.
 */
enum EcgoStatus ecgo_config_default(struct EcgoConfig **out);

/*
 Default configuration at two positive frequencies, with density.
 */
enum EcgoStatus ecgo_config_two_frequency(struct EcgoConfig **out);

/*
 Parses and validates a JSON configuration; missing keys take defaults.
 */
enum EcgoStatus ecgo_config_from_json(const char *json, struct EcgoConfig **out);

/*
 Sets the spatial and frequency grid sizes per axis.
 */
enum EcgoStatus ecgo_config_set_grid(struct EcgoConfig *cfg, uintptr_t spatial_n, uintptr_t freq_n);

void ecgo_config_free(struct EcgoConfig *cfg);

/*
 Runs the Navier residual checks; `passed` receives 1 or 0.
 */
enum EcgoStatus ecgo_verify_cgo(const struct EcgoConfig *cfg, int32_t *passed);

/*
 Runs the closed-form and algebraic identity checks; `passed` receives 1 or 0.
 */
enum EcgoStatus ecgo_verify_identities(const struct EcgoConfig *cfg, int32_t *passed);

/*
 Synthesizes data from the configured phantom and reconstructs it.
 */
enum EcgoStatus ecgo_run(const struct EcgoConfig *cfg, struct EcgoRun **out);

void ecgo_run_free(struct EcgoRun *run);

/*
 Number of values in each field of the run.
 */
enum EcgoStatus ecgo_run_field_len(const struct EcgoRun *run, uintptr_t *len);

/*
 Relative L² error of one component, e.g. `"c1313"` or `"rho11"`.
 */
enum EcgoStatus ecgo_run_rel_l2(const struct EcgoRun *run, const char *component, double *value);

/*
 Copies a reconstructed component into `buf`, laid out as the grid's
 flat index (x slowest).
 */
enum EcgoStatus ecgo_run_field(const struct EcgoRun *run,
                               const char *component,
                               double *buf,
                               uintptr_t len);

/*
 Copies a ground-truth component into `buf`.
 */
enum EcgoStatus ecgo_run_truth(const struct EcgoRun *run,
                               const char *component,
                               double *buf,
                               uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELASTIC_CGO_H */
