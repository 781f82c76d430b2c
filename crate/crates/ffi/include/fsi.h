/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef FSI_H
#define FSI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes of every fallible call.
typedef enum {
  FSI_STATUS_OK = 0,
  FSI_STATUS_NULL_POINTER = 1,
  FSI_STATUS_INVALID_UTF8 = 2,
  FSI_STATUS_CONFIG = 3,
  FSI_STATUS_SOLVER = 4,
  FSI_STATUS_CHECKPOINT = 5,
  FSI_STATUS_IO = 6,
  FSI_STATUS_OUT_OF_RANGE = 7,
  FSI_STATUS_PANIC = 8,
} FsiStatus;

// A run configuration.
typedef struct FsiConfig FsiConfig;

// The outcome of a finished run.
typedef struct FsiRun FsiRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next
// failing call on the same thread.
const char *fsi_last_error(void);

// Library version as a static string.
const char *fsi_version(void);

void fsi_string_free(char *s);

FsiStatus fsi_config_default(FsiConfig **out);

// One of the named presets, for example `"benign"` or `"inflating"`.
FsiStatus fsi_config_preset(const char *name, FsiConfig **out);

FsiStatus fsi_config_from_json(const char *json, FsiConfig **out);

FsiStatus fsi_config_load(const char *path, FsiConfig **out);

// Pretty-printed JSON of the configuration; release with [`fsi_string_free`].
FsiStatus fsi_config_to_json(const FsiConfig *config, char **out);

// Hex digest identifying the configuration, output directory excluded.
FsiStatus fsi_config_hash(const FsiConfig *config, char **out);

FsiStatus fsi_config_set_seed(FsiConfig *config, uint64_t seed);

FsiStatus fsi_config_set_horizon(FsiConfig *config, size_t steps);

// Directory for diagnostics, dumps, checkpoints and the summary; null keeps the
// run in memory.
FsiStatus fsi_config_set_output_dir(FsiConfig *config, const char *dir);

void fsi_config_free(FsiConfig *config);

// Checks the start data; `passed` receives the overall verdict and `report`, when
// not null, the per-check JSON report.
FsiStatus fsi_validate(const FsiConfig *config, bool *passed, char **report);

// Runs the configured scenario. Solver failures still produce a run whose exit
// code is nonzero; see [`fsi_run_exit_code`].
FsiStatus fsi_run(const FsiConfig *config, FsiRun **out);

// Continues from a checkpoint file; `out_dir` may be null.
FsiStatus fsi_resume(const char *checkpoint, const char *out_dir, FsiRun **out);

// 0 for a clean run, 1 when the run recorded an error; -1 for a null handle.
int32_t fsi_run_exit_code(const FsiRun *run);

// Time steps completed, counted from the original start.
size_t fsi_run_steps(const FsiRun *run);

// Diagnostic rows held by the run, the start row included for fresh runs.
size_t fsi_run_rows(const FsiRun *run);

// Copies the diagnostics column `name`, one of the CSV header names, into `values`
// (at least [`fsi_run_rows`] entries). Empty entries become NaN.
FsiStatus fsi_run_column(const FsiRun *run, const char *name, double *values, size_t len);

// The run summary as JSON; release with [`fsi_string_free`].
FsiStatus fsi_run_summary_json(const FsiRun *run, char **out);

void fsi_run_free(FsiRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSI_H */
