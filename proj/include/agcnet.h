/*
 * agcnet: adaptive graph-wavelet convolution forecasting engine.
 *
 * C interface to the shared library. All functions return an agc_status;
 * AGC_OK means success. On failure, agc_last_error() returns a thread-local
 * human-readable message describing the most recent failure on the calling
 * thread. Opaque handles must be released with the matching *_free call.
 *
 * File formats (configs, data directories, checkpoints, reports) are
 * documented in docs/FORMATS.md of the source distribution.
 */

#ifndef AGCNET_H
#define AGCNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AGC_API __declspec(dllexport)
#else
#define AGC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agc_status {
  AGC_OK = 0,
  AGC_ERR_INVALID_ARGUMENT = 1, /* contract violation (bad shapes, bad values) */
  AGC_ERR_IO = 2,               /* missing / unwritable files */
  AGC_ERR_PARSE = 3,            /* malformed config, CSV, or checkpoint */
  AGC_ERR_NUMERIC = 4,          /* overflow guard, divergence, non-finite gradient */
  AGC_ERR_INTERNAL = 5,
} agc_status;

AGC_API const char* agc_version(void);
AGC_API const char* agc_status_name(agc_status status);
/* Thread-local message for the last failing call on this thread. */
AGC_API const char* agc_last_error(void);

/* ---- run configuration ------------------------------------------------- */

typedef struct agc_config agc_config;

/* Creates a config with the documented defaults. */
AGC_API agc_status agc_config_create(agc_config** out);
/* Loads `key: value` lines; unknown keys are an error. */
AGC_API agc_status agc_config_load(const char* path, agc_config** out);
AGC_API agc_status agc_config_set(agc_config* config, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); fails if buf_len is too small. */
AGC_API agc_status agc_config_get(const agc_config* config, const char* key, char* buf,
                                  size_t buf_len);
AGC_API agc_status agc_config_save(const agc_config* config, const char* path);
AGC_API void agc_config_free(agc_config* config);

/* ---- commands ------------------------------------------------------------
 * These mirror the CLI subcommands. Directory arguments follow the layouts
 * described in docs/FORMATS.md.
 */

/* Writes a synthetic dataset (adjacency.csv, signals.csv, metadata.txt). */
AGC_API agc_status agc_run_synth(const agc_config* config, const char* out_dir);

/* Trains on data_dir; writes config echo, checkpoints, history and final
 * metrics into run_dir. */
AGC_API agc_status agc_run_train(const agc_config* config, const char* data_dir,
                                 const char* run_dir);

/* Evaluates a checkpoint on the test split of data_dir; writes report.txt /
 * report.json (model next to the persistence baseline) into out_dir. */
AGC_API agc_status agc_run_eval(const char* checkpoint_path, const char* data_dir,
                                const char* out_dir);

/* Finite-difference gradient verification on a tiny pinned instance.
 * `passed` receives 1/0. report_path may be NULL (no file written);
 * corrupt_param is a fault-injection hook for tests and is normally NULL. */
AGC_API agc_status agc_run_gradcheck(const agc_config* config, const char* report_path,
                                     const char* corrupt_param, int* passed);

/* Runs the ablation settings over shared seeds; writes ablate.json and
 * ablate_report.txt into out_dir. */
AGC_API agc_status agc_run_ablate(const agc_config* config, const char* data_dir,
                                  const char* out_dir);

/* Welch's t-test between the final test MAEs of two groups of run dirs.
 * Outputs through pointers may be NULL when not needed. */
AGC_API agc_status agc_run_ttest(const char* const* run_dirs_a, size_t n_a,
                                 const char* const* run_dirs_b, size_t n_b,
                                 const char* report_path, double* t_out, double* p_out);

/* ---- loaded model handle ------------------------------------------------ */

typedef struct agc_model agc_model;

/* Opens a checkpoint together with the adjacency edge list it was trained
 * against (the node count is recovered from the checkpoint). */
AGC_API agc_status agc_model_open(const char* checkpoint_path, const char* adjacency_path,
                                  agc_model** out);

/* nodes (N), history (H), horizon (P), channels (C); any pointer may be NULL. */
AGC_API agc_status agc_model_dims(const agc_model* model, int32_t* nodes, int32_t* history,
                                  int32_t* horizon, int32_t* channels);

/* One forward pass in normalized units. x is H*N*C doubles, laid out
 * time-major row-major (t, node, channel); out is N*P doubles (node, step).
 * x_len and out_len are element counts and must match exactly. */
AGC_API agc_status agc_model_predict(const agc_model* model, const double* x, size_t x_len,
                                     double* out, size_t out_len);

AGC_API void agc_model_free(agc_model* model);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AGCNET_H */
