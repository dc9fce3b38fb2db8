#ifndef ESNODE_ESNODE_H
#define ESNODE_ESNODE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ESNODE_BUILDING)
#    define ESN_API __declspec(dllexport)
#  else
#    define ESN_API __declspec(dllimport)
#  endif
#else
#  define ESN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum esn_status {
  ESN_OK = 0,
  ESN_ERR_CONFIG = 1,
  ESN_ERR_IO = 2,
  ESN_ERR_DIMENSION = 3,
  ESN_ERR_LENGTH = 4,
  ESN_ERR_DEGENERATE = 5,
  ESN_ERR_NONFINITE = 6,
  ESN_ERR_SINGULAR = 7,
  ESN_ERR_TRIAL_DIVERGED = 8,
  ESN_ERR_INVALID_ARGUMENT = 9,
  ESN_ERR_INTERNAL = 10
} esn_status;

typedef struct esn_config esn_config;
typedef struct esn_model esn_model;

typedef struct esn_summary {
  double stage1_initial_loss;
  double stage1_final_loss;
  double stage2_initial_loss;
  double stage2_final_loss;
  int stage1_iterations;
  int stage2_iterations;
  int stage1_converged;
  int stage2_converged;
  int dim;
  int n_points;
  /* Stage-2 output against the reference, over all components. */
  double max_abs;
  double rmse;
  double trial_max_abs;
  double trial_rmse;
} esn_summary;

/* Message of the last failure on the calling thread; never NULL. */
ESN_API const char* esn_last_error(void);
ESN_API const char* esn_status_name(esn_status status);
/* Nonzero for failures of the numerics (non-finite values, singular
 * systems, diverged trial) as opposed to bad inputs. */
ESN_API int esn_status_is_numerical(esn_status status);

ESN_API esn_status esn_config_from_file(const char* path, esn_config** out);
ESN_API esn_status esn_config_from_json(const char* json_text, esn_config** out);
/* Dotted override, e.g. "stage1.max_iters=1". */
ESN_API esn_status esn_config_set(esn_config* cfg, const char* assignment);
ESN_API esn_status esn_config_set_seed(esn_config* cfg, uint64_t seed);
/* Writes the effective config as JSON; *needed receives the full length
 * including the terminating NUL even when buf is too small. */
ESN_API esn_status esn_config_to_json(const esn_config* cfg, char* buf, size_t size, size_t* needed);
ESN_API void esn_config_free(esn_config* cfg);

ESN_API esn_status esn_train(const esn_config* cfg, esn_model** out);
ESN_API esn_status esn_model_summary(const esn_model* model, esn_summary* out);
ESN_API esn_status esn_model_write_artifacts(const esn_model* model, const char* dir);
/* Closed-loop generation from the first kept point; out holds
 * (n_steps + 1) * dim doubles, row-major. */
ESN_API esn_status esn_model_generate(const esn_model* model, int n_steps, double* out, size_t out_len);
ESN_API void esn_model_free(esn_model* model);

/* Writes trial.csv only. */
ESN_API esn_status esn_write_trial(const esn_config* cfg, const char* dir);
/* Analytic vs finite-difference Jacobians on a shrunken instance. */
ESN_API esn_status esn_gradcheck(const esn_config* cfg, double* stage1_rel_error, double* stage2_rel_error);
/* Human-readable table of the artifacts in dir, same buffer contract as
 * esn_config_to_json. */
ESN_API esn_status esn_report_format(const char* dir, char* buf, size_t size, size_t* needed);
ESN_API esn_status esn_dump_reservoir(const esn_config* cfg, const char* path);

#ifdef __cplusplus
}
#endif

#endif
