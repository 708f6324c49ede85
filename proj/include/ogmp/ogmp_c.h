/* C interface to the oracle-guided locomotion toolkit.
 *
 * Every function returns an ogmp_status; OGMP_OK means success. On failure
 * the thread-local message from ogmp_last_error() describes what went wrong.
 * Objects are created behind opaque handles and must be released with the
 * matching _destroy call. Configuration is passed as JSON text following the
 * run-config schema (see the README); unknown fields are rejected.
 */
#ifndef OGMP_C_H
#define OGMP_C_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ogmp_status {
  OGMP_OK = 0,
  OGMP_ERR_INVALID_ARGUMENT = 1, /* bad value, dimension, or empty input */
  OGMP_ERR_CONFIG = 2,           /* schema violation in the config text */
  OGMP_ERR_IO = 3,               /* missing or unwritable file */
  OGMP_ERR_NUMERIC = 4,          /* NaN, non-convergence, singular system */
  OGMP_ERR_CHECKSUM = 5,         /* artifact content does not match its hash */
  OGMP_ERR_STATE = 6,            /* call sequence misuse (e.g. stepping a
                                    finished episode) */
  OGMP_ERR_INTERNAL = 7          /* unexpected failure; see ogmp_last_error */
} ogmp_status;

/* Stable name for a status value ("ok", "invalid_argument", ...). */
const char* ogmp_status_name(ogmp_status status);

/* Message for the most recent failure on the calling thread; empty string
 * after a success. The pointer stays valid until the next call. */
const char* ogmp_last_error(void);

const char* ogmp_version(void);

/* ---------------------------------------------------------------- episode
 * environment: planar single-rigid-body parkour over procedural tracks. */
typedef struct ogmp_env ogmp_env;

ogmp_status ogmp_env_create(const char* config_json, ogmp_env** out_env);
void ogmp_env_destroy(ogmp_env* env);

ogmp_status ogmp_env_obs_dim(const ogmp_env* env, int32_t* out_dim);
ogmp_status ogmp_env_action_dim(const ogmp_env* env, int32_t* out_dim);

/* Start a fresh episode; writes obs_len (= obs_dim) doubles. */
ogmp_status ogmp_env_reset(ogmp_env* env, uint64_t seed, double* out_obs,
                           int32_t obs_len);

/* Termination codes reported by ogmp_env_step. */
#define OGMP_TERM_NONE 0       /* episode continues */
#define OGMP_TERM_RHO 1        /* left the permissible tube around the plan */
#define OGMP_TERM_FALL 2       /* base below the fall height */
#define OGMP_TERM_TIME_LIMIT 3 /* ran out of steps */

/* Advance one control step with an action of action_dim entries. */
ogmp_status ogmp_env_step(ogmp_env* env, const double* action,
                          int32_t action_len, double* out_obs,
                          int32_t obs_len, double* out_reward,
                          int32_t* out_termination);

/* Base state [p_x, p_z, theta, v_x, v_z, omega, 1] (7 doubles). */
ogmp_status ogmp_env_state(const ogmp_env* env, double* out_state7);

/* ------------------------------------------------------------------ oracle:
 * closed-form reference planners queried per mode instance. */
typedef struct ogmp_oracle ogmp_oracle;

ogmp_status ogmp_oracle_create(const char* config_json,
                               ogmp_oracle** out_oracle);
void ogmp_oracle_destroy(ogmp_oracle* oracle);

/* Plan `horizon` steps for one mode instance ("pace" a = speed; "jump"
 * a = block width, b = height; "leap" a = gap width, b = depth) starting
 * from state7 (pass NULL for the canonical cruising start). Writes
 * (horizon + 1) * 7 doubles row-major into out_states and, when non-NULL,
 * `horizon` phase flags (0 contact, 1 flight) into out_phases. */
ogmp_status ogmp_oracle_query(const ogmp_oracle* oracle, const double* state7,
                              const char* mode, double a, double b,
                              int32_t horizon, double* out_states,
                              int32_t* out_phases);

/* ------------------------------------------------------- orchestration:
 * the experiment pipeline behind the command-line tool. All paths are
 * created as needed; artifacts are deterministic in the config. */

/* Full pipeline into the config's out_dir: resolved config, mode dataset,
 * trajectory encoder, per-seed policy training, evaluation, manifest. */
ogmp_status ogmp_run_experiment(const char* config_json);

/* Evaluate a policy checkpoint; writes eval_episodes.csv and
 * eval_report.csv under out_dir using the config's eval settings. */
ogmp_status ogmp_eval(const char* config_json, const char* checkpoint_path,
                      const char* out_dir);

/* Train/evaluate one run per (value, seed) along an ablation axis
 * ("rho", "oracle", "horizon", "obs_mask"). values_csv is a comma-separated
 * list, or NULL for the canonical values; writes sweep_long.csv and
 * sweep_pivot.csv plus per-cell artifacts under out_dir. */
ogmp_status ogmp_sweep(const char* config_json, const char* axis,
                       const char* values_csv, const char* out_dir);

/* Balanced oracle-rollout dataset (CSV + JSON sidecar) at out_csv. */
ogmp_status ogmp_gen_dataset(const char* config_json, const char* out_csv);

/* Train the trajectory autoencoder on a dataset CSV; saves the encoder and,
 * when latent_csv is non-NULL, the latent scatter of the dataset. */
ogmp_status ogmp_train_encoder(const char* config_json,
                               const char* dataset_csv,
                               const char* out_encoder,
                               const char* latent_csv);

/* Reference-trajectory CSV for one mode instance (see ogmp_oracle_query). */
ogmp_status ogmp_oracle_viz(const char* config_json, const char* mode,
                            double a, double b, const char* out_csv);

/* Mean return of a checkpoint on single-obstacle tracks over a cells_a x
 * cells_b grid spanning the dilated test box of "jump" or "leap". */
ogmp_status ogmp_versatility_grid(const char* config_json,
                                  const char* checkpoint_path,
                                  const char* mode, int32_t cells_a,
                                  int32_t cells_b, int32_t episodes_per_cell,
                                  uint64_t seed, const char* out_csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OGMP_C_H */
