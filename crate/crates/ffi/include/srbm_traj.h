#ifndef SRBM_TRAJ_H
#define SRBM_TRAJ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrbmStatus {
  SRBM_STATUS_OK = 0,
  SRBM_STATUS_NULL_POINTER = 1,
  SRBM_STATUS_INVALID_UTF8 = 2,
  SRBM_STATUS_IO = 3,
  SRBM_STATUS_PARSE = 4,
  SRBM_STATUS_CONFIG = 5,
  SRBM_STATUS_RANGE = 6,
  SRBM_STATUS_INVALID = 7,
  SRBM_STATUS_SOLVE_FAILED = 8,
  SRBM_STATUS_EVALUATION = 9,
  SRBM_STATUS_PANIC = 10,
} SrbmStatus;

/*
 Opaque trajectory library.
 */
typedef struct SrbmLibrary SrbmLibrary;

/*
 A reference sample. Arrays are left then right for feet.
 */
typedef struct SrbmSample {
  double time;
  double phase;
  uint64_t cycle;
  uint64_t mode;
  /*
   `p, q (w x y z), v, omega`.
   */
  double state[13];
  double angular_momentum[3];
  uint8_t in_contact[2];
  double grf[2][3];
  double foot[2][3];
} SrbmSample;

/*
 Coefficients in the order orientation, velocity x/y/z, angular momentum,
 foot position x/y, clock, foot orientation, foot height, drift, hip roll,
 hip yaw.
 */
typedef struct SrbmRewardConfig {
  double coefficients[13];
  double foot_position_scale;
  double drift_threshold;
  double drift_scale;
  double z_foot_des;
  /*
   0 averages foot terms over both feet, 1 over swing feet.
   */
  uint8_t swing_only;
  double clock_gain;
} SrbmRewardConfig;

typedef struct SrbmFoot {
  double p_rel[2];
  double z;
  /*
   `w x y z`.
   */
  double q[4];
} SrbmFoot;

typedef struct SrbmRobotSummary {
  double q[4];
  double v[3];
  double angular_momentum[3];
  struct SrbmFoot feet[2];
  double p_y;
  double hip_roll_velocity;
  double hip_yaw_velocity;
  double f_clock;
} SrbmRobotSummary;

/*
 Terms followed by the normalized total.
 */
typedef struct SrbmRewardBreakdown {
  double r_q;
  double r_v;
  double r_l;
  double r_pf;
  double r_clock;
  double r_qfoot;
  double r_zfoot;
  double r_drift;
  double r_hiproll;
  double r_hipyaw;
  double total;
} SrbmRewardBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *srbm_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *srbm_version(void);

/*
 Read a library file.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_load(const char *path, struct SrbmLibrary **out);

/*
 Solve the maneuver described by a TOML config and wrap the result in a
 one-entry library. `converged` receives 1 on convergence, else 0; the
 library is produced either way.

 # Safety
 `config_toml` must be NUL-terminated; `out` and `converged` valid pointers.
 */
enum SrbmStatus srbm_solve_config(const char *config_toml,
                                  struct SrbmLibrary **out,
                                  uint8_t *converged);

/*
 Release a library. Null is ignored.

 # Safety
 `lib` must come from this API and not be used afterwards.
 */
void srbm_library_free(struct SrbmLibrary *lib);

/*
 Write a library in the text format.

 # Safety
 `lib` must be a live handle and `path` NUL-terminated.
 */
enum SrbmStatus srbm_library_save(const struct SrbmLibrary *lib, const char *path);

/*
 Number of entries.

 # Safety
 `lib` must be a live handle and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_len(const struct SrbmLibrary *lib, size_t *out);

/*
 Parameter value of entry `index`.

 # Safety
 `lib` must be a live handle and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_value(const struct SrbmLibrary *lib, size_t index, double *out);

/*
 Duration of entry `index`, s.

 # Safety
 `lib` must be a live handle and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_duration(const struct SrbmLibrary *lib, size_t index, double *out);

/*
 Entry closest to `value`; `inside` is 1 when `value` lies within the
 library's range.

 # Safety
 `lib` must be a live handle; `index` and `inside` valid pointers.
 */
enum SrbmStatus srbm_library_nearest(const struct SrbmLibrary *lib,
                                     double value,
                                     size_t *index,
                                     uint8_t *inside);

/*
 Sample entry `index` at time `t`. With `looping` nonzero the cycle repeats.

 # Safety
 `lib` must be a live handle and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_sample(const struct SrbmLibrary *lib,
                                    size_t index,
                                    double t,
                                    uint8_t looping,
                                    struct SrbmSample *out);

/*
 Clock penalty for measured contacts (`left`, `right` nonzero when in
 contact) against entry `index`.

 # Safety
 `lib` must be a live handle and `out` a valid pointer.
 */
enum SrbmStatus srbm_library_clock(const struct SrbmLibrary *lib,
                                   size_t index,
                                   double t,
                                   uint8_t left,
                                   uint8_t right,
                                   double gain,
                                   double *out);

/*
 Fill `out` with the default reward settings.

 # Safety
 `out` must be a valid pointer.
 */
enum SrbmStatus srbm_reward_config_default(struct SrbmRewardConfig *out);

/*
 Evaluate the reward of `robot` against `reference`.

 # Safety
 All pointers must be valid.
 */
enum SrbmStatus srbm_reward_evaluate(const struct SrbmRobotSummary *robot,
                                     const struct SrbmSample *reference,
                                     const struct SrbmRewardConfig *config,
                                     struct SrbmRewardBreakdown *out);

/*
 Summary of a robot tracking `reference` perfectly, for testing callers.

 # Safety
 All pointers must be valid.
 */
enum SrbmStatus srbm_robot_from_reference(const struct SrbmSample *reference,
                                          const struct SrbmRewardConfig *config,
                                          struct SrbmRobotSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRBM_TRAJ_H */
