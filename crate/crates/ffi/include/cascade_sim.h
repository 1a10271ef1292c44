#ifndef CASCADE_SIM_H
#define CASCADE_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CascadeStatus {
  CASCADE_STATUS_OK = 0,
  CASCADE_STATUS_NULL_POINTER = 1,
  CASCADE_STATUS_INVALID_PARAMETER = 2,
  CASCADE_STATUS_INVALID_TIME = 3,
  CASCADE_STATUS_INVALID_EFFICIENCY = 4,
  CASCADE_STATUS_INVALID_GRID = 5,
  CASCADE_STATUS_ZERO_PROBABILITY = 6,
  CASCADE_STATUS_EMPTY_ENSEMBLE = 7,
  CASCADE_STATUS_INTERNAL = 8,
  CASCADE_STATUS_PANIC = 9,
} CascadeStatus;

/**
 * Opaque validated parameter set.
 */
typedef struct CascadeParams CascadeParams;

/**
 * Raw parameters of one atom-cavity subsystem, in units of 𝒦.
 */
typedef struct CascadeSubsystem {
  double g;
  double omega_rabi;
  double detuning;
  double kappa;
  double kappa_loss;
  double gamma;
  double gamma_prime;
} CascadeSubsystem;

/**
 * No-jump amplitudes α, β, γ, δ split into real and imaginary parts.
 */
typedef struct CascadeAmplitudes {
  double t;
  double alpha_re;
  double alpha_im;
  double beta_re;
  double beta_im;
  double gamma_re;
  double gamma_im;
  double delta_re;
  double delta_im;
  double p_no;
  double concurrence_atoms;
  double concurrence_cavities;
  bool laser_on;
} CascadeAmplitudes;

typedef struct CascadeChannelProbabilities {
  double t;
  double p_no;
  double p_rad;
  double p_abs;
  double p_yes;
  double eta;
  double p0;
} CascadeChannelProbabilities;

typedef struct CascadeRecordCounts {
  uint64_t n;
  uint64_t no_jump;
  uint64_t clicked;
  uint64_t reflected;
  uint64_t lost;
} CascadeRecordCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validates the parameters and stores a new handle in `*out_params`.
 *
 * # Safety
 * `a` and `b` must point to valid `CascadeSubsystem` values and
 * `out_params` to writable storage for one pointer.
 */
enum CascadeStatus cascade_params_new(const struct CascadeSubsystem *a,
                                      const struct CascadeSubsystem *b,
                                      double phi,
                                      struct CascadeParams **out_params);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `params` must come from `cascade_params_new` and not be used afterwards.
 */
void cascade_params_free(struct CascadeParams *params);

/**
 * Amplitudes at time `t` under switch-off at `tbar` (NaN: never).
 *
 * # Safety
 * `params` must be a live handle and `out_amplitudes` writable.
 */
enum CascadeStatus cascade_evolve(const struct CascadeParams *params,
                                  double tbar,
                                  double t,
                                  struct CascadeAmplitudes *out_amplitudes);

/**
 * Switch-off time in [`t_lo`, `t_hi`] maximizing the atom-atom
 * concurrence.
 *
 * # Safety
 * `params` must be a live handle and `out_tbar` writable.
 */
enum CascadeStatus cascade_find_tbar(const struct CascadeParams *params,
                                     double t_lo,
                                     double t_hi,
                                     double *out_tbar);

/**
 * p_no, p_rad, p_abs and the null-click probability at `t`.
 *
 * # Safety
 * `params` must be a live handle and `out_probabilities` writable.
 */
enum CascadeStatus cascade_channel_probabilities(const struct CascadeParams *params,
                                                 double tbar,
                                                 double t,
                                                 double eta,
                                                 struct CascadeChannelProbabilities *out_probabilities);

/**
 * Atom-atom concurrence at `t` given that a detector of efficiency `eta`
 * has not clicked.
 *
 * # Safety
 * `params` must be a live handle and `out_concurrence` writable.
 */
enum CascadeStatus cascade_conditional_concurrence(const struct CascadeParams *params,
                                                   double tbar,
                                                   double t,
                                                   double eta,
                                                   double *out_concurrence);

/**
 * Monte-Carlo detection records of `n` trajectories up to `t_max`.
 *
 * # Safety
 * `params` must be a live handle and `out_counts` writable.
 */
enum CascadeStatus cascade_simulate_records(const struct CascadeParams *params,
                                            double tbar,
                                            double eta,
                                            uint64_t n,
                                            uint64_t seed,
                                            double t_max,
                                            double dt,
                                            struct CascadeRecordCounts *out_counts);

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *cascade_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cascade_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_SIM_H */
