/* C interface for the puosc oscillator toolkit. */

#ifndef PUOSC_H
#define PUOSC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum PuStatus {
  /**
   * Success.
   */
  PU_STATUS_OK = 0,
  /**
   * Malformed input (bad frequencies, lengths, parameters).
   */
  PU_STATUS_INVALID_INPUT = 1,
  /**
   * The operation needs a simple spectrum (or the other way round).
   */
  PU_STATUS_DEGENERATE = 2,
  /**
   * A numeric step failed; see `pu_last_error_message`.
   */
  PU_STATUS_COMPUTE_FAILURE = 3,
  /**
   * A required pointer was null.
   */
  PU_STATUS_NULL_POINTER = 4,
} PuStatus;

/**
 * An oscillator fixed by its frequency list. Opaque to C callers.
 */
typedef struct PuOscillator PuOscillator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an oscillator from `len` positive frequencies.
 *
 * # Safety
 * `omegas` must point to `len` readable doubles and `out` must be a valid
 * destination for the handle. A handle returned here must be released with
 * `pu_oscillator_free`.
 */
enum PuStatus pu_oscillator_new(const double *omegas, size_t len, struct PuOscillator **out);

/**
 * Releases a handle created by `pu_oscillator_new`. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer previously returned by
 * `pu_oscillator_new` that has not been freed yet.
 */
void pu_oscillator_free(struct PuOscillator *handle);

/**
 * Number of modes `n`; zero for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t pu_oscillator_mode_count(const struct PuOscillator *handle);

/**
 * Phase-space dimension `2n`; zero for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t pu_oscillator_phase_dim(const struct PuOscillator *handle);

/**
 * Writes the companion matrix (row-major, `2n * 2n`).
 *
 * # Safety
 * `handle` must be live and `out` must hold `phase_dim^2` doubles.
 */
enum PuStatus pu_vector_field(const struct PuOscillator *handle, double *out);

/**
 * Writes the any-order power-sum Poisson tensor (row-major, `2n * 2n`).
 *
 * # Safety
 * `handle` must be live and `out` must hold `phase_dim^2` doubles.
 */
enum PuStatus pu_poisson_power_sum(const struct PuOscillator *handle, double *out);

/**
 * Writes the fourth-order two-parameter tensor for `(f, g)`.
 *
 * # Safety
 * `handle` must be live (two modes) and `out` must hold 16 doubles.
 */
enum PuStatus pu_poisson_two_param(const struct PuOscillator *handle,
                                   double f,
                                   double g,
                                   double *out);

/**
 * Writes the coefficient matrix of the mode energy `H_{mode+1}` (row-major).
 *
 * # Safety
 * `handle` must be live and `out` must hold `phase_dim^2` doubles.
 */
enum PuStatus pu_integral(const struct PuOscillator *handle, size_t mode, double *out);

/**
 * Solves the Hamiltonian weights against a caller-supplied constant tensor
 * (row-major `2n * 2n`, antisymmetrized exactly on the way in) and reports
 * the generation residual.
 *
 * # Safety
 * `tensor` must hold `phase_dim^2` doubles, `coeffs_out` must hold `n`
 * doubles and `residual_out` one double.
 */
enum PuStatus pu_solved_weights(const struct PuOscillator *handle,
                                const double *tensor,
                                double *coeffs_out,
                                double *residual_out);

/**
 * Max-abs Lie-derivative residual of a caller-supplied constant tensor
 * along the companion field; zero means the field preserves it.
 *
 * # Safety
 * `tensor` must hold `phase_dim^2` doubles and `out` one double.
 */
enum PuStatus pu_lie_residual(const struct PuOscillator *handle, const double *tensor, double *out);

/**
 * Simple-spectrum energy `hbar * sum_i w_i (k_i + 1/2)` for an occupation
 * tuple of length `len == n`.
 *
 * # Safety
 * `occupations` must hold `len` entries and `energy_out` one double.
 */
enum PuStatus pu_spectrum(const struct PuOscillator *handle,
                          const uint64_t *occupations,
                          size_t len,
                          double hbar,
                          double *energy_out);

/**
 * Tensor parameters that normalize both fourth-order mode pairs to unit
 * commutators.
 *
 * # Safety
 * `f_out` and `g_out` must each point to one double.
 */
enum PuStatus pu_fix_unit_parameters(const struct PuOscillator *handle,
                                     double hbar,
                                     double *f_out,
                                     double *g_out);

/**
 * Equal-frequency counterpart of `pu_fix_unit_parameters`.
 *
 * # Safety
 * `f_out` and `g_out` must each point to one double.
 */
enum PuStatus pu_fix_degenerate_parameters(double omega, double hbar, double *f_out, double *g_out);

/**
 * Evaluates the exact modal solution at time `t` for the initial state `x0`
 * (length `2n`), writing the state into `out`.
 *
 * # Safety
 * `x0` and `out` must each hold `phase_dim` doubles.
 */
enum PuStatus pu_exact_state(const struct PuOscillator *handle,
                             const double *x0,
                             double t,
                             double *out);

/**
 * RK4-integrates the companion system and writes the final state.
 *
 * # Safety
 * `x0` and `out` must each hold `phase_dim` doubles.
 */
enum PuStatus pu_rk4_final_state(const struct PuOscillator *handle,
                                 const double *x0,
                                 double dt,
                                 size_t steps,
                                 double *out);

/**
 * Copies the last error message (UTF-8, NUL-terminated, possibly truncated)
 * into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must hold `cap` writable bytes unless `cap` is zero.
 */
size_t pu_last_error_message(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PUOSC_H */
