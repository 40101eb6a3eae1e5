#ifndef FELAB_H
#define FELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FelabStatus {
  FELAB_STATUS_OK = 0,
  FELAB_STATUS_NULL_POINTER = 1,
  FELAB_STATUS_INVALID_ARGUMENT = 2,
  FELAB_STATUS_INVALID_GRID = 3,
  FELAB_STATUS_RESOLUTION = 4,
  FELAB_STATUS_BLOW_UP = 5,
  FELAB_STATUS_KAPPA_BUDGET = 6,
  FELAB_STATUS_CHECKPOINT = 7,
  FELAB_STATUS_IO = 8,
  FELAB_STATUS_PANIC = 9,
  FELAB_STATUS_OTHER = 10,
} FelabStatus;

// Opaque simulation handle.
typedef struct FelabSim FelabSim;

// Parameters for [`felab_sim_new`].
typedef struct FelabSimConfig {
  // Dissipation power in (0, 2].
  double gamma;
  // Grid points per dimension (even, at least 4).
  size_t n;
  double dt;
  uint64_t seed;
  // Trajectory stream id within the seed.
  uint64_t stream;
  // Forced modes: all `0 < |k| <= n_force`; 0 disables forcing.
  double n_force;
  // `q_k = amplitude |k|^-exponent`.
  double forcing_exponent;
  double forcing_amplitude;
  // Nonzero enables the 2/3 dealiasing rule.
  int32_t dealias;
} FelabSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Fills `out` with defaults: gamma 1, n 64, dt 1e-3, ball forcing of radius 4
// and amplitude 1, dealiasing on.
//
// # Safety
// `out` must be null or point to writable memory for one `FelabSimConfig`.
enum FelabStatus felab_sim_config_default(struct FelabSimConfig *out);

// Creates a simulation with zero initial vorticity.
//
// # Safety
// `cfg` must point to a valid `FelabSimConfig`; `out` to writable storage
// for one pointer.
enum FelabStatus felab_sim_new(const struct FelabSimConfig *cfg, struct FelabSim **out);

// Releases a handle; null is ignored.
//
// # Safety
// `sim` must be null or a handle from [`felab_sim_new`] not yet freed.
void felab_sim_free(struct FelabSim *sim);

// Replaces the state by the single real mode `amplitude·sin(k·x)` (or cos if
// `cosine` is nonzero); time and step counter are kept.
//
// # Safety
// `sim` must be a live handle.
enum FelabStatus felab_sim_set_single_mode(struct FelabSim *sim,
                                           int64_t k1,
                                           int64_t k2,
                                           double amplitude,
                                           int32_t cosine);

// Advances the main equation by `steps` time steps.
//
// # Safety
// `sim` must be a live handle.
enum FelabStatus felab_sim_step(struct FelabSim *sim, uint64_t steps);

// Current time and step counter.
//
// # Safety
// `sim` must be a live handle; outputs may be null.
enum FelabStatus felab_sim_time(const struct FelabSim *sim, double *t, uint64_t *step);

// Homogeneous Sobolev norm `‖Λ^s ω‖_{L²}`.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum FelabStatus felab_sim_sobolev_norm(const struct FelabSim *sim, double s, double *out);

// `‖ω‖_{L^p}` by grid quadrature, `p >= 1`.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum FelabStatus felab_sim_lp_norm(const struct FelabSim *sim, double p, double *out);

// Grid size `n`; the state has `n*n` complex coefficients.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum FelabStatus felab_sim_grid_size(const struct FelabSim *sim, size_t *out);

// Copies the Fourier coefficients as interleaved `(re, im)` pairs in
// row-major order into `buf`, which must hold `2*n*n` doubles.
//
// # Safety
// `sim` must be a live handle; `buf` must be writable for `len` doubles.
enum FelabStatus felab_sim_coefficients(const struct FelabSim *sim, double *buf, size_t len);

// Writes a binary checkpoint of the current state.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
enum FelabStatus felab_sim_save_checkpoint(const struct FelabSim *sim, const char *path);

// Replaces the state by a checkpoint written with the same grid, `γ` and
// `dt`. Subsequent steps continue the original trajectory exactly.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
enum FelabStatus felab_sim_load_checkpoint(struct FelabSim *sim, const char *path);

// Fractional Poincaré constant in dimension `d`. Pass `p = 0` for the
// exponent-free constant; otherwise `p` must be an even integer `>= 4`.
//
// # Safety
// `out` must be writable.
enum FelabStatus felab_poincare_constant(uint32_t d, double gamma, double p, double *out);

// Evaluates the scalar inequality `f_p(a, b) >= (p-2)(a-b)² a^(p-2)` in
// exact arithmetic. `holds` receives 1 if it holds (within 1e-12 relative),
// else 0. Output pointers may be null.
//
// # Safety
// Non-null output pointers must be writable.
enum FelabStatus felab_check_fp_scalar(double a,
                                       double b,
                                       uint32_t p,
                                       double *lhs,
                                       double *rhs,
                                       int32_t *holds);

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next felab call on the same thread.
const char *felab_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *felab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FELAB_H */
