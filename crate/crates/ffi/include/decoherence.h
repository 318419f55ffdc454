#ifndef DECOHERENCE_H
#define DECOHERENCE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcmStatus {
  DCM_STATUS_OK = 0,
  DCM_STATUS_NULL_POINTER = 1,
  DCM_STATUS_DOMAIN = 2,
  DCM_STATUS_VALIDATION = 3,
  DCM_STATUS_INVALID_OUTPUT = 4,
  DCM_STATUS_NUMERIC = 5,
  DCM_STATUS_UNSUPPORTED = 6,
  DCM_STATUS_FORMAT = 7,
  DCM_STATUS_PANIC = 8,
} DcmStatus;

typedef enum DcmMode {
  DCM_MODE_A = 0,
  DCM_MODE_B = 1,
} DcmMode;

typedef enum DcmFieldVariant {
  DCM_FIELD_VARIANT_BOTH_PATHS_INDEPENDENT = 0,
  DCM_FIELD_VARIANT_SINGLE_FIELD_ONE_PATH = 1,
  DCM_FIELD_VARIANT_SINGLE_FIELD_BOTH_PATHS = 2,
} DcmFieldVariant;

/**
 * Opaque handle to a validated density matrix.
 */
typedef struct DcmDensityMatrix DcmDensityMatrix;

/**
 * Opaque handle to a Kraus operator set.
 */
typedef struct DcmKrausSet DcmKrausSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dcm_last_error_message(void);

/**
 * Validate 16 real and 16 imaginary row-major entries into a new state.
 *
 * # Safety
 * `re` and `im` point to 16 readable doubles; `out` is writable.
 */
enum DcmStatus dcm_density_new(const double *re, const double *im, struct DcmDensityMatrix **out);

/**
 * The singlet (e₂ − e₃)/√2.
 *
 * # Safety
 * `out` is writable.
 */
enum DcmStatus dcm_density_singlet(struct DcmDensityMatrix **out);

/**
 * Bell state `index` in 1..=4.
 *
 * # Safety
 * `out` is writable.
 */
enum DcmStatus dcm_density_bell(size_t index, struct DcmDensityMatrix **out);

/**
 * # Safety
 * `out` is writable.
 */
enum DcmStatus dcm_density_maximally_mixed(struct DcmDensityMatrix **out);

/**
 * Copy the entries into 16 + 16 row-major doubles.
 *
 * # Safety
 * `rho` is a live handle; `re` and `im` point to 16 writable doubles.
 */
enum DcmStatus dcm_density_components(const struct DcmDensityMatrix *rho, double *re, double *im);

/**
 * # Safety
 * `rho` is NULL or a handle not yet freed.
 */
void dcm_density_free(struct DcmDensityMatrix *rho);

/**
 * Parse the `{"dim","re","im"}` document.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum DcmStatus dcm_density_from_json(const char *json, struct DcmDensityMatrix **out);

/**
 * Serialise to a new string released with [`dcm_string_free`].
 *
 * # Safety
 * `rho` is a live handle; `out` is writable.
 */
enum DcmStatus dcm_density_to_json(const struct DcmDensityMatrix *rho, char **out);

/**
 * # Safety
 * `s` is NULL or a string returned by this library and not yet freed.
 */
void dcm_string_free(char *s);

/**
 * Tr ρ²
 *
 * # Safety
 * `rho` is a live handle; `out` is writable.
 */
enum DcmStatus dcm_mixedness(const struct DcmDensityMatrix *rho, double *out);

/**
 * Wootters concurrence.
 *
 * # Safety
 * `rho` is a live handle; `out` is writable.
 */
enum DcmStatus dcm_concurrence(const struct DcmDensityMatrix *rho, double *out);

/**
 * Closed-form evolution. `energies` is NULL for degenerate levels or points
 * to E₁..E₄.
 *
 * # Safety
 * `rho` is a live handle; `energies` is NULL or 4 readable doubles; `out` is writable.
 */
enum DcmStatus dcm_evolve(const struct DcmDensityMatrix *rho,
                          enum DcmMode mode,
                          double lambda,
                          const double *energies,
                          double time,
                          struct DcmDensityMatrix **out);

/**
 * RK4 integration of the master equation with step `dt`.
 *
 * # Safety
 * As [`dcm_evolve`].
 */
enum DcmStatus dcm_integrate(const struct DcmDensityMatrix *rho,
                             enum DcmMode mode,
                             double lambda,
                             const double *energies,
                             double time,
                             double dt,
                             struct DcmDensityMatrix **out);

/**
 * The mode's Kraus set at weight `w` in [0, 4/3].
 *
 * # Safety
 * `out` is writable.
 */
enum DcmStatus dcm_kraus_set_new(enum DcmMode mode, double w, struct DcmKrausSet **out);

/**
 * # Safety
 * `k` is NULL or a handle not yet freed.
 */
void dcm_kraus_set_free(struct DcmKrausSet *k);

/**
 * ρ ↦ Σ Mₖ ρ Mₖ†
 *
 * # Safety
 * `rho` and `k` are live handles; `out` is writable.
 */
enum DcmStatus dcm_kraus_apply(const struct DcmDensityMatrix *rho,
                               const struct DcmKrausSet *k,
                               struct DcmDensityMatrix **out);

/**
 * `steps` channel applications with w = λt/steps.
 *
 * # Safety
 * `rho` is a live handle; `out` is writable.
 */
enum DcmStatus dcm_trotter_evolve(const struct DcmDensityMatrix *rho,
                                  enum DcmMode mode,
                                  double lambda,
                                  double time,
                                  size_t steps,
                                  struct DcmDensityMatrix **out);

/**
 * Closed-form Gaussian ensemble average.
 *
 * # Safety
 * `rho` is a live handle; `out` is writable.
 */
enum DcmStatus dcm_ensemble_analytic(const struct DcmDensityMatrix *rho,
                                     enum DcmMode mode,
                                     enum DcmFieldVariant variant,
                                     double sigma,
                                     struct DcmDensityMatrix **out);

/**
 * Monte Carlo ensemble average. When `max_deviation` is not NULL it
 * receives the largest deviation from the closed form in standard errors.
 *
 * # Safety
 * `rho` is a live handle; `out` is writable; `max_deviation` is NULL or writable.
 */
enum DcmStatus dcm_ensemble_monte_carlo(const struct DcmDensityMatrix *rho,
                                        enum DcmMode mode,
                                        enum DcmFieldVariant variant,
                                        double sigma,
                                        uint64_t samples,
                                        uint64_t seed,
                                        struct DcmDensityMatrix **out,
                                        double *max_deviation);

/**
 * λ whose evolution over `dwell_time` matches the field ensemble.
 *
 * # Safety
 * `out` is writable.
 */
enum DcmStatus dcm_lambda_from_sigma(enum DcmMode mode,
                                     enum DcmFieldVariant variant,
                                     double sigma,
                                     double dwell_time,
                                     double *out);

/**
 * Linear-inversion tomography from 9 × 4 counts. Settings are ordered
 * XX, XY, XZ, YX, …, ZZ (spin observable first) and outcomes (+,+), (+,−),
 * (−,+), (−,−). `residual` is NULL or receives the Frobenius distance moved
 * by the PSD projection.
 *
 * # Safety
 * `counts` points to 36 readable integers; `out` is writable; `residual` is NULL or writable.
 */
enum DcmStatus dcm_tomography_reconstruct(const uint64_t *counts,
                                          struct DcmDensityMatrix **out,
                                          double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOHERENCE_H */
