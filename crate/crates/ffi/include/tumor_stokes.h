/* C ABI for the tumor-stokes stability toolkit.
 *
 * Conventions:
 *  - constructors hand back opaque handles through out-pointers and return
 *    a tgs_status code; free handles with the matching tgs_*_free (NULL ok);
 *  - on failure, tgs_last_error_message() returns a thread-local message
 *    valid until the next failing call on the same thread;
 *  - no call unwinds: internal panics surface as TGS_ERR_PANIC.
 */

#ifndef TUMOR_STOKES_H
#define TUMOR_STOKES_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every int32_t-valued function. */
enum tgs_status {
  TGS_OK = 0,
  TGS_ERR_NULL_ARGUMENT = 1,
  TGS_ERR_PARSE = 2,
  TGS_ERR_VALIDATION = 3,
  TGS_ERR_NUMERICAL = 4,
  TGS_ERR_BAD_ARGUMENT = 5,
  TGS_ERR_PANIC = 6
};

/* Opaque handles. */
typedef struct TgsModel TgsModel;
typedef struct TgsStationary TgsStationary;
typedef struct TgsSpectrum TgsSpectrum;

/* Thread-local message for the most recent failure; never NULL. */
const char *tgs_last_error_message(void);

/* Library version as a static string. */
const char *tgs_version(void);

/* Parse and validate a model from JSON:
 * {"lambda":..,"mu":..,"sigma_c":..,"sigma_bar":..,"nu":..,"gamma":..}
 * (all six fields required). */
int32_t tgs_model_new_json(const char *json, TgsModel **out);
void tgs_model_free(TgsModel *model);

/* Surface tension after normalization (gamma / nu); NaN on NULL. */
double tgs_model_gamma_effective(const TgsModel *model);

/* Solve the radially symmetric stationary state. Pass
 * bracket_lo = bracket_hi = 0 for the default radius search bracket.
 * The returned handle holds the state rescaled to the unit ball. */
int32_t tgs_stationary_solve(const TgsModel *model, double bracket_lo,
                             double bracket_hi, TgsStationary **out);
void tgs_stationary_free(TgsStationary *st);

/* Stationary radius in the configured units; NaN on NULL. */
double tgs_stationary_radius(const TgsStationary *st);

/* Sample the unit-ball profiles at radius r in [0, 1]. Out-pointers may be
 * NULL to skip a profile. */
int32_t tgs_stationary_sample(const TgsStationary *st, double r,
                              double *out_sigma, double *out_v, double *out_p);

/* Compute the multiplier spectrum up to at least l_max (0 = default 64);
 * certificate-driven doubling may extend the truncation. */
int32_t tgs_spectrum_compute(const TgsStationary *st, uint32_t l_max,
                             TgsSpectrum **out);
void tgs_spectrum_free(TgsSpectrum *sp);

/* Threshold data. Scalar getters return NaN (or 0 for degrees) on NULL. */
double tgs_spectrum_gamma_star(const TgsSpectrum *sp);
uint32_t tgs_spectrum_l_star(const TgsSpectrum *sp);
double tgs_spectrum_alpha0(const TgsSpectrum *sp);
double tgs_spectrum_gamma_tilde_star(const TgsSpectrum *sp);
uint32_t tgs_spectrum_l_max(const TgsSpectrum *sp);

/* Per-degree thresholds for l >= 2 up to the covered truncation. */
int32_t tgs_spectrum_gamma_l(const TgsSpectrum *sp, uint32_t l, double *out);
int32_t tgs_spectrum_gamma_tilde_l(const TgsSpectrum *sp, uint32_t l,
                                   double *out);

/* Multiplier eigenvalue alpha_l(gamma); l = 0 and l = 1 always available. */
int32_t tgs_spectrum_alpha(const TgsSpectrum *sp, uint32_t l, double gamma,
                           double *out);

/* Advance a flat real spherical-harmonic coefficient array in place by dt
 * under the diagonal multiplier flow. Layout: index l*l + l + m for
 * 0 <= l <= l_max_state, |m| <= l; len must equal (l_max_state + 1)^2. */
int32_t tgs_evolve_coeffs(const TgsSpectrum *sp, double gamma, double *coeffs,
                          size_t len, uint32_t l_max_state, double dt);

/* Convert a raw surface tension to the unit-ball value used by
 * tgs_spectrum_alpha: gamma_raw * R_s / nu. NaN on NULL handles. */
double tgs_gamma_to_unit_ball(const TgsModel *model, const TgsStationary *st,
                              double gamma_raw);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TUMOR_STOKES_H */
