#ifndef DIVKIT_H
#define DIVKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  DIVKIT_STATUS_OK = 0,
  DIVKIT_STATUS_SHAPE = 1,
  DIVKIT_STATUS_DOMAIN = 2,
  DIVKIT_STATUS_PARAM = 3,
  DIVKIT_STATUS_NO_CLOSED_FORM = 4,
  DIVKIT_STATUS_NOT_DECOMPOSABLE = 5,
  DIVKIT_STATUS_STALL = 6,
  DIVKIT_STATUS_DECOMPOSITION = 7,
  DIVKIT_STATUS_CONSTRAINT = 8,
  DIVKIT_STATUS_INVARIANT = 9,
  DIVKIT_STATUS_IO = 10,
  DIVKIT_STATUS_NULL_POINTER = 11,
  DIVKIT_STATUS_PANIC = 12,
} DivkitStatus;

/**
 * Opaque divergence handle.
 */
typedef struct DivkitDivergence DivkitDivergence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Release it with
 * [`divkit_string_free`].
 */
char *divkit_last_error(void);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void divkit_string_free(char *s);

/**
 * Build a divergence. `names`/`values` hold `nparams` family parameters;
 * `factor` is null for the plain divergence, or `nominal`, `kstar`,
 * `general:a,b,d,g,mu`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; strings NUL-terminated.
 */
DivkitStatus divkit_divergence_new(const char *family,
                                   const char *const *names,
                                   const double *values,
                                   size_t nparams,
                                   const char *factor,
                                   bool log_form_flag,
                                   DivkitDivergence **out);

/**
 * # Safety
 * `h` must come from [`divkit_divergence_new`], or be null.
 */
void divkit_divergence_free(DivkitDivergence *h);

/**
 * `*out = D(p || q)` for fields of length `n`.
 *
 * # Safety
 * `p`, `q` must hold `n` values.
 */
DivkitStatus divkit_divergence_eval(const DivkitDivergence *h,
                                    const double *p,
                                    const double *q,
                                    size_t n,
                                    double *out);

/**
 * Gradient with respect to `q` into `out[n]`.
 *
 * # Safety
 * `p`, `q`, `out` must hold `n` values.
 */
DivkitStatus divkit_divergence_gradient(const DivkitDivergence *h,
                                        const double *p,
                                        const double *q,
                                        size_t n,
                                        double *out);

/**
 * Factor `y[rows x cols] ~ H X` with the default solver settings.
 * `h_out` receives `rows x rank`, `x_out` `rank x cols`; `objective` may be null.
 *
 * # Safety
 * Arrays must have the stated sizes.
 */
DivkitStatus divkit_nmf(const DivkitDivergence *h,
                        const double *y,
                        size_t rows,
                        size_t cols,
                        size_t rank,
                        size_t max_iters,
                        uint64_t seed,
                        double *h_out,
                        double *x_out,
                        double *objective);

/**
 * Deconvolve `y[rows x cols]`. `psf` holds the PSF (known mode) or the
 * starting PSF (blind) and receives the final PSF; `x_out` the object,
 * started flat. The divergence must be invariant for `variant` 0.
 * `variant`: 0 invariant, 1 change of variables, 2 multiplicative.
 *
 * # Safety
 * Arrays must hold `rows * cols` values; `data_term` may be null.
 */
DivkitStatus divkit_deconv(const DivkitDivergence *h,
                           const double *y,
                           size_t rows,
                           size_t cols,
                           double *psf,
                           bool blind,
                           uint32_t variant,
                           size_t max_iters,
                           double *x_out,
                           double *data_term);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVKIT_H */
