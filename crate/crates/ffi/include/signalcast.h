/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#ifndef SIGNALCAST_H
#define SIGNALCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  SC_STATUS_INVALID_INPUT = 2,
  // The computation itself failed: singular design, zero variance,
  // non-stationary series or no converging fit.
  SC_STATUS_NUMERIC = 3,
  // A caller buffer is smaller than required.
  SC_STATUS_BUFFER_TOO_SMALL = 4,
  SC_STATUS_PANIC = 5,
} ScStatus;

// Fitted ARIMA or ARIMAX model.
typedef struct ScArima ScArima;

// Fitted VAR model.
typedef struct ScVar ScVar;

typedef struct ScMetrics {
  double rmse;
  // Percent; NaN when an actual value is zero.
  double mape;
  double r2;
  // Squared correlation; NaN when either side is constant.
  double r2_corr;
  size_t n;
} ScMetrics;

typedef struct ScAdfResult {
  double statistic;
  double p_value;
  size_t chosen_lag;
  size_t n_obs;
  bool reject_h0;
  // 1%, 5% and 10% critical values.
  double critical_values[3];
} ScAdfResult;

typedef struct ScArimaInfo {
  size_t p;
  size_t d;
  size_t q;
  size_t n_exog;
  double intercept;
  double sigma2;
  double loglik;
  double aic;
  double bic;
  size_t n_effective;
  bool converged;
} ScArimaInfo;

typedef struct ScVarInfo {
  size_t p;
  size_t n_vars;
  size_t n_obs;
  double loglik;
  double aic;
} ScVarInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a
// NUL-terminated string, truncating if needed. Returns the full message
// length in bytes, excluding the terminator; 0 means no error.
size_t sc_last_error_message(char *buf, size_t len);

// Point-forecast accuracy of `predicted` against `actual`, both of length `n`.
enum ScStatus sc_metrics(const double *actual,
                         const double *predicted,
                         size_t n,
                         struct ScMetrics *out);

// Conventional ADF lag cap 12·(n/100)^¼.
size_t sc_adf_default_max_lag(size_t n);

// Augmented Dickey–Fuller test with a constant; the lag is chosen by AIC
// over `0..=max_lag`.
enum ScStatus sc_adf_test(const double *series,
                          size_t n,
                          size_t max_lag,
                          double alpha,
                          struct ScAdfResult *out);

// Granger F-tests of x → y for lags 1..=max_lag. `f_stats` and `p_values`
// receive `max_lag` values each (index 0 is lag 1); either may be null.
enum ScStatus sc_granger_test(const double *x,
                              const double *y,
                              size_t n,
                              size_t max_lag,
                              double alpha,
                              double *f_stats,
                              double *p_values,
                              size_t *significant_count);

// Fit ARIMA(p,d,q) by conditional sum of squares. `exog` holds `k`
// columns of length `n` (column-major) or is null when `k` is 0. On
// success `*out` owns a handle to release with [`sc_arima_free`].
enum ScStatus sc_arima_fit(const double *y,
                           size_t n,
                           size_t p,
                           size_t d,
                           size_t q,
                           const double *exog,
                           size_t k,
                           uint64_t seed,
                           struct ScArima **out);

enum ScStatus sc_arima_info(const struct ScArima *model, struct ScArimaInfo *out);

// Copies the p AR coefficients into `buf` (capacity `len`).
enum ScStatus sc_arima_ar(const struct ScArima *model, double *buf, size_t len);

// Copies the q MA coefficients into `buf` (capacity `len`).
enum ScStatus sc_arima_ma(const struct ScArima *model, double *buf, size_t len);

// Copies the exogenous coefficients into `buf` (capacity `len`).
enum ScStatus sc_arima_exog(const struct ScArima *model, double *buf, size_t len);

// `horizon`-step forecast on the original scale with a two-sided interval
// at `significance` (0.05 gives 95%). `future_exog` holds the model's
// exogenous columns over the horizon, column-major. Each output buffer
// receives `horizon` values; `lower`, `upper` and `se` may be null.
enum ScStatus sc_arima_forecast(const struct ScArima *model,
                                size_t horizon,
                                double significance,
                                const double *future_exog,
                                size_t k,
                                double *point,
                                double *lower,
                                double *upper,
                                double *se);

void sc_arima_free(struct ScArima *model);

// Fit VAR(p) to `n_obs` rows of `n_vars` variables (row-major). On
// success `*out` owns a handle to release with [`sc_var_free`].
enum ScStatus sc_var_fit(const double *data,
                         size_t n_obs,
                         size_t n_vars,
                         size_t p,
                         struct ScVar **out);

// Pick the order in `0..=p_max` with the lowest AIC on a common sample
// and return the refitted model in `*out`.
enum ScStatus sc_var_select(const double *data,
                            size_t n_obs,
                            size_t n_vars,
                            size_t p_max,
                            struct ScVar **out);

enum ScStatus sc_var_info(const struct ScVar *model, struct ScVarInfo *out);

// Forecast `horizon` steps past the end of the estimation data into
// `out` (`horizon × n_vars`, row-major).
enum ScStatus sc_var_forecast(const struct ScVar *model, size_t horizon, double *out);

void sc_var_free(struct ScVar *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGNALCAST_H */
