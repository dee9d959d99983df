//! C ABI over the numeric core of `signalcast`.
//!
//! Every function returns an [`ScStatus`]. On failure a description is kept
//! per thread and can be copied out with [`sc_last_error_message`]. Fitted
//! models are opaque handles released with their `*_free` function.
//!
//! Matrices cross the boundary as flat `double` buffers. Exogenous
//! regressors are column-major (one contiguous column per regressor); VAR
//! data and forecasts are row-major (one contiguous row per time step).
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the stated number of
//! elements. Handles must come from the matching `*_fit` call and must not
//! be used after they are freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use signalcast::arima::{self, ArimaFit, ArimaSpec, FitOptions};
use signalcast::{eval, stattests, var, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The computation itself failed: singular design, zero variance,
    /// non-stationary series or no converging fit.
    Numeric = 3,
    /// A caller buffer is smaller than required.
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScMetrics {
    pub rmse: f64,
    /// Percent; NaN when an actual value is zero.
    pub mape: f64,
    pub r2: f64,
    /// Squared correlation; NaN when either side is constant.
    pub r2_corr: f64,
    pub n: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScAdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub chosen_lag: usize,
    pub n_obs: usize,
    pub reject_h0: bool,
    /// 1%, 5% and 10% critical values.
    pub critical_values: [f64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScArimaInfo {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub n_exog: usize,
    pub intercept: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_effective: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScVarInfo {
    pub p: usize,
    pub n_vars: usize,
    pub n_obs: usize,
    pub loglik: f64,
    pub aic: f64,
}

/// Fitted ARIMA or ARIMAX model.
pub struct ScArima(ArimaFit);

/// Fitted VAR model.
pub struct ScVar(var::VarFit);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: ScStatus, msg: impl Into<String>) -> ScStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> ScStatus {
    let status = if e.exit_code() == 2 {
        ScStatus::Numeric
    } else {
        ScStatus::InvalidInput
    };
    fail(status, e.to_string())
}

/// Run `f`, turning panics into [`ScStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), ScStatus>) -> ScStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(ScStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], ScStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ScStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], ScStatus> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(ScStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, ScStatus> {
    p.as_mut().ok_or_else(|| fail(ScStatus::NullPointer, format!("{what} is null")))
}

unsafe fn columns(p: *const f64, rows: usize, k: usize, what: &str) -> Result<Vec<(String, Vec<f64>)>, ScStatus> {
    let flat = slice(p, rows * k, what)?;
    Ok((0..k)
        .map(|j| (format!("x{j}"), flat[j * rows..(j + 1) * rows].to_vec()))
        .collect())
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator; 0 means no error.
#[no_mangle]
pub unsafe extern "C" fn sc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Point-forecast accuracy of `predicted` against `actual`, both of length `n`.
#[no_mangle]
pub unsafe extern "C" fn sc_metrics(actual: *const f64, predicted: *const f64, n: usize, out: *mut ScMetrics) -> ScStatus {
    guard(|| {
        let a = slice(actual, n, "actual")?;
        let p = slice(predicted, n, "predicted")?;
        let out = out_ref(out, "out")?;
        let m = eval::metrics(a, p).map_err(from_error)?;
        *out = ScMetrics {
            rmse: m.rmse,
            mape: m.mape.unwrap_or(f64::NAN),
            r2: m.r2,
            r2_corr: m.r2_corr.unwrap_or(f64::NAN),
            n: m.n,
        };
        Ok(())
    })
}

/// Conventional ADF lag cap 12·(n/100)^¼.
#[no_mangle]
pub extern "C" fn sc_adf_default_max_lag(n: usize) -> usize {
    stattests::default_max_lag(n)
}

/// Augmented Dickey–Fuller test with a constant; the lag is chosen by AIC
/// over `0..=max_lag`.
#[no_mangle]
pub unsafe extern "C" fn sc_adf_test(series: *const f64, n: usize, max_lag: usize, alpha: f64, out: *mut ScAdfResult) -> ScStatus {
    guard(|| {
        let s = slice(series, n, "series")?;
        let out = out_ref(out, "out")?;
        let r = stattests::adf_test(s, max_lag, alpha).map_err(from_error)?;
        *out = ScAdfResult {
            statistic: r.statistic,
            p_value: r.p_value,
            chosen_lag: r.chosen_lag,
            n_obs: r.n_obs,
            reject_h0: r.reject_h0,
            critical_values: r.critical_values,
        };
        Ok(())
    })
}

/// Granger F-tests of x → y for lags 1..=max_lag. `f_stats` and `p_values`
/// receive `max_lag` values each (index 0 is lag 1); either may be null.
#[no_mangle]
pub unsafe extern "C" fn sc_granger_test(
    x: *const f64,
    y: *const f64,
    n: usize,
    max_lag: usize,
    alpha: f64,
    f_stats: *mut f64,
    p_values: *mut f64,
    significant_count: *mut usize,
) -> ScStatus {
    guard(|| {
        let xs = slice(x, n, "x")?;
        let ys = slice(y, n, "y")?;
        let r = stattests::granger_test(xs, ys, max_lag, alpha).map_err(from_error)?;
        if !f_stats.is_null() {
            for (dst, t) in slice_mut(f_stats, max_lag, "f_stats")?.iter_mut().zip(&r.per_lag) {
                *dst = t.f_stat;
            }
        }
        if !p_values.is_null() {
            for (dst, t) in slice_mut(p_values, max_lag, "p_values")?.iter_mut().zip(&r.per_lag) {
                *dst = t.p_value;
            }
        }
        if let Some(c) = significant_count.as_mut() {
            *c = r.significant_count;
        }
        Ok(())
    })
}

/// Fit ARIMA(p,d,q) by conditional sum of squares. `exog` holds `k`
/// columns of length `n` (column-major) or is null when `k` is 0. On
/// success `*out` owns a handle to release with [`sc_arima_free`].
#[no_mangle]
pub unsafe extern "C" fn sc_arima_fit(
    y: *const f64,
    n: usize,
    p: usize,
    d: usize,
    q: usize,
    exog: *const f64,
    k: usize,
    seed: u64,
    out: *mut *mut ScArima,
) -> ScStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let ys = slice(y, n, "y")?;
        let cols = columns(exog, n, k, "exog")?;
        let spec = ArimaSpec::new(p, d, q).map_err(from_error)?;
        let opts = FitOptions {
            seed,
            ..FitOptions::default()
        };
        let fit = arima::fit_arima(ys, spec, &cols, &opts).map_err(from_error)?;
        *out = Box::into_raw(Box::new(ScArima(fit)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sc_arima_info(model: *const ScArima, out: *mut ScArimaInfo) -> ScStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(ScStatus::NullPointer, "model is null"))?.0;
        *out_ref(out, "out")? = ScArimaInfo {
            p: m.spec.p,
            d: m.spec.d,
            q: m.spec.q,
            n_exog: m.exog_names.len(),
            intercept: m.intercept,
            sigma2: m.sigma2,
            loglik: m.loglik,
            aic: m.aic,
            bic: m.bic,
            n_effective: m.n_effective,
            converged: m.converged,
        };
        Ok(())
    })
}

unsafe fn copy_coeffs(model: *const ScArima, pick: fn(&ArimaFit) -> &[f64], buf: *mut f64, len: usize) -> ScStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(ScStatus::NullPointer, "model is null"))?.0;
        let src = pick(m);
        if len < src.len() {
            return Err(fail(
                ScStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", src.len()),
            ));
        }
        slice_mut(buf, src.len(), "buf")?.copy_from_slice(src);
        Ok(())
    })
}

/// Copies the p AR coefficients into `buf` (capacity `len`).
#[no_mangle]
pub unsafe extern "C" fn sc_arima_ar(model: *const ScArima, buf: *mut f64, len: usize) -> ScStatus {
    copy_coeffs(model, |m| &m.ar, buf, len)
}

/// Copies the q MA coefficients into `buf` (capacity `len`).
#[no_mangle]
pub unsafe extern "C" fn sc_arima_ma(model: *const ScArima, buf: *mut f64, len: usize) -> ScStatus {
    copy_coeffs(model, |m| &m.ma, buf, len)
}

/// Copies the exogenous coefficients into `buf` (capacity `len`).
#[no_mangle]
pub unsafe extern "C" fn sc_arima_exog(model: *const ScArima, buf: *mut f64, len: usize) -> ScStatus {
    copy_coeffs(model, |m| &m.exog_coeffs, buf, len)
}

/// `horizon`-step forecast on the original scale with a two-sided interval
/// at `significance` (0.05 gives 95%). `future_exog` holds the model's
/// exogenous columns over the horizon, column-major. Each output buffer
/// receives `horizon` values; `lower`, `upper` and `se` may be null.
#[no_mangle]
pub unsafe extern "C" fn sc_arima_forecast(
    model: *const ScArima,
    horizon: usize,
    significance: f64,
    future_exog: *const f64,
    k: usize,
    point: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    se: *mut f64,
) -> ScStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(ScStatus::NullPointer, "model is null"))?.0;
        let mut cols = columns(future_exog, horizon, k, "future_exog")?;
        for ((name, _), real) in cols.iter_mut().zip(&m.exog_names) {
            *name = real.clone();
        }
        let f = arima::forecast(m, horizon, &[significance], &cols).map_err(from_error)?;
        slice_mut(point, horizon, "point")?.copy_from_slice(&f.point);
        let band = &f.bands[0];
        for (dst, src) in [(lower, &band.lower), (upper, &band.upper), (se, &f.se)] {
            if !dst.is_null() {
                slice_mut(dst, horizon, "output")?.copy_from_slice(src);
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sc_arima_free(model: *mut ScArima) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn var_data(data: *const f64, n_obs: usize, n_vars: usize) -> Result<(DMatrix<f64>, Vec<String>), ScStatus> {
    let flat = slice(data, n_obs * n_vars, "data")?;
    let names = (0..n_vars).map(|j| format!("v{j}")).collect();
    Ok((DMatrix::from_row_slice(n_obs, n_vars, flat), names))
}

/// Fit VAR(p) to `n_obs` rows of `n_vars` variables (row-major). On
/// success `*out` owns a handle to release with [`sc_var_free`].
#[no_mangle]
pub unsafe extern "C" fn sc_var_fit(data: *const f64, n_obs: usize, n_vars: usize, p: usize, out: *mut *mut ScVar) -> ScStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let (y, names) = var_data(data, n_obs, n_vars)?;
        let fit = var::fit_var(&y, p, &names).map_err(from_error)?;
        *out = Box::into_raw(Box::new(ScVar(fit)));
        Ok(())
    })
}

/// Pick the order in `0..=p_max` with the lowest AIC on a common sample
/// and return the refitted model in `*out`.
#[no_mangle]
pub unsafe extern "C" fn sc_var_select(data: *const f64, n_obs: usize, n_vars: usize, p_max: usize, out: *mut *mut ScVar) -> ScStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let (y, names) = var_data(data, n_obs, n_vars)?;
        let sel = var::select_var_order(&y, p_max, &names).map_err(from_error)?;
        *out = Box::into_raw(Box::new(ScVar(sel.best)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sc_var_info(model: *const ScVar, out: *mut ScVarInfo) -> ScStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(ScStatus::NullPointer, "model is null"))?.0;
        *out_ref(out, "out")? = ScVarInfo {
            p: m.p,
            n_vars: m.n_vars(),
            n_obs: m.n_obs,
            loglik: m.loglik,
            aic: m.aic,
        };
        Ok(())
    })
}

/// Forecast `horizon` steps past the end of the estimation data into
/// `out` (`horizon × n_vars`, row-major).
#[no_mangle]
pub unsafe extern "C" fn sc_var_forecast(model: *const ScVar, horizon: usize, out: *mut f64) -> ScStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(ScStatus::NullPointer, "model is null"))?.0;
        let f = var::forecast_var(m, &m.last_obs, horizon).map_err(from_error)?;
        let dst = slice_mut(out, horizon * m.n_vars(), "out")?;
        for h in 0..horizon {
            for j in 0..m.n_vars() {
                dst[h * m.n_vars() + j] = f[(h, j)];
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sc_var_free(model: *mut ScVar) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
