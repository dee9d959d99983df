//! ARIMA and ARIMAX models estimated by conditional sum of squares.
//!
//! With `w = Δ^d y` the model is
//! `w_t = β0 + Σ θ_i w_{t-i} + Σ β_j x_{t,j} + ε_t + Σ φ_j ε_{t-j}`,
//! with exogenous columns entering undifferenced.

mod fit;
mod forecast;
mod optim;
mod poly;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use fit::{fit_arima, grid_search, FitOptions, GridSearch};
pub use forecast::{forecast, residual_acf, write_forecast_csv, AcfReport, ForecastResult, IntervalBand};

use crate::error::{Error, Result};

/// Largest AR or MA order accepted.
pub const MAX_ORDER: usize = 30;

/// Named regressor columns aligned with the response.
pub type Exog = [(String, Vec<f64>)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if p > MAX_ORDER || q > MAX_ORDER || d > 2 {
            return Err(Error::InvalidInput(format!(
                "order ({p},{d},{q}) exceeds limits (p, q ≤ {MAX_ORDER}, d ≤ 2)"
            )));
        }
        Ok(ArimaSpec { p, d, q })
    }
}

impl fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub exog_names: Vec<String>,
    pub exog_coeffs: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Residuals over the effective sample.
    pub residuals: Vec<f64>,
    pub n_effective: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Whether MA roots had to be reflected into the invertible region.
    pub reflected: bool,
    /// Response on its original scale, kept for forecasting.
    pub history: Vec<f64>,
}

impl ArimaFit {
    /// Estimated parameter count: intercept, AR, MA, exogenous and sigma².
    pub fn n_params(&self) -> usize {
        1 + self.spec.p + self.spec.q + self.exog_names.len() + 1
    }

    pub fn has_exog(&self) -> bool {
        !self.exog_names.is_empty()
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            spec: self.spec,
            intercept: self.intercept,
            ar: self.ar.clone(),
            ma: self.ma.clone(),
            exog: self.exog_names.iter().cloned().zip(self.exog_coeffs.iter().copied()).collect(),
            sigma2: self.sigma2,
            loglik: self.loglik,
            aic: self.aic,
            bic: self.bic,
            n_effective: self.n_effective,
            converged: self.converged,
            iterations: self.iterations,
        }
    }
}

/// Compact summary written next to each fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: ArimaSpec,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub exog: Vec<(String, f64)>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_effective: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// `(aic, bic)` = `(2k − 2 loglik, ln(n) k − 2 loglik)`.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> (f64, f64) {
    let k = k as f64;
    (2.0 * k - 2.0 * loglik, (n as f64).ln() * k - 2.0 * loglik)
}
