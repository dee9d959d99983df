use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::linalg::ols;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagTest {
    pub lag: usize,
    pub f_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    /// One entry per lag, in order 1..=max_lag.
    pub per_lag: Vec<LagTest>,
    pub significant_count: usize,
    pub alpha: f64,
}

impl GrangerResult {
    pub fn p_values(&self) -> Vec<f64> {
        self.per_lag.iter().map(|t| t.p_value).collect()
    }
}

/// Relative SSR below which the unrestricted model counts as a perfect fit.
const PERFECT_FIT: f64 = 1e-20;

/// SSR F-test of whether lags of `x` help predict `y`. Each lag order uses
/// the rows available to it (the first `lag` observations are dropped).
pub fn granger_test(x: &[f64], y: &[f64], max_lag: usize, alpha: f64) -> Result<GrangerResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    if max_lag == 0 {
        return Err(Error::InvalidInput("max_lag must be at least 1".into()));
    }
    let n = y.len();
    if n < 3 * max_lag + 2 {
        return Err(Error::TooShort {
            needed: 3 * max_lag + 2,
            got: n,
        });
    }

    let mut per_lag = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let rows = n - lag;
        let target = DVector::from_fn(rows, |r, _| y[lag + r]);
        let design = |with_x: bool| {
            let k = 1 + lag * if with_x { 2 } else { 1 };
            DMatrix::from_fn(rows, k, |r, c| {
                let t = lag + r;
                match c {
                    0 => 1.0,
                    c if c <= lag => y[t - c],
                    c => x[t - (c - lag)],
                }
            })
        };
        let named = |e: Error| match e {
            Error::Singular(msg) => Error::Singular(format!("lag {lag}: {msg}")),
            other => other,
        };
        let restricted = ols(&design(false), &target).map_err(named)?;
        let unrestricted = ols(&design(true), &target).map_err(named)?;

        let df_num = lag as f64;
        let df_den = (rows - 2 * lag - 1) as f64;
        let scale = target.dot(&target).max(f64::MIN_POSITIVE);
        let (f_stat, p_value) = if unrestricted.ssr <= PERFECT_FIT * scale {
            if restricted.ssr <= PERFECT_FIT * scale {
                (0.0, 1.0)
            } else {
                (f64::INFINITY, 0.0)
            }
        } else {
            let gain = (restricted.ssr - unrestricted.ssr).max(0.0);
            let f = (gain / df_num) / (unrestricted.ssr / df_den);
            let dist = FisherSnedecor::new(df_num, df_den).expect("positive degrees of freedom");
            (f, dist.sf(f))
        };
        per_lag.push(LagTest { lag, f_stat, p_value });
    }
    let significant_count = per_lag.iter().filter(|t| t.p_value < alpha).count();
    Ok(GrangerResult {
        per_lag,
        significant_count,
        alpha,
    })
}
