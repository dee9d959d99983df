use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::poly::{integrated_ar, psi_weights};
use super::{ArimaFit, Exog};
use crate::error::{Error, Result};
use crate::series::difference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBand {
    pub significance: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    /// Point forecasts on the original scale.
    pub point: Vec<f64>,
    /// Point forecasts of the differenced series.
    pub differenced_point: Vec<f64>,
    /// Forecast standard error per step.
    pub se: Vec<f64>,
    pub bands: Vec<IntervalBand>,
}

impl ForecastResult {
    pub fn band(&self, significance: f64) -> Option<&IntervalBand> {
        self.bands.iter().find(|b| (b.significance - significance).abs() < 1e-12)
    }
}

/// Two-sided normal quantile z_{1−α/2}.
fn z_value(significance: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - significance / 2.0)
}

/// Iterate the fitted equation forward with future errors set to zero,
/// integrate back to the original scale, and attach two-sided normal
/// intervals from the ψ-weights of the integrated model.
pub fn forecast(fit: &ArimaFit, horizon: usize, significances: &[f64], future_exog: &Exog) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    if let Some(s) = significances.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
        return Err(Error::InvalidInput(format!("significance {s} outside (0, 1)")));
    }
    if future_exog.len() != fit.exog_names.len() {
        return Err(Error::InvalidInput(format!(
            "model has {} exogenous columns, {} supplied",
            fit.exog_names.len(),
            future_exog.len()
        )));
    }
    for ((name, col), expected) in future_exog.iter().zip(&fit.exog_names) {
        if name != expected {
            return Err(Error::InvalidInput(format!("exogenous column {name} where {expected} was expected")));
        }
        if col.len() != horizon {
            return Err(Error::LengthMismatch(format!(
                "future column {name} has {} rows for horizon {horizon}",
                col.len()
            )));
        }
    }

    let d = fit.spec.d;
    let p = fit.spec.p;
    let mut w = difference(&fit.history, d)?;
    let mut e: Vec<f64> = std::iter::repeat_n(0.0, p).chain(fit.residuals.iter().copied()).collect();
    if e.len() != w.len() {
        return Err(Error::InvalidInput("fit residuals do not match its history".into()));
    }
    let mut differenced_point = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let t = w.len();
        let mut v = fit.intercept;
        for (i, theta) in fit.ar.iter().enumerate() {
            v += theta * w[t - 1 - i];
        }
        for (j, phi) in fit.ma.iter().enumerate() {
            if t > j {
                v += phi * e[t - 1 - j];
            }
        }
        for ((_, col), beta) in future_exog.iter().zip(&fit.exog_coeffs) {
            v += beta * col[h];
        }
        w.push(v);
        e.push(0.0);
        differenced_point.push(v);
    }

    let mut point = differenced_point.clone();
    for k in (0..d).rev() {
        let level = difference(&fit.history, k)?;
        let mut last = *level.last().expect("history is non-empty");
        for v in point.iter_mut() {
            last += *v;
            *v = last;
        }
    }

    let psi = psi_weights(&integrated_ar(&fit.ar, d), &fit.ma, horizon);
    let mut acc = 0.0;
    let se: Vec<f64> = psi
        .iter()
        .map(|w| {
            acc += w * w;
            (fit.sigma2 * acc).sqrt()
        })
        .collect();
    let bands = significances
        .iter()
        .map(|&significance| {
            let z = z_value(significance);
            IntervalBand {
                significance,
                lower: point.iter().zip(&se).map(|(p, s)| p - z * s).collect(),
                upper: point.iter().zip(&se).map(|(p, s)| p + z * s).collect(),
            }
        })
        .collect();
    Ok(ForecastResult {
        horizon,
        point,
        differenced_point,
        se,
        bands,
    })
}

fn pct_label(significance: f64) -> String {
    let pct = significance * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        format!("{pct}")
    }
}

/// `date,point,lower_5,upper_5,lower_1,upper_1`, one band pair per
/// significance in the order stored.
pub fn write_forecast_csv(path: &Path, dates: &[NaiveDate], result: &ForecastResult) -> Result<()> {
    if dates.len() != result.horizon {
        return Err(Error::LengthMismatch(format!(
            "{} dates for a {}-step forecast",
            dates.len(),
            result.horizon
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string(), "point".to_string()];
    for b in &result.bands {
        let l = pct_label(b.significance);
        header.push(format!("lower_{l}"));
        header.push(format!("upper_{l}"));
    }
    w.write_record(&header)?;
    for (h, date) in dates.iter().enumerate() {
        let mut row = vec![date.to_string(), result.point[h].to_string()];
        for b in &result.bands {
            row.push(b.lower[h].to_string());
            row.push(b.upper[h].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    /// Autocorrelations at lags 1..=max_lag.
    pub acf: Vec<f64>,
    /// 1.96 / √n.
    pub band: f64,
    /// Lags whose autocorrelation lies outside ±band.
    pub flagged: Vec<usize>,
}

/// Sample autocorrelations of the fit residuals.
pub fn residual_acf(fit: &ArimaFit, max_lag: usize) -> Result<AcfReport> {
    acf_report(&fit.residuals, max_lag)
}

pub(crate) fn acf_report(x: &[f64], max_lag: usize) -> Result<AcfReport> {
    let n = x.len();
    if n <= max_lag {
        return Err(Error::TooShort { needed: max_lag, got: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let band = 1.96 / (n as f64).sqrt();
    if c0 == 0.0 {
        log::warn!("residuals are constant; autocorrelations set to zero");
        return Ok(AcfReport {
            acf: vec![0.0; max_lag],
            band,
            flagged: Vec::new(),
        });
    }
    let acf: Vec<f64> = (1..=max_lag)
        .map(|k| (k..n).map(|t| (x[t] - mean) * (x[t - k] - mean)).sum::<f64>() / c0)
        .collect();
    let flagged = acf
        .iter()
        .enumerate()
        .filter(|(_, r)| r.abs() > band)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(AcfReport { acf, band, flagged })
}
