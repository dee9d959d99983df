//! Forecast accuracy metrics and a train/test backtest.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::arima::{fit_arima, forecast, ArimaFit, ArimaSpec, Exog, FitOptions, ForecastResult, IntervalBand};
use crate::error::{Error, Result};
use crate::series::CaseSeries;
use crate::var::{fit_var, forecast_var, forecast_var_se, VarFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    /// Mean absolute percentage error in percent; absent when an actual
    /// value is zero.
    pub mape: Option<f64>,
    pub mape_note: Option<String>,
    /// `1 − SSE / SST` around the mean of the actuals.
    pub r2: f64,
    /// Squared Pearson correlation between actuals and predictions;
    /// absent when either side is constant.
    pub r2_corr: Option<f64>,
    pub n: usize,
}

pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(format!(
            "{} actual values, {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("no observations to score".into()));
    }
    let n = actual.len();
    let nf = n as f64;
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    let rmse = (sse / nf).sqrt();

    let (mape, mape_note) = match actual.iter().position(|a| *a == 0.0) {
        Some(i) => (None, Some(format!("actual value at position {i} is zero"))),
        None => {
            let m = actual.iter().zip(predicted).map(|(a, p)| ((a - p) / a).abs()).sum::<f64>() / nf * 100.0;
            (Some(m), None)
        }
    };

    let mean_a = actual.iter().sum::<f64>() / nf;
    let sst: f64 = actual.iter().map(|a| (a - mean_a).powi(2)).sum();
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };

    let mean_p = predicted.iter().sum::<f64>() / nf;
    let spp: f64 = predicted.iter().map(|p| (p - mean_p).powi(2)).sum();
    let sap: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - mean_a) * (p - mean_p)).sum();
    let r2_corr = (sst > 0.0 && spp > 0.0).then(|| sap * sap / (sst * spp));

    Ok(MetricsReport {
        rmse,
        mape,
        mape_note,
        r2,
        r2_corr,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BacktestModel {
    Arima(ArimaSpec),
    /// VAR(p) on the response and the exogenous columns, in levels.
    Var { p: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMetrics {
    pub significance: f64,
    /// Scored against the upper bound of the interval.
    pub upper: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtest {
    pub train_len: usize,
    pub test_dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub forecast: ForecastResult,
    pub arima: Option<ArimaFit>,
    pub var: Option<VarFit>,
    pub point_metrics: MetricsReport,
    pub band_metrics: Vec<BandMetrics>,
}

/// Fit on observations dated up to and including `split`, forecast the
/// remaining dates, and score the point forecast and each interval's upper
/// bound. Test-period responses are only used for scoring.
pub fn backtest(
    y: &CaseSeries,
    exog: &Exog,
    split: NaiveDate,
    model: &BacktestModel,
    significances: &[f64],
    opts: &FitOptions,
) -> Result<Backtest> {
    if split < y.start || split >= y.end() {
        return Err(Error::DateMismatch(format!(
            "split {split} must fall within [{}, {})",
            y.start,
            y.end()
        )));
    }
    for (name, col) in exog {
        if col.len() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "exogenous column {name} has {} rows, response has {}",
                col.len(),
                y.len()
            )));
        }
    }
    let train_len = (split - y.start).num_days() as usize + 1;
    let horizon = y.len() - train_len;
    let train_y = &y.values[..train_len];
    let actual = y.values[train_len..].to_vec();
    let test_dates = y.dates()[train_len..].to_vec();
    let train_x: Vec<(String, Vec<f64>)> = exog.iter().map(|(n, c)| (n.clone(), c[..train_len].to_vec())).collect();
    let test_x: Vec<(String, Vec<f64>)> = exog.iter().map(|(n, c)| (n.clone(), c[train_len..].to_vec())).collect();

    let (forecast_result, arima, var) = match model {
        BacktestModel::Arima(spec) => {
            let fit = fit_arima(train_y, *spec, &train_x, opts)?;
            let f = forecast(&fit, horizon, significances, &test_x)?;
            (f, Some(fit), None)
        }
        BacktestModel::Var { p } => {
            let names: Vec<String> = std::iter::once("y".to_string())
                .chain(train_x.iter().map(|(n, _)| n.clone()))
                .collect();
            let data = DMatrix::from_fn(train_len, names.len(), |r, c| {
                if c == 0 {
                    train_y[r]
                } else {
                    train_x[c - 1].1[r]
                }
            });
            let fit = fit_var(&data, *p, &names)?;
            let values = forecast_var(&fit, &fit.last_obs, horizon)?;
            let se = forecast_var_se(&fit, horizon);
            let point: Vec<f64> = values.column(0).iter().copied().collect();
            let se: Vec<f64> = se.column(0).iter().copied().collect();
            let f = ForecastResult {
                horizon,
                differenced_point: point.clone(),
                bands: normal_bands(&point, &se, significances),
                point,
                se,
            };
            (f, None, Some(fit))
        }
    };

    let point_metrics = metrics(&actual, &forecast_result.point)?;
    let band_metrics = forecast_result
        .bands
        .iter()
        .map(|b| {
            Ok(BandMetrics {
                significance: b.significance,
                upper: metrics(&actual, &b.upper)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Backtest {
        train_len,
        test_dates,
        actual,
        forecast: forecast_result,
        arima,
        var,
        point_metrics,
        band_metrics,
    })
}

fn normal_bands(point: &[f64], se: &[f64], significances: &[f64]) -> Vec<IntervalBand> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    significances
        .iter()
        .map(|&significance| {
            let z = normal.inverse_cdf(1.0 - significance / 2.0);
            IntervalBand {
                significance,
                lower: point.iter().zip(se).map(|(p, s)| p - z * s).collect(),
                upper: point.iter().zip(se).map(|(p, s)| p + z * s).collect(),
            }
        })
        .collect()
}
