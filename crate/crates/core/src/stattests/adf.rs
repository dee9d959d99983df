use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::series::difference;

/// MacKinnon (1994) response surface for the constant-only, single-series
/// case: statistic bounds and polynomial coefficients (ascending powers).
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const TAU_SMALLP: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
const TAU_LARGEP: [f64; 4] = [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2];

/// MacKinnon (2010) finite-sample critical values, constant only:
/// `b0 + b1/T + b2/T^2 + b3/T^3` at 1%, 5% and 10%.
const CRIT_2010: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub chosen_lag: usize,
    pub reject_h0: bool,
    pub alpha: f64,
    pub n_obs: usize,
    /// Critical values at 1%, 5% and 10%.
    pub critical_values: [f64; 3],
}

/// `12 (n / 100)^(1/4)`, the usual default lag ceiling.
pub fn default_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Approximate p-value of an ADF t-statistic (constant, no trend).
pub fn mackinnon_p_value(stat: f64) -> f64 {
    if stat > TAU_MAX {
        return 1.0;
    }
    if stat < TAU_MIN {
        return 0.0;
    }
    let coefs: &[f64] = if stat <= TAU_STAR { &TAU_SMALLP } else { &TAU_LARGEP };
    let z = coefs.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

fn critical_values(nobs: usize) -> [f64; 3] {
    let t = nobs as f64;
    CRIT_2010.map(|b| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

/// Regression of Δy on y_{t-1}, `lag` lagged differences and a constant,
/// using Δy rows `first..`.
fn adf_regression(y: &[f64], dy: &[f64], lag: usize, first: usize) -> Result<(f64, f64, usize)> {
    let rows = dy.len() - first;
    let k = lag + 2;
    let x = DMatrix::from_fn(rows, k, |r, c| {
        let i = first + r;
        match c {
            0 => y[i],
            c if c <= lag => dy[i - c],
            _ => 1.0,
        }
    });
    let target = DVector::from_fn(rows, |r, _| dy[first + r]);
    let fit = ols(&x, &target)?;
    let aic = rows as f64 * (fit.ssr / rows as f64).ln() + 2.0 * k as f64;
    let t = fit.coef[0] / fit.std_errors()[0];
    Ok((t, aic, rows))
}

/// Augmented Dickey–Fuller test with a constant. The number of lagged
/// differences is chosen in `0..=max_lag` by AIC on a common sample, then
/// the chosen regression is refitted on all available rows.
pub fn adf_test(series: &[f64], max_lag: usize, alpha: f64) -> Result<AdfResult> {
    let n = series.len();
    if n <= max_lag + 10 {
        return Err(Error::TooShort {
            needed: max_lag + 10,
            got: n,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(Error::ZeroVariance);
    }
    let dy = difference(series, 1)?;

    let mut best = (0usize, f64::INFINITY);
    for lag in 0..=max_lag {
        let (_, aic, _) = adf_regression(series, &dy, lag, max_lag)?;
        if aic < best.1 {
            best = (lag, aic);
        }
    }
    let chosen_lag = best.0;
    let (statistic, _, n_obs) = adf_regression(series, &dy, chosen_lag, chosen_lag)?;
    let p_value = mackinnon_p_value(statistic);
    Ok(AdfResult {
        statistic,
        p_value,
        chosen_lag,
        reject_h0: p_value < alpha,
        alpha,
        n_obs,
        critical_values: critical_values(n_obs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub series: Vec<f64>,
    pub d: usize,
    pub adf: AdfResult,
}

/// Difference until the ADF test rejects a unit root, up to `max_d` times.
pub fn ensure_stationary(series: &[f64], max_d: usize, alpha: f64) -> Result<Stationary> {
    let mut current = series.to_vec();
    let mut d = 0;
    loop {
        let max_lag = default_max_lag(current.len()).min(current.len().saturating_sub(11));
        let adf = adf_test(&current, max_lag, alpha)?;
        if adf.reject_h0 {
            return Ok(Stationary { series: current, d, adf });
        }
        if d == max_d {
            return Err(Error::NonStationary { d, adf: Box::new(adf) });
        }
        current = difference(&current, 1)?;
        d += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn cumsum(x: &[f64]) -> Vec<f64> {
        x.iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect()
    }

    #[test]
    fn p_value_surface() {
        // Critical values map back to their nominal levels.
        assert!((mackinnon_p_value(-3.43035) - 0.01).abs() < 0.002);
        assert!((mackinnon_p_value(-2.86154) - 0.05).abs() < 0.003);
        assert!((mackinnon_p_value(-2.56677) - 0.10).abs() < 0.005);
        assert_eq!(mackinnon_p_value(3.0), 1.0);
        assert_eq!(mackinnon_p_value(-20.0), 0.0);
        let mut last = 0.0;
        for i in 0..200 {
            let p = mackinnon_p_value(-8.0 + i as f64 * 0.05);
            assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn matches_reference_implementation() {
        // Frozen from statsmodels.tsa.stattools.adfuller(x, maxlag=4,
        // regression="c", autolag="AIC") on x_t = 0.6 x_{t-1} + e_t with
        // e_t = sin(1.7 t) + 0.5 cos(0.3 t^2), x_0 = 0, t = 1..120.
        let mut x = vec![0.0f64];
        for t in 1..=120 {
            let tf = t as f64;
            let e = (1.7 * tf).sin() + 0.5 * (0.3 * tf * tf).cos();
            x.push(0.6 * x[t - 1] + e);
        }
        let r = adf_test(&x, 4, 0.05).unwrap();
        assert_eq!(r.chosen_lag, REF_LAG);
        assert!((r.statistic - REF_STAT).abs() < 1e-6, "{}", r.statistic);
        assert!((r.p_value - REF_P).abs() < 1e-6, "{}", r.p_value);
        assert_eq!(r.n_obs, REF_NOBS);
        for (a, b) in r.critical_values.iter().zip(REF_CRIT) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    const REF_LAG: usize = 4;
    const REF_STAT: f64 = -5.09941388675879;
    const REF_P: f64 = 1.405708853625579e-05;
    const REF_NOBS: usize = 116;
    const REF_CRIT: [f64; 3] = [-3.4880216384691867, -2.8867966864160075, -2.5802408234244947];

    #[test]
    fn constant_series_errors() {
        assert!(matches!(adf_test(&[3.0; 50], 2, 0.05), Err(Error::ZeroVariance)));
        assert!(matches!(adf_test(&[1.0; 5], 2, 0.05), Err(Error::TooShort { .. })));
    }

    #[test]
    fn statistic_is_scale_invariant() {
        let x = cumsum(&noise(200, 3));
        let a = adf_test(&x, 6, 0.05).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * 37.5).collect();
        let b = adf_test(&scaled, 6, 0.05).unwrap();
        assert_eq!(a.chosen_lag, b.chosen_lag);
        assert!((a.statistic - b.statistic).abs() < 1e-8 * a.statistic.abs().max(1.0));
    }

    #[test]
    fn white_noise_needs_no_differencing() {
        let s = ensure_stationary(&noise(300, 1), 2, 0.05).unwrap();
        assert_eq!(s.d, 0);
        assert_eq!(s.series.len(), 300);
    }

    #[test]
    fn double_integrated_needs_two() {
        let mut hits = 0;
        for seed in 0..20 {
            let x = cumsum(&cumsum(&noise(300, 100 + seed)));
            if let Ok(s) = ensure_stationary(&x, 2, 0.05) {
                if s.d == 2 {
                    hits += 1;
                }
            }
        }
        assert!(hits >= 17, "d=2 in {hits}/20");
    }

    #[test]
    fn cap_reached_reports_last_test() {
        let mut errors = 0;
        for seed in 0..10 {
            let x = cumsum(&noise(200, 500 + seed));
            match ensure_stationary(&x, 0, 0.05) {
                Err(Error::NonStationary { d, adf }) => {
                    assert_eq!(d, 0);
                    assert!(!adf.reject_h0);
                    errors += 1;
                }
                Ok(s) => assert!(s.adf.reject_h0),
                Err(other) => panic!("unexpected {other:?}"),
            }
        }
        assert!(errors >= 7, "{errors}/10");
    }
}
