use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::nelder_mead;
use super::poly::make_invertible;
use super::{information_criteria, ArimaFit, ArimaSpec, Exog};
use crate::error::{Error, Result};
use crate::linalg::{ols, OlsFit};
use crate::series::difference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Relative spread of CSS values over the simplex at which to stop.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Extra simplex runs from jittered starting points.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-10,
            max_iter: 5000,
            restarts: 0,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn with_restarts(mut self) -> Self {
        self.restarts = 5;
        self
    }
}

/// Regression data on the effective sample `t = p..len(w)`.
struct Problem {
    /// w_t over the effective sample.
    target: Vec<f64>,
    /// Intercept, w lags 1..p, then exogenous columns.
    columns: Vec<Vec<f64>>,
}

impl Problem {
    fn new(w: &[f64], exog: &[&[f64]], p: usize) -> Self {
        let mut columns = vec![vec![1.0; w.len() - p]];
        for i in 1..=p {
            columns.push((p..w.len()).map(|t| w[t - i]).collect());
        }
        for x in exog {
            columns.push(x[p..].to_vec());
        }
        Problem {
            target: w[p..].to_vec(),
            columns,
        }
    }

    /// Inverse MA filter with zero presample errors: e_t = r_t − Σ φ_j e_{t-j}.
    fn filter(ma: &[f64], r: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; r.len()];
        for t in 0..r.len() {
            let mut v = r[t];
            for (j, phi) in ma.iter().enumerate().take(t) {
                v -= phi * e[t - 1 - j];
            }
            e[t] = v;
        }
        e
    }

    /// The residuals are linear in the intercept, AR and exogenous
    /// coefficients once the MA terms are fixed, so those are solved by
    /// least squares on filtered data. The OLS residuals are the ε_t.
    fn concentrated(&self, ma: &[f64]) -> Result<OlsFit> {
        let n = self.target.len();
        let y = DVector::from_vec(Self::filter(ma, &self.target));
        let mut x = DMatrix::zeros(n, self.columns.len());
        for (c, col) in self.columns.iter().enumerate() {
            x.set_column(c, &DVector::from_vec(Self::filter(ma, col)));
        }
        ols(&x, &y)
    }

    fn css(&self, ma: &[f64]) -> f64 {
        self.concentrated(ma).map(|f| f.ssr).unwrap_or(f64::INFINITY)
    }
}

/// OLS of w_t on [1, w_{t-1..p}, proxy_{t-1..q}, exog_t] over t ≥ start.
fn lag_regression(w: &[f64], exog: &[&[f64]], p: usize, proxy: &[f64], q: usize, start: usize) -> Result<OlsFit> {
    let rows = w.len() - start;
    let k = 1 + p + q + exog.len();
    let x = DMatrix::from_fn(rows, k, |r, c| {
        let t = start + r;
        if c == 0 {
            1.0
        } else if c <= p {
            w[t - c]
        } else if c <= p + q {
            proxy[t - (c - p)]
        } else {
            exog[c - 1 - p - q][t]
        }
    });
    let y = DVector::from_fn(rows, |r, _| w[start + r]);
    ols(&x, &y)
}

/// Hannan–Rissanen starting values for the MA coefficients: residuals of a
/// long autoregression stand in for the innovations.
fn hannan_rissanen(w: &[f64], exog: &[&[f64]], p: usize, q: usize) -> Vec<f64> {
    if q == 0 {
        return Vec::new();
    }
    let n = w.len();
    let m = (p.max(q) + 4).min(n / 4).max(1);
    let Ok(long) = lag_regression(w, exog, m, &[], 0, m) else {
        return vec![0.0; q];
    };
    let mut proxy = vec![0.0; n];
    proxy[m..].copy_from_slice(long.resid.as_slice());
    let start = m + p.max(q);
    if n <= start + 1 + p + q + exog.len() {
        return vec![0.0; q];
    }
    match lag_regression(w, exog, p, &proxy, q, start) {
        Ok(fit) => make_invertible(&fit.coef.as_slice()[1 + p..1 + p + q]).0,
        Err(_) => vec![0.0; q],
    }
}

/// Fit by conditional sum of squares, conditioning on the first `p`
/// differenced observations with zero presample errors.
///
/// The simplex search runs over the MA coefficients only; for each trial the
/// intercept, AR and exogenous coefficients that minimise the CSS are
/// obtained in closed form. MA estimates outside the invertible region are
/// reflected and the fit re-evaluated.
pub fn fit_arima(y: &[f64], spec: ArimaSpec, exog: &Exog, opts: &FitOptions) -> Result<ArimaFit> {
    let ArimaSpec { p, d, q } = spec;
    let n = y.len();
    let needed = d + p.max(q) + exog.len() + 10;
    if n <= needed {
        return Err(Error::TooShort { needed, got: n });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("response contains non-finite values".into()));
    }
    for (name, col) in exog {
        if col.len() != n {
            return Err(Error::LengthMismatch(format!(
                "exogenous column {name} has {} rows, response has {n}",
                col.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("exogenous column {name} has non-finite values")));
        }
    }

    let w = difference(y, d)?;
    let xs: Vec<&[f64]> = exog.iter().map(|(_, c)| &c[d..]).collect();
    let problem = Problem::new(&w, &xs, p);
    problem
        .concentrated(&vec![0.0; q])
        .map_err(|e| match e {
            Error::Singular(msg) => Error::Singular(format!("ARIMA{spec} design: {msg}")),
            other => other,
        })?;

    let start = hannan_rissanen(&w, &xs, p, q);
    let objective = |ma: &[f64]| problem.css(ma);
    let mut best = nelder_mead(objective, &start, 0.1, opts.tolerance, opts.max_iter);
    let mut iterations = best.iterations;
    if q > 0 && opts.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let jitter = Normal::new(0.0, 0.2).expect("valid sd");
        for _ in 0..opts.restarts {
            let x0: Vec<f64> = best.x.iter().map(|v| v + jitter.sample(&mut rng)).collect();
            let x0 = make_invertible(&x0).0;
            let run = nelder_mead(objective, &x0, 0.1, opts.tolerance, opts.max_iter);
            iterations += run.iterations;
            if run.f < best.f {
                best = run;
            }
        }
    }
    if !best.converged {
        log::warn!("ARIMA{spec}: simplex stopped after {} iterations without converging", best.iterations);
    }

    let (ma, reflected) = make_invertible(&best.x);
    let ols_fit = problem.concentrated(&ma)?;
    let n_effective = w.len() - p;
    let css = ols_fit.ssr;
    let sigma2 = css / n_effective as f64;
    if !(sigma2 > 0.0) {
        return Err(Error::Singular(format!("ARIMA{spec} fits the data exactly")));
    }
    let loglik = -(n_effective as f64) / 2.0 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let k = 1 + p + q + exog.len() + 1;
    let (aic, bic) = information_criteria(loglik, k, n_effective);
    let coef = ols_fit.coef.as_slice();
    Ok(ArimaFit {
        spec,
        intercept: coef[0],
        ar: coef[1..=p].to_vec(),
        ma,
        exog_names: exog.iter().map(|(name, _)| name.clone()).collect(),
        exog_coeffs: coef[1 + p..].to_vec(),
        sigma2,
        loglik,
        aic,
        bic,
        residuals: ols_fit.resid.as_slice().to_vec(),
        n_effective,
        converged: best.converged,
        iterations,
        reflected,
        history: y.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    /// Successful fits, best AIC first.
    pub ranked: Vec<ArimaFit>,
    pub failures: Vec<(ArimaSpec, String)>,
}

/// Fit every order in the grid (in parallel) and rank by AIC, breaking
/// ties by p + q and then p.
pub fn grid_search(
    y: &[f64],
    exog: &Exog,
    p_range: RangeInclusive<usize>,
    d: usize,
    q_range: RangeInclusive<usize>,
    opts: &FitOptions,
) -> Result<GridSearch> {
    if p_range.is_empty() || q_range.is_empty() {
        return Err(Error::InvalidInput("empty order range".into()));
    }
    let specs: Vec<ArimaSpec> = p_range
        .flat_map(|p| q_range.clone().map(move |q| (p, q)))
        .map(|(p, q)| ArimaSpec::new(p, d, q))
        .collect::<Result<_>>()?;
    let results: Vec<(ArimaSpec, Result<ArimaFit>)> = specs
        .par_iter()
        .map(|&spec| (spec, fit_arima(y, spec, exog, opts)))
        .collect();

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (spec, r) in results {
        match r {
            Ok(fit) => ranked.push(fit),
            Err(e) => {
                log::warn!("ARIMA{spec} failed: {e}");
                failures.push((spec, e.to_string()));
            }
        }
    }
    if ranked.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    ranked.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then((a.spec.p + a.spec.q).cmp(&(b.spec.p + b.spec.q)))
            .then(a.spec.p.cmp(&b.spec.p))
    });
    Ok(GridSearch { ranked, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = rand_distr::StandardNormal;
        (0..n).map(|_| z.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_intercept_only() {
        let y: Vec<f64> = noise(300, 1).iter().map(|v| v + 4.0).collect();
        let fit = fit_arima(&y, ArimaSpec::new(0, 0, 0).unwrap(), &[], &FitOptions::default()).unwrap();
        let mean = y.iter().sum::<f64>() / 300.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 300.0;
        assert!((fit.intercept - mean).abs() < 1e-9);
        assert!((fit.sigma2 - var).abs() < 1e-9);
        assert_eq!(fit.residuals.len(), fit.n_effective);
        assert!((fit.aic - (2.0 * 2.0 - 2.0 * fit.loglik)).abs() < 1e-9);
    }

    #[test]
    fn pure_ar_matches_lagged_ols() {
        let e = noise(400, 2);
        let mut y = vec![0.0; 400];
        for t in 2..400 {
            y[t] = 1.0 + 0.5 * y[t - 1] - 0.2 * y[t - 2] + e[t];
        }
        let fit = fit_arima(&y, ArimaSpec::new(2, 0, 0).unwrap(), &[], &FitOptions::default()).unwrap();
        let x = DMatrix::from_fn(398, 3, |r, c| if c == 0 { 1.0 } else { y[r + 2 - c] });
        let target = DVector::from_fn(398, |r, _| y[r + 2]);
        let o = ols(&x, &target).unwrap();
        assert!((fit.intercept - o.coef[0]).abs() < 1e-6);
        assert!((fit.ar[0] - o.coef[1]).abs() < 1e-6);
        assert!((fit.ar[1] - o.coef[2]).abs() < 1e-6);
        assert_eq!(fit.n_effective, 398);
    }

    #[test]
    fn exogenous_slope() {
        let z = noise(300, 3);
        let e = noise(300, 4);
        let y: Vec<f64> = z.iter().zip(&e).map(|(z, e)| 2.0 * z + 0.3 * e).collect();
        let exog = vec![("z".to_string(), z)];
        let fit = fit_arima(&y, ArimaSpec::new(0, 0, 0).unwrap(), &exog, &FitOptions::default()).unwrap();
        assert!((fit.exog_coeffs[0] - 2.0).abs() < 0.05);
        assert_eq!(fit.n_params(), 3);
    }

    #[test]
    fn arma11_recovered() {
        let e = noise(2001, 5);
        let mut y = vec![0.0; 2001];
        for t in 1..2001 {
            y[t] = 0.5 * y[t - 1] + e[t] + 0.3 * e[t - 1];
        }
        let fit = fit_arima(&y[1..], ArimaSpec::new(1, 0, 1).unwrap(), &[], &FitOptions::default()).unwrap();
        assert!((fit.ar[0] - 0.5).abs() < 0.08, "{:?}", fit.ar);
        assert!((fit.ma[0] - 0.3).abs() < 0.08, "{:?}", fit.ma);
        assert!(fit.converged);
    }

    #[test]
    fn non_invertible_truth_is_reflected() {
        let e = noise(1001, 6);
        let y: Vec<f64> = (1..1001).map(|t| e[t] + 2.0 * e[t - 1]).collect();
        let fit = fit_arima(&y, ArimaSpec::new(0, 0, 1).unwrap(), &[], &FitOptions::default()).unwrap();
        assert!(fit.ma[0].abs() <= 1.0);
        assert!((fit.ma[0] - 0.5).abs() < 0.1, "{:?}", fit.ma);
    }

    #[test]
    fn constant_exog_is_singular() {
        let y = noise(100, 7);
        let exog = vec![("c".to_string(), vec![2.0; 100])];
        let err = fit_arima(&y, ArimaSpec::new(1, 0, 0).unwrap(), &exog, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn grid_ranks_by_aic() {
        let e = noise(500, 8);
        let mut y = vec![0.0; 500];
        for t in 2..500 {
            y[t] = 0.6 * y[t - 1] - 0.3 * y[t - 2] + e[t];
        }
        let g = grid_search(&y, &[], 0..=3, 0, 0..=1, &FitOptions::default()).unwrap();
        assert_eq!(g.ranked.len() + g.failures.len(), 8);
        assert!(g.ranked.windows(2).all(|w| w[0].aic <= w[1].aic));
        assert!(g.ranked[0].spec.p >= 2);
        let one = grid_search(&y, &[], 1..=1, 0, 0..=0, &FitOptions::default()).unwrap();
        assert_eq!(one.ranked.len(), 1);
    }

    #[test]
    fn restarts_are_deterministic() {
        let e = noise(300, 9);
        let y: Vec<f64> = (1..300).map(|t| e[t] + 0.4 * e[t - 1]).collect();
        let opts = FitOptions { seed: 3, ..FitOptions::default() }.with_restarts();
        let a = fit_arima(&y, ArimaSpec::new(0, 0, 1).unwrap(), &[], &opts).unwrap();
        let b = fit_arima(&y, ArimaSpec::new(0, 0, 1).unwrap(), &[], &opts).unwrap();
        assert_eq!(a, b);
    }
}
