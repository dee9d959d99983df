//! Vector autoregression: `y_t = c + Σ_{j=1..p} Θ_j y_{t-j} + ε_t`, fitted
//! equation by equation with a shared lag design.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ols;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarFit {
    pub p: usize,
    pub c: DVector<f64>,
    /// Θ_1..Θ_p, each n×n; row i holds equation i.
    pub coeff: Vec<DMatrix<f64>>,
    /// Residual covariance E'E / (T − p).
    pub resid_cov: DMatrix<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub variable_names: Vec<String>,
    /// Number of rows used in estimation.
    pub n_obs: usize,
    /// The last p observations of the estimation data, oldest first.
    pub last_obs: DMatrix<f64>,
}

impl VarFit {
    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    /// `n + p n²`: intercepts and lag coefficients.
    pub fn n_params(&self) -> usize {
        let n = self.n_vars();
        n + self.p * n * n
    }

    /// Unconditional mean `(I − Σ Θ_j)^-1 c` of a stable model.
    pub fn long_run_mean(&self) -> Result<DVector<f64>> {
        let n = self.n_vars();
        let mut a = DMatrix::identity(n, n);
        for theta in &self.coeff {
            a -= theta;
        }
        a.lu()
            .solve(&self.c)
            .ok_or_else(|| Error::Singular("I − ΣΘ has a unit root".into()))
    }
}

fn check_data(y: &DMatrix<f64>, names: &[String]) -> Result<()> {
    if names.len() != y.ncols() {
        return Err(Error::LengthMismatch(format!("{} names for {} variables", names.len(), y.ncols())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contain non-finite values".into()));
    }
    for (j, name) in names.iter().enumerate() {
        let col = y.column(j);
        if col.iter().all(|v| *v == col[0]) {
            log::warn!("variable {name} is constant");
            return Err(Error::ZeroVariance);
        }
    }
    Ok(())
}

/// Estimate with targets at rows `start..T` (`start ≥ p`).
fn fit_on(y: &DMatrix<f64>, p: usize, start: usize, names: &[String]) -> Result<VarFit> {
    let (t_len, n) = y.shape();
    let rows = t_len - start;
    let x = DMatrix::from_fn(rows, 1 + n * p, |r, c| {
        if c == 0 {
            1.0
        } else {
            let (lag, var) = ((c - 1) / n + 1, (c - 1) % n);
            y[(start + r - lag, var)]
        }
    });

    let mut c = DVector::zeros(n);
    let mut coeff = vec![DMatrix::zeros(n, n); p];
    let mut resid = DMatrix::zeros(rows, n);
    for i in 0..n {
        let target = DVector::from_fn(rows, |r, _| y[(start + r, i)]);
        let fit = ols(&x, &target).map_err(|e| match e {
            Error::Singular(msg) => Error::Singular(format!("VAR({p}) equation {}: {msg}", names[i])),
            other => other,
        })?;
        c[i] = fit.coef[0];
        for (lag, theta) in coeff.iter_mut().enumerate() {
            for j in 0..n {
                theta[(i, j)] = fit.coef[1 + lag * n + j];
            }
        }
        resid.set_column(i, &fit.resid);
    }

    let mut resid_cov = resid.transpose() * &resid / rows as f64;
    resid_cov = (&resid_cov + resid_cov.transpose()) * 0.5;
    let log_det = resid_cov
        .clone()
        .cholesky()
        .map(|ch| 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        .ok_or_else(|| Error::Singular(format!("VAR({p}) residual covariance is not positive definite")))?;
    let loglik = -(rows as f64) / 2.0 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + n as f64);
    let k = n + p * n * n;
    Ok(VarFit {
        p,
        c,
        coeff,
        resid_cov,
        loglik,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        variable_names: names.to_vec(),
        n_obs: rows,
        last_obs: y.rows(t_len - p, p).into_owned(),
    })
}

fn check_length(t_len: usize, n: usize, p: usize) -> Result<()> {
    if t_len <= n * p + 1 || t_len <= p {
        return Err(Error::TooShort {
            needed: n * p + 1,
            got: t_len,
        });
    }
    Ok(())
}

/// OLS fit of a VAR(p) to the T×n matrix `y`. `p = 0` gives the
/// intercept-only model.
pub fn fit_var(y: &DMatrix<f64>, p: usize, names: &[String]) -> Result<VarFit> {
    check_data(y, names)?;
    check_length(y.nrows(), y.ncols(), p)?;
    fit_on(y, p, p, names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSelection {
    pub best: VarFit,
    /// `(p, aic)` on the common sample, p ascending.
    pub table: Vec<(usize, f64)>,
}

/// Compare VAR(0)..VAR(p_max) by AIC on the rows every candidate can use,
/// then refit the winner on its full usable sample. Ties go to the smaller p.
pub fn select_var_order(y: &DMatrix<f64>, p_max: usize, names: &[String]) -> Result<VarSelection> {
    check_data(y, names)?;
    check_length(y.nrows() - p_max.min(y.nrows()), y.ncols(), p_max)?;
    let table: Vec<(usize, f64)> = (0..=p_max)
        .into_par_iter()
        .map(|p| fit_on(y, p, p_max, names).map(|f| (p, f.aic)))
        .collect::<Result<_>>()?;
    let (best_p, _) = table
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |acc, (p, aic)| if aic < acc.1 { (p, aic) } else { acc });
    Ok(VarSelection {
        best: fit_on(y, best_p, best_p, names)?,
        table,
    })
}

/// Iterate the fitted recursion `horizon` steps past `last_obs` (the most
/// recent p observations, oldest first) with future errors at zero.
pub fn forecast_var(fit: &VarFit, last_obs: &DMatrix<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let n = fit.n_vars();
    if last_obs.nrows() != fit.p || last_obs.ncols() != n {
        return Err(Error::LengthMismatch(format!(
            "need {}×{n} starting observations, got {}×{}",
            fit.p,
            last_obs.nrows(),
            last_obs.ncols()
        )));
    }
    let mut hist: Vec<DVector<f64>> = (0..fit.p).map(|r| last_obs.row(r).transpose()).collect();
    let mut out = DMatrix::zeros(horizon, n);
    for h in 0..horizon {
        let mut next = fit.c.clone();
        for (j, theta) in fit.coeff.iter().enumerate() {
            next += theta * &hist[hist.len() - 1 - j];
        }
        out.set_row(h, &next.transpose());
        hist.push(next);
    }
    Ok(out)
}

/// Forecast standard errors (horizon×n) from the MA(∞) form:
/// MSE_h = Σ_{i<h} Ψ_i Σ Ψ_i', with Ψ_0 = I and Ψ_i = Σ_j Θ_j Ψ_{i-j}.
pub fn forecast_var_se(fit: &VarFit, horizon: usize) -> DMatrix<f64> {
    let n = fit.n_vars();
    let mut psi: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n)];
    let mut mse = DMatrix::zeros(n, n);
    let mut out = DMatrix::zeros(horizon, n);
    for h in 0..horizon {
        if h > 0 {
            let mut next = DMatrix::zeros(n, n);
            for (j, theta) in fit.coeff.iter().enumerate() {
                if j < h {
                    next += theta * &psi[h - 1 - j];
                }
            }
            psi.push(next);
        }
        mse += &psi[h] * &fit.resid_cov * psi[h].transpose();
        for i in 0..n {
            out[(h, i)] = mse[(i, i)].max(0.0).sqrt();
        }
    }
    out
}

/// `date` plus one column per variable.
pub fn write_var_forecast_csv(path: &Path, dates: &[NaiveDate], names: &[String], values: &DMatrix<f64>) -> Result<()> {
    if dates.len() != values.nrows() || names.len() != values.ncols() {
        return Err(Error::LengthMismatch("forecast table shape".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("date").chain(names.iter().map(String::as_str)))?;
    for (r, date) in dates.iter().enumerate() {
        let mut row = vec![date.to_string()];
        row.extend(values.row(r).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn simulate(thetas: &[DMatrix<f64>], c: &DVector<f64>, t_len: usize, seed: u64) -> DMatrix<f64> {
        let n = c.len();
        let p = thetas.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 100;
        let mut rows: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
        for _ in 0..t_len + burn {
            let mut next = c.clone();
            for (j, th) in thetas.iter().enumerate() {
                next += th * &rows[rows.len() - 1 - j];
            }
            for v in next.iter_mut() {
                *v += Distribution::<f64>::sample(&StandardNormal, &mut rng);
            }
            rows.push(next);
        }
        let rows = &rows[rows.len() - t_len..];
        DMatrix::from_fn(t_len, n, |r, c| rows[r][c])
    }

    #[test]
    fn var1_recovered() {
        let theta = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]);
        let y = simulate(std::slice::from_ref(&theta), &DVector::from_vec(vec![1.0, -1.0]), 5000, 1);
        let fit = fit_var(&y, 1, &names(2)).unwrap();
        for (a, b) in fit.coeff[0].iter().zip(theta.iter()) {
            assert!((a - b).abs() < 0.05);
        }
        let s = &fit.resid_cov;
        assert!((s - s.transpose()).amax() < 1e-12);
        assert!(s.clone().symmetric_eigenvalues().iter().all(|e| *e > -1e-9));
    }

    #[test]
    fn intercept_only_is_column_means() {
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 5.0, 2.0, 2.0, 6.0, 3.0]);
        let fit = fit_var(&y, 0, &names(2)).unwrap();
        assert!((fit.c[0] - 3.0).abs() < 1e-12 && (fit.c[1] - 3.0).abs() < 1e-12);
        let f = forecast_var(&fit, &DMatrix::zeros(0, 2), 3).unwrap();
        assert!(f.row_iter().all(|r| (r[0] - 3.0).abs() < 1e-12 && (r[1] - 3.0).abs() < 1e-12));
        let sel = select_var_order(&y, 0, &names(2)).unwrap();
        assert_eq!(sel.best.p, 0);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let base = simulate(&[DMatrix::from_diagonal_element(1, 1, 0.5)], &DVector::zeros(1), 200, 2);
        let y = DMatrix::from_fn(200, 2, |r, _| base[(r, 0)]);
        assert!(matches!(fit_var(&y, 1, &names(2)), Err(Error::Singular(_))));
    }

    #[test]
    fn diagonal_recursion() {
        let fit = VarFit {
            p: 1,
            c: DVector::zeros(2),
            coeff: vec![DMatrix::from_diagonal_element(2, 2, 0.5)],
            resid_cov: DMatrix::identity(2, 2),
            loglik: 0.0,
            aic: 0.0,
            variable_names: names(2),
            n_obs: 0,
            last_obs: DMatrix::from_row_slice(1, 2, &[10.0, 4.0]),
        };
        let f = forecast_var(&fit, &fit.last_obs, 2).unwrap();
        assert_eq!(f.row(0).iter().copied().collect::<Vec<_>>(), vec![5.0, 2.0]);
        assert_eq!(f.row(1).iter().copied().collect::<Vec<_>>(), vec![2.5, 1.0]);
        assert!(forecast_var(&fit, &fit.last_obs, 0).is_err());
        let se = forecast_var_se(&fit, 3);
        assert!((se[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((se[(2, 1)] - (1.0f64 + 0.25 + 0.0625).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn converges_to_long_run_mean() {
        let thetas = [
            DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.3]),
            DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.1, 0.1]),
        ];
        let y = simulate(&thetas, &DVector::from_vec(vec![2.0, 1.0]), 800, 4);
        let fit = fit_var(&y, 2, &names(2)).unwrap();
        let f = forecast_var(&fit, &fit.last_obs, 200).unwrap();
        let mu = fit.long_run_mean().unwrap();
        for i in 0..2 {
            assert!((f[(199, i)] - mu[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn covariance_permutes_with_variables() {
        let thetas = [DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.0, 0.2, 0.1, 0.1, 0.0, 0.4])];
        let y = simulate(&thetas, &DVector::zeros(3), 300, 5);
        let perm = [2usize, 0, 1];
        let yp = DMatrix::from_fn(300, 3, |r, c| y[(r, perm[c])]);
        let a = fit_var(&y, 2, &names(3)).unwrap();
        let b = fit_var(&yp, 2, &names(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b.resid_cov[(i, j)] - a.resid_cov[(perm[i], perm[j])]).abs() < 1e-10);
            }
        }
    }
}
