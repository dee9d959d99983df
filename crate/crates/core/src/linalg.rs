//! Least squares through a column-pivoted Householder QR on an
//! equilibrated design matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number ceiling for the normal matrix X'X (after column
/// equilibration). Designs above it are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    pub resid: DVector<f64>,
    pub ssr: f64,
    /// (X'X)^-1 in the original column scale.
    pub xtx_inv: DMatrix<f64>,
    pub n: usize,
    pub k: usize,
}

impl OlsFit {
    /// Standard errors with sigma² = SSR / (n − k).
    pub fn std_errors(&self) -> DVector<f64> {
        let dof = (self.n - self.k).max(1) as f64;
        let s2 = self.ssr / dof;
        DVector::from_iterator(self.k, (0..self.k).map(|i| (s2 * self.xtx_inv[(i, i)]).sqrt()))
    }
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// Fails with [`Error::Singular`] when a column is identically zero or the
/// condition estimate of the equilibrated X'X exceeds [`MAX_CONDITION`].
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch(format!(
            "design has {n} rows, response has {}",
            y.len()
        )));
    }
    if n < k {
        return Err(Error::Singular(format!("{n} rows for {k} regressors")));
    }
    if k == 0 {
        let ssr = y.dot(y);
        return Ok(OlsFit {
            coef: DVector::zeros(0),
            resid: y.clone(),
            ssr,
            xtx_inv: DMatrix::zeros(0, 0),
            n,
            k,
        });
    }

    let mut scale = vec![0.0; k];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = x.column(j).norm();
        if *s == 0.0 || !s.is_finite() {
            return Err(Error::Singular(format!("column {j} is zero or non-finite")));
        }
    }
    let mut a = x.clone();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }

    let qr = PivotedQr::factor(a);
    let r00 = qr.a[(0, 0)].abs();
    let rkk = qr.a[(k - 1, k - 1)].abs();
    if rkk == 0.0 || (r00 / rkk).powi(2) > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "condition estimate {:.3e} exceeds {MAX_CONDITION:.0e}",
            if rkk == 0.0 { f64::INFINITY } else { (r00 / rkk).powi(2) }
        )));
    }

    let mut qty = y.clone();
    qr.apply_qt(&mut qty);
    let z = qr.solve_r(&qty.rows(0, k).into_owned());
    let mut coef = DVector::zeros(k);
    for (i, &col) in qr.perm.iter().enumerate() {
        coef[col] = z[i] / scale[col];
    }

    let resid = y - x * &coef;
    let ssr = resid.dot(&resid);

    let rinv = qr.r_inverse();
    let m = &rinv * rinv.transpose();
    let mut xtx_inv = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let (ci, cj) = (qr.perm[i], qr.perm[j]);
            xtx_inv[(ci, cj)] = m[(i, j)] / (scale[ci] * scale[cj]);
        }
    }

    Ok(OlsFit {
        coef,
        resid,
        ssr,
        xtx_inv,
        n,
        k,
    })
}

struct PivotedQr {
    /// R in the upper triangle, Householder vectors below the diagonal.
    a: DMatrix<f64>,
    tau: Vec<f64>,
    /// `perm[i]` is the original column stored at position i.
    perm: Vec<usize>,
}

impl PivotedQr {
    fn factor(mut a: DMatrix<f64>) -> Self {
        let (n, k) = a.shape();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut norms: Vec<f64> = (0..k).map(|j| a.column(j).norm_squared()).collect();
        let mut tau = vec![0.0; k];

        for j in 0..k {
            let pivot = (j..k)
                .max_by(|&p, &q| norms[p].partial_cmp(&norms[q]).unwrap().then(q.cmp(&p)))
                .unwrap();
            if pivot != j {
                a.swap_columns(j, pivot);
                norms.swap(j, pivot);
                perm.swap(j, pivot);
            }

            let alpha = a.view((j, j), (n - j, 1)).norm();
            if alpha == 0.0 {
                tau[j] = 0.0;
                continue;
            }
            let beta = if a[(j, j)] > 0.0 { -alpha } else { alpha };
            let v0 = a[(j, j)] - beta;
            for i in j + 1..n {
                a[(i, j)] /= v0;
            }
            tau[j] = (beta - a[(j, j)]) / beta;
            a[(j, j)] = beta;

            for c in j + 1..k {
                let mut dot = a[(j, c)];
                for i in j + 1..n {
                    dot += a[(i, j)] * a[(i, c)];
                }
                dot *= tau[j];
                a[(j, c)] -= dot;
                for i in j + 1..n {
                    let vi = a[(i, j)];
                    a[(i, c)] -= dot * vi;
                }
                // Recompute rather than downdate; the designs here are small.
                norms[c] = a.view((j + 1, c), (n - j - 1, 1)).norm_squared();
            }
        }
        PivotedQr { a, tau, perm }
    }

    fn apply_qt(&self, y: &mut DVector<f64>) {
        let (n, k) = self.a.shape();
        for j in 0..k {
            if self.tau[j] == 0.0 {
                continue;
            }
            let mut dot = y[j];
            for i in j + 1..n {
                dot += self.a[(i, j)] * y[i];
            }
            dot *= self.tau[j];
            y[j] -= dot;
            for i in j + 1..n {
                y[i] -= dot * self.a[(i, j)];
            }
        }
    }

    fn solve_r(&self, b: &DVector<f64>) -> DVector<f64> {
        let k = b.len();
        let mut z = b.clone();
        for i in (0..k).rev() {
            let mut s = z[i];
            for c in i + 1..k {
                s -= self.a[(i, c)] * z[c];
            }
            z[i] = s / self.a[(i, i)];
        }
        z
    }

    fn r_inverse(&self) -> DMatrix<f64> {
        let k = self.a.ncols();
        let mut inv = DMatrix::zeros(k, k);
        for col in 0..k {
            let mut e = DVector::zeros(k);
            e[col] = 1.0;
            inv.set_column(col, &self.solve_r(&e));
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovered() {
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_iterator(5, (0..5).map(|i| 3.0 + 2.0 * i as f64));
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coef[0] - 3.0).abs() < 1e-12);
        assert!((fit.coef[1] - 2.0).abs() < 1e-12);
        assert!(fit.ssr < 1e-20);
    }

    #[test]
    fn matches_normal_equations() {
        let x = DMatrix::from_fn(30, 4, |i, j| ((i * 7 + j * 13) % 11) as f64 + (j as f64) * 0.1 * i as f64);
        let y = DVector::from_fn(30, |i, _| ((i * 5) % 7) as f64 - 2.0);
        let fit = ols(&x, &y).unwrap();
        let xtx = x.transpose() * &x;
        let inv = xtx.try_inverse().unwrap();
        let beta = &inv * x.transpose() * &y;
        for j in 0..4 {
            assert!((fit.coef[j] - beta[j]).abs() < 1e-8 * (1.0 + beta[j].abs()));
            for l in 0..4 {
                assert!((fit.xtx_inv[(j, l)] - inv[(j, l)]).abs() < 1e-8 * (1.0 + inv[(j, l)].abs()));
            }
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = DMatrix::from_fn(10, 3, |i, j| if j >= 1 { i as f64 } else { 1.0 });
        let y = DVector::from_fn(10, |i, _| i as f64);
        assert!(matches!(ols(&x, &y), Err(Error::Singular(_))));
    }
}
