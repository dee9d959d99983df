//! Derivative-free simplex minimisation.

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients. Stops when the spread of
/// objective values over the simplex, relative to the best value, drops
/// below `tol`, or after `max_iter` iterations.
pub(crate) fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(x0);
        return Minimum {
            x: Vec::new(),
            f: v,
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] != 0.0 { step * x[i].abs().max(0.5) } else { step };
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && (worst - best) <= tol * best.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xw = simplex[n].0.clone();
        let xr = along(1.0, &xw);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0, &xw);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5, &xw);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5, &xw);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for point in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x0.iter().zip(&point.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                    let v = eval(&x);
                    *point = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2) + 1.0,
            &[-1.2, 1.0],
            0.1,
            1e-14,
            5000,
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let m = nelder_mead(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0, &[5.0, 5.0, 5.0], 0.1, 0.0, 10);
        assert!(!m.converged);
        assert_eq!(m.iterations, 10);
    }
}
