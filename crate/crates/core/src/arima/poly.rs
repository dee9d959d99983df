//! Lag-polynomial helpers.

use nalgebra::{Complex, DMatrix};

/// Inverse roots r_i of 1 + c_1 L + ... + c_q L^q = Π (1 − r_i L).
pub(crate) fn inverse_roots(coefs: &[f64]) -> Vec<Complex<f64>> {
    let q = coefs.len();
    if q == 0 {
        return Vec::new();
    }
    let companion = DMatrix::from_fn(q, q, |i, j| {
        if i == 0 {
            -coefs[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Reflect inverse roots outside the unit circle to 1/conj(r). Returns the
/// new coefficients and whether anything changed.
pub(crate) fn make_invertible(coefs: &[f64]) -> (Vec<f64>, bool) {
    let roots = inverse_roots(coefs);
    if roots.iter().all(|r| r.norm() <= 1.0) {
        return (coefs.to_vec(), false);
    }
    let reflected: Vec<Complex<f64>> = roots
        .into_iter()
        .map(|r| if r.norm() > 1.0 { Complex::new(1.0, 0.0) / r.conj() } else { r })
        .collect();
    // Expand Π (1 − r_i L).
    let mut poly = vec![Complex::new(1.0, 0.0)];
    for r in reflected {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    (poly[1..].iter().map(|c| c.re).collect(), true)
}

/// Coefficients a_1..a_m of 1 − Σ a_i L^i = (1 − Σ ar_i L^i)(1 − L)^d.
pub(crate) fn integrated_ar(ar: &[f64], d: usize) -> Vec<f64> {
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(ar.iter().map(|a| -a)).collect();
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

/// MA(∞) weights ψ_0..ψ_{h-1} of the model with AR part `a` (as returned by
/// [`integrated_ar`]) and MA coefficients `ma`.
pub(crate) fn psi_weights(a: &[f64], ma: &[f64], h: usize) -> Vec<f64> {
    let mut psi = vec![0.0; h];
    for j in 0..h {
        let mut v = if j == 0 {
            1.0
        } else if j <= ma.len() {
            ma[j - 1]
        } else {
            0.0
        };
        for (i, ai) in a.iter().enumerate() {
            let lag = i + 1;
            if lag <= j {
                v += ai * psi[j - lag];
            }
        }
        psi[j] = v;
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_of_ma1() {
        let (c, changed) = make_invertible(&[2.0]);
        assert!(changed);
        assert!((c[0] - 0.5).abs() < 1e-12);
        let (c, changed) = make_invertible(&[0.4]);
        assert!(!changed);
        assert_eq!(c, vec![0.4]);
    }

    #[test]
    fn reflection_keeps_invertible_roots() {
        // (1 + 0.5L)(1 + 3L) = 1 + 3.5L + 1.5L²  →  (1 + 0.5L)(1 + L/3)
        let (c, changed) = make_invertible(&[3.5, 1.5]);
        assert!(changed);
        assert!((c[0] - (0.5 + 1.0 / 3.0)).abs() < 1e-10);
        assert!((c[1] - 0.5 / 3.0).abs() < 1e-10);
        assert!(inverse_roots(&c).iter().all(|r| r.norm() < 1.0));
    }

    #[test]
    fn integrated_polynomial() {
        // (1 − 0.5L)(1 − L) = 1 − 1.5L + 0.5L²
        assert_eq!(integrated_ar(&[0.5], 1), vec![1.5, -0.5]);
        assert_eq!(integrated_ar(&[], 2), vec![2.0, -1.0]);
    }

    #[test]
    fn psi_of_random_walk_and_ar1() {
        assert_eq!(psi_weights(&[1.0], &[], 4), vec![1.0; 4]);
        let p = psi_weights(&[0.5], &[0.3], 3);
        assert!((p[1] - 0.8).abs() < 1e-15);
        assert!((p[2] - 0.4).abs() < 1e-15);
    }
}
