//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff below which a direction is treated as null.
pub const RANK_TOL: f64 = 1e-8;

/// Largest singular value. Zero for an empty or all-zero matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Moore-Penrose pseudoinverse with singular values below
/// `RANK_TOL * sigma_max` dropped. `pinv(0) = 0`.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    if s_max == 0.0 {
        return DMatrix::zeros(c, r);
    }
    let cutoff = RANK_TOL * s_max;
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let mut out = DMatrix::zeros(c, r);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            // out += v_k u_k^T / s
            let v = v_t.row(k).transpose();
            let u = u.column(k);
            out += (v * u.transpose()) / s;
        }
    }
    out
}

/// True when the smallest singular value exceeds `RANK_TOL` times the largest.
pub fn is_well_conditioned(a: &DMatrix<f64>) -> bool {
    if a.is_empty() {
        return false;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
    let min = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    max > 0.0 && min > RANK_TOL * max
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min_sym(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x))
}

pub fn outer(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

/// `‖a - b‖ / ‖b‖` in spectral norm, falling back to the absolute
/// difference when `b` is zero.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let num = spectral_norm(&(a - b));
    let den = spectral_norm(b);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
