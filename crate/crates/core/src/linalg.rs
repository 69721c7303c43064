//! Thin helpers over nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Default relative threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel * σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rel * smax).count(),
        _ => 0,
    }
}

/// Minimum-norm least-squares solution of `a x = b`, with the numerical rank.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return (DVector::zeros(a.ncols()), 0);
    }
    let eps = rel * smax;
    let rank = svd.singular_values.iter().filter(|&&v| v > eps).count();
    let x = svd
        .solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (x, rank)
}

/// `max |a x - b|`.
pub fn max_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).amax()
}
