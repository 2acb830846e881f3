//! Small dense least-squares helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

/// Ordinary least squares with classical standard errors.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub rss: f64,
    pub nobs: usize,
}

/// Rows of `x` are observations. Returns `None` when the design is rank
/// deficient or under-determined.
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Option<OlsFit> {
    let (n, k) = x.shape();
    if n <= k || y.len() != n {
        return None;
    }
    let (coef, rinv) = solve_qr(x, y)?;
    let fitted = x * DVector::from_column_slice(&coef);
    let rss: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let s2 = rss / (n - k) as f64;
    // (X'X)^-1 = R^-1 R^-T
    let xtx_inv = &rinv * rinv.transpose();
    let se = (0..k).map(|j| (s2 * xtx_inv[(j, j)]).max(0.0).sqrt()).collect();
    Some(OlsFit {
        coef: coef.to_vec(),
        se,
        rss,
        nobs: n,
    })
}

/// Least-squares coefficients only.
pub fn lstsq(x: &DMatrix<f64>, y: &[f64]) -> Option<Vec<f64>> {
    let (n, k) = x.shape();
    if n < k || y.len() != n {
        return None;
    }
    solve_qr(x, y).map(|(c, _)| c)
}

fn solve_qr(x: &DMatrix<f64>, y: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let k = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= scale * 1e-11) {
        return None;
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = r.solve_upper_triangular(&qty)?;
    let rinv = r.try_inverse()?;
    if coef.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some((coef.iter().copied().collect(), rinv))
}

/// Builds a row-major design matrix.
pub fn design(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}
