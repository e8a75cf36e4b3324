//! Action of a matrix exponential on a thin block, by scaling and squaring
//! with a Taylor series. Only the action `exp(sM)·V` is ever formed, so the
//! cost stays at O(n²·cols) per Taylor term.

use nalgebra::DMatrix;

const TAYLOR_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 64;

/// Compute `exp(s·M)·V` to roughly `TAYLOR_TOL` relative accuracy.
pub fn expm_action(m: &DMatrix<f64>, s: f64, v: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols(), "exponential needs a square matrix");
    assert_eq!(m.nrows(), v.nrows(), "dimension mismatch in expm_action");
    // 1-norm upper-bounds the spectral norm; scale until ‖sM/2^j‖ ≤ 0.5.
    let norm1 = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        * s.abs();
    let mut steps = 1u32;
    while (norm1 / steps as f64) > 0.5 && steps < 1 << 30 {
        steps *= 2;
    }
    let scale = s / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        out = taylor_apply(m, scale, &out);
    }
    out
}

fn taylor_apply(m: &DMatrix<f64>, scale: f64, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sum = v.clone();
    let mut term = v.clone();
    for j in 1..=MAX_TERMS {
        term = (m * &term) * (scale / j as f64);
        sum += &term;
        if term.amax() <= TAYLOR_TOL * sum.amax() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};

    fn skew(seed: u64, n: usize) -> DMatrix<f64> {
        let g = gaussian_matrix(&mut stream_rng(seed, 44, 0), n, n);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                m[(i, j)] = g[(i, j)];
                m[(j, i)] = -g[(i, j)];
            }
        }
        m
    }

    #[test]
    fn exponential_of_skew_is_orthogonal() {
        let n = 30;
        let m = skew(9, n);
        let q = expm_action(&m, -0.7, &DMatrix::identity(n, n));
        let dev = (q.tr_mul(&q) - DMatrix::identity(n, n)).norm();
        assert!(dev < 1e-8, "orthogonality deviation {dev:.3e}");
    }

    #[test]
    fn matches_scalar_exponential() {
        // 2x2 rotation generator: exp(θJ) is a rotation by θ.
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let theta = 1.234f64;
        let q = expm_action(&j, theta, &DMatrix::identity(2, 2));
        assert!((q[(0, 0)] - theta.cos()).abs() < 1e-12);
        assert!((q[(1, 0)] - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn zero_scale_is_identity() {
        let m = skew(3, 8);
        let v = gaussian_matrix(&mut stream_rng(4, 44, 1), 8, 3);
        let out = expm_action(&m, 0.0, &v);
        assert!((out - &v).norm() < 1e-14);
    }
}
