//! The three distances everything is measured with: subspace error (sine of
//! the largest principal angle), sign-invariant vector distance, and its
//! column-wise matrix extension.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mat::BasisMatrix;

/// `SE(U₁, U₂) = ‖(I − U₁U₁ᵀ)U₂‖₂`, the sine of the largest principal angle.
///
/// One-sided by definition; symmetric in its arguments only up to numerical
/// tolerance when both spans have the same dimension.
pub fn subspace_error(u1: &BasisMatrix, u2: &BasisMatrix) -> Result<f64> {
    if u1.nrows() != u2.nrows() || u1.ncols() != u2.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "subspace_error: {}x{} vs {}x{}",
            u1.nrows(),
            u1.ncols(),
            u2.nrows(),
            u2.ncols()
        )));
    }
    Ok(projected_residual_norm(u1, u2.mat()))
}

/// `‖(I − U Uᵀ) M‖₂` without forming the n×n projector.
pub fn projected_residual_norm(u: &BasisMatrix, m: &DMatrix<f64>) -> f64 {
    let coeff = u.mat().tr_mul(m);
    let resid = m - u.mat() * coeff;
    spectral_norm(&resid)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    sv.max()
}

/// Sign-invariant distance `min(‖x − x̂‖, ‖x + x̂‖)` between real vectors.
pub fn phase_dist(x: &DVector<f64>, xhat: &DVector<f64>) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::DimensionMismatch(format!(
            "phase_dist: lengths {} vs {}",
            x.len(),
            xhat.len()
        )));
    }
    let minus = (x - xhat).norm();
    let plus = (x + xhat).norm();
    Ok(minus.min(plus))
}

/// Column-wise sign-invariant distance: `sqrt(Σ_k phase_dist(x_k, x̂_k)²)`.
pub fn mat_dist(xhat: &DMatrix<f64>, xstar: &DMatrix<f64>) -> Result<f64> {
    if xhat.shape() != xstar.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mat_dist: {:?} vs {:?}",
            xhat.shape(),
            xstar.shape()
        )));
    }
    let mut total = 0.0;
    for k in 0..xhat.ncols() {
        let a = xhat.column(k);
        let b = xstar.column(k);
        let minus: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
        let plus: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p + q) * (p + q)).sum();
        total += minus.min(plus);
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::orthonormalize;
    use crate::rng::{gaussian_matrix, gaussian_vector, stream_rng};
    use nalgebra::{DMatrix, DVector};

    fn random_basis(seed: u64, n: usize, r: usize) -> BasisMatrix {
        let m = gaussian_matrix(&mut stream_rng(seed, 7, 0), n, r);
        orthonormalize(&m).unwrap().0
    }

    #[test]
    fn subspace_error_identity_is_zero() {
        let u = random_basis(3, 6, 2);
        assert!(subspace_error(&u, &u).unwrap() < 1e-12);
    }

    #[test]
    fn subspace_error_orthogonal_spans() {
        let e1 = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let e2 = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert!((subspace_error(&e1, &e2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subspace_error_plane_rotation() {
        let theta = 0.3f64;
        let e1 = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let v = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]))
            .unwrap();
        assert!((subspace_error(&e1, &v).unwrap() - theta.sin().abs()).abs() < 1e-12);
    }

    #[test]
    fn subspace_error_rejects_shape_mismatch() {
        let a = random_basis(1, 5, 2);
        let b = random_basis(2, 6, 2);
        assert!(subspace_error(&a, &b).is_err());
    }

    #[test]
    fn phase_dist_sign_invariance() {
        let x = gaussian_vector(&mut stream_rng(5, 7, 1), 9);
        assert!(phase_dist(&x, &x).unwrap() < 1e-15);
        assert!(phase_dist(&x, &(-&x)).unwrap() < 1e-15);
    }

    #[test]
    fn phase_dist_both_signs_equal() {
        let x = DVector::from_column_slice(&[3.0, 0.0]);
        let y = DVector::from_column_slice(&[0.0, 4.0]);
        assert!((phase_dist(&x, &y).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mat_dist_euclidean_combination() {
        // Per-column distances 3 and 4 combine to 5.
        let x = DMatrix::from_column_slice(1, 2, &[0.0, 0.0]);
        let y = DMatrix::from_column_slice(1, 2, &[3.0, 4.0]);
        assert!((mat_dist(&x, &y).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mat_dist_columnwise_flips_are_free() {
        let x = gaussian_matrix(&mut stream_rng(8, 7, 2), 4, 6);
        let mut flipped = x.clone();
        for k in [1usize, 3, 4] {
            let mut col = flipped.column_mut(k);
            col.neg_mut();
        }
        assert!(mat_dist(&flipped, &x).unwrap() < 1e-15);
    }
}
