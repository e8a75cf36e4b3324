//! Dense-matrix helpers and the orthonormal-basis newtype.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Max-norm tolerance on `QᵀQ − I` for a valid basis matrix.
pub const ORTHO_TOL: f64 = 1e-10;

/// Relative tolerance below which an R diagonal entry marks rank deficiency.
pub const RANK_TOL: f64 = 1e-12;

/// Reject matrices containing NaN or infinities.
pub fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NotFinite(what.to_string()))
    }
}

/// Validated dense matrix from row-major entries.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<DMatrix<f64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig("matrix dimensions must be positive".into()));
    }
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m, "matrix entries")?;
    Ok(m)
}

/// Tall matrix with orthonormal columns.
///
/// The constructor enforces `‖QᵀQ − I‖_max ≤ 1e-10`; everything downstream
/// (subspace errors, projections, QR re-orthonormalization) relies on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix(DMatrix<f64>);

impl BasisMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() < mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "basis matrix must be tall, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_finite(&mat, "basis matrix")?;
        let gram = mat.tr_mul(&mat);
        let dev = (gram - DMatrix::identity(mat.ncols(), mat.ncols()))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if dev > ORTHO_TOL {
            return Err(Error::InvalidConfig(format!(
                "columns not orthonormal: max |QᵀQ - I| = {dev:.3e}"
            )));
        }
        Ok(BasisMatrix(mat))
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

impl std::ops::Deref for BasisMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl AsRef<DMatrix<f64>> for BasisMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Thin QR with a fixed sign convention.
///
/// Returns `(Q, R)` with `m = Q R`, `R` upper triangular with strictly
/// positive diagonal, so repeated runs are bit-comparable. Fails if the
/// smallest diagonal of `R` falls below `RANK_TOL` times the largest.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<(BasisMatrix, DMatrix<f64>)> {
    let (n, r) = (m.nrows(), m.ncols());
    if n < r {
        return Err(Error::DimensionMismatch(format!(
            "need a tall matrix to orthonormalize, got {n}x{r}"
        )));
    }
    check_finite(m, "orthonormalize input")?;
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut rr = qr.r();
    // Flip signs so every R diagonal is positive.
    for i in 0..r {
        if rr[(i, i)] < 0.0 {
            for j in i..r {
                rr[(i, j)] = -rr[(i, j)];
            }
            let mut col = q.column_mut(i);
            col.neg_mut();
        }
    }
    let max_diag = (0..r).fold(0.0f64, |acc, i| acc.max(rr[(i, i)]));
    for i in 0..r {
        if rr[(i, i)] <= RANK_TOL * max_diag {
            return Err(Error::RankDeficient { index: i, value: rr[(i, i)] });
        }
    }
    Ok((BasisMatrix::new(q)?, rr))
}

/// Orthonormal basis of the column span, dropping near-dependent columns.
///
/// Column-pivoted QR; columns whose pivot falls below `tol` times the largest
/// pivot are discarded. Used for union bases where duplicates are expected.
pub fn orthonormalize_trunc(m: &DMatrix<f64>, tol: f64) -> Result<BasisMatrix> {
    check_finite(m, "orthonormalize_trunc input")?;
    let qr = m.clone().col_piv_qr();
    let rr = qr.r();
    let q = qr.q();
    let p = rr.nrows().min(rr.ncols());
    let max_diag = (0..p).fold(0.0f64, |acc, i| acc.max(rr[(i, i)].abs()));
    if max_diag == 0.0 {
        return Err(Error::Degenerate("zero matrix has no column span".into()));
    }
    let keep = (0..p).take_while(|&i| rr[(i, i)].abs() > tol * max_diag).count();
    BasisMatrix::new(q.columns(0, keep).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn orthonormalize_identity_passthrough() {
        let eye = DMatrix::<f64>::identity(4, 3);
        let (q, r) = orthonormalize(&eye).unwrap();
        assert!((q.mat() - &eye).norm() < 1e-12);
        assert!((r - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_scaled_identity() {
        let m = DMatrix::<f64>::identity(5, 2) * 2.0;
        let (q, r) = orthonormalize(&m).unwrap();
        assert!((q.mat() - DMatrix::identity(5, 2)).norm() < 1e-12);
        assert!((r - DMatrix::identity(2, 2) * 2.0).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_reconstructs_and_is_orthonormal() {
        let mut rng = crate::rng::stream_rng(11, 99, 0);
        let m = crate::rng::gaussian_matrix(&mut rng, 5, 3);
        let (q, r) = orthonormalize(&m).unwrap();
        assert!((q.mat() * &r - &m).norm() / m.norm() < 1e-10);
        let gram = q.mat().tr_mul(q.mat());
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-10);
        for i in 0..3 {
            assert!(r[(i, i)] > 0.0);
        }
    }

    #[test]
    fn orthonormalize_rejects_rank_deficient() {
        let mut m = DMatrix::<f64>::zeros(4, 2);
        m[(0, 0)] = 1.0;
        m[(0, 1)] = 1.0; // second column a copy of the first
        assert!(matches!(
            orthonormalize(&m),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn trunc_drops_duplicate_directions() {
        let mut m = DMatrix::<f64>::zeros(5, 4);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 2.0;
        m[(0, 2)] = 1.0; // duplicate of column 0
        m[(2, 3)] = 0.5;
        let q = orthonormalize_trunc(&m, 1e-8).unwrap();
        assert_eq!(q.ncols(), 3);
    }

    #[test]
    fn basis_matrix_rejects_non_orthonormal() {
        let m = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(BasisMatrix::new(m).is_err());
    }

    #[test]
    fn matrix_from_rows_rejects_nan() {
        assert!(matches!(
            matrix_from_rows(1, 2, &[1.0, f64::NAN]),
            Err(Error::NotFinite(_))
        ));
    }
}
