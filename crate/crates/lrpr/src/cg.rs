//! Conjugate gradient for symmetric PSD operators acting on n×r matrices.
//! The operator is applied matrix-free; inner products are Frobenius.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub converged: bool,
    pub iters: usize,
    pub rel_residual: f64,
}

/// Solve `op(X) = rhs` from a zero start, stopping at
/// `‖rhs − op(X)‖_F ≤ tol · ‖rhs‖_F` or `max_iters`.
pub fn cg_solve<F>(op: F, rhs: &DMatrix<f64>, tol: f64, max_iters: usize) -> (DMatrix<f64>, CgReport)
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let rhs_norm = rhs.norm();
    let mut x = DMatrix::zeros(rhs.nrows(), rhs.ncols());
    if rhs_norm == 0.0 {
        return (x, CgReport { converged: true, iters: 0, rel_residual: 0.0 });
    }
    let mut resid = rhs.clone();
    let mut dir = resid.clone();
    let mut rs_old = resid.dot(&resid);
    let mut iters = 0usize;
    while iters < max_iters {
        let op_dir = op(&dir);
        let denom = dir.dot(&op_dir);
        if denom.abs() < 1e-300 {
            break;
        }
        let alpha = rs_old / denom;
        x += &dir * alpha;
        resid -= &op_dir * alpha;
        let rs_new = resid.dot(&resid);
        iters += 1;
        if rs_new.sqrt() <= tol * rhs_norm {
            return (
                x,
                CgReport { converged: true, iters, rel_residual: rs_new.sqrt() / rhs_norm },
            );
        }
        dir = &resid + &dir * (rs_new / rs_old);
        rs_old = rs_new;
    }
    let rel = resid.norm() / rhs_norm;
    (x, CgReport { converged: rel <= tol, iters, rel_residual: rel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn solves_spd_system() {
        let mut rng = stream_rng(2, 70, 0);
        let g = gaussian_matrix(&mut rng, 12, 12);
        let spd = &g * g.transpose() + DMatrix::identity(12, 12) * 12.0;
        let truth = gaussian_matrix(&mut rng, 12, 3);
        let rhs = &spd * &truth;
        let (x, report) = cg_solve(|w| &spd * w, &rhs, 1e-12, 200);
        assert!(report.converged);
        assert!((x - truth).norm() < 1e-8);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let (x, report) = cg_solve(|w| w.clone(), &DMatrix::zeros(5, 2), 1e-10, 10);
        assert!(report.converged);
        assert_eq!(report.iters, 0);
        assert_eq!(x, DMatrix::zeros(5, 2));
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = stream_rng(3, 70, 1);
        let g = gaussian_matrix(&mut rng, 30, 30);
        let spd = &g * g.transpose() + DMatrix::identity(30, 30) * 1e-6;
        let rhs = gaussian_matrix(&mut rng, 30, 1);
        let (_, report) = cg_solve(|w| &spd * w, &rhs, 1e-14, 2);
        assert!(!report.converged);
        assert_eq!(report.iters, 2);
    }
}
