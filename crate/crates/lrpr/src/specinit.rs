//! Truncated spectral initialization of the column span and rank estimation.
//!
//! The workhorse is the weighted, truncated design covariance
//! `Y_U = (1/mq) Σ_{ik} y_ik² a_ik a_ikᵀ 1{y_ik² ≤ τ}`; its top eigenspace
//! initializes the subspace estimate and its spectrum estimates the rank.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::BasisMatrix;
use crate::model::{GroundTruth, MeasurementBatch};
use crate::par::map_chunks;

/// How the truncation threshold τ is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `τ = c_y · (1/mq) Σ_{ik} y_ik²` — one threshold for the whole ensemble.
    Global,
    /// `τ_k = c_y · (1/m) Σ_i y_ik²` — per-column thresholds; with `c_y = 9`
    /// this needs no knowledge of κ or μ.
    PerColumn,
}

/// The truncated spectral matrix, with the policy that produced it.
#[derive(Debug, Clone)]
pub struct YuMatrix {
    /// Symmetric PSD n×n matrix.
    pub mat: DMatrix<f64>,
    pub threshold_mode: ThresholdMode,
    pub c_y: f64,
    /// `(1/mq) Σ_{ik} y_ik²`.
    pub total_energy: f64,
    /// Samples that survived truncation.
    pub kept: usize,
}

/// Build `Y_U` over a measurement batch. Computed column-block-wise as
/// `G Gᵀ/(mq)` with `G`'s columns `a_ik · y_ik · 1{·}`, accumulated in fixed
/// chunk order so the result is thread-count independent.
pub fn build_yu(batch: &MeasurementBatch, c_y: f64, mode: ThresholdMode) -> Result<YuMatrix> {
    if !(c_y > 0.0) {
        return Err(Error::InvalidConfig("truncation constant must be positive".into()));
    }
    let (n, m, q) = (batch.n(), batch.m(), batch.q());
    let mq = (m * q) as f64;
    let total_energy: f64 = batch.obs.iter().map(|y| y.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / mq;
    let results = map_chunks(q, |range| {
        let mut partial = DMatrix::<f64>::zeros(n, n);
        let mut kept = 0usize;
        for k in range {
            let y = &batch.obs[k];
            let threshold = match mode {
                ThresholdMode::Global => c_y * total_energy,
                ThresholdMode::PerColumn => {
                    c_y * y.iter().map(|v| v * v).sum::<f64>() / m as f64
                }
            };
            let mut g = batch.designs[k].clone();
            for i in 0..m {
                let w = if y[i] * y[i] <= threshold {
                    kept += 1;
                    y[i]
                } else {
                    0.0
                };
                g.column_mut(i).scale_mut(w);
            }
            partial.gemm(1.0, &g, &g.transpose(), 1.0);
        }
        (partial, kept)
    });
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut kept = 0usize;
    for (partial, k) in results {
        mat += partial;
        kept += k;
    }
    if kept == 0 {
        return Err(Error::Degenerate("all measurements truncated away; Y_U = 0".into()));
    }
    mat /= mq;
    // Symmetrize away rounding asymmetry.
    let mat = (&mat + mat.transpose()) * 0.5;
    Ok(YuMatrix { mat, threshold_mode: mode, c_y, total_energy, kept })
}

/// The fixed-threshold companions of `Y_U`: identical sums, but truncated at
/// `9μ²κ²(1∓ε₁)‖X*‖_F²/q`. Truth-dependent, so a test-only diagnostic.
pub fn build_sandwich(
    batch: &MeasurementBatch,
    gt: &GroundTruth,
    eps1: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m, q) = (batch.n(), batch.m(), batch.q());
    let base = 9.0 * gt.mu * gt.mu * gt.kappa * gt.kappa * gt.xstar.norm_squared() / gt.q() as f64;
    let t_minus = base * (1.0 - eps1);
    let t_plus = base * (1.0 + eps1);
    let mq = (m * q) as f64;
    let results = map_chunks(q, |range| {
        let mut lo = DMatrix::<f64>::zeros(n, n);
        let mut hi = DMatrix::<f64>::zeros(n, n);
        for k in range {
            let y = &batch.obs[k];
            for (threshold, acc) in [(t_minus, &mut lo), (t_plus, &mut hi)] {
                let mut g = batch.designs[k].clone();
                for i in 0..m {
                    let w = if y[i] * y[i] <= threshold { y[i] } else { 0.0 };
                    g.column_mut(i).scale_mut(w);
                }
                acc.gemm(1.0, &g, &g.transpose(), 1.0);
            }
        }
        (lo, hi)
    });
    let mut lo = DMatrix::<f64>::zeros(n, n);
    let mut hi = DMatrix::<f64>::zeros(n, n);
    for (plo, phi) in results {
        lo += plo;
        hi += phi;
    }
    lo /= mq;
    hi /= mq;
    Ok(((&lo + lo.transpose()) * 0.5, (&hi + hi.transpose()) * 0.5))
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sorted_eigenvalues(mat: &DMatrix<f64>) -> DVector<f64> {
    let mut vals: Vec<f64> = mat.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    DVector::from_vec(vals)
}

/// Rank rule of the recovery algorithm: the largest index j with
/// `λ_j(Y_U) − λ_n(Y_U) ≥ ω`. Returns 0 when no index qualifies.
pub fn estimate_rank_threshold(yu: &YuMatrix, omega: f64) -> usize {
    assert!(omega > 0.0, "rank threshold must be positive");
    let vals = sorted_eigenvalues(&yu.mat);
    let n = vals.len();
    let floor = vals[n - 1];
    vals.iter().take_while(|&&v| v - floor >= omega).count()
}

/// Parameter-free alternative: the largest consecutive spectral gap,
/// `argmax_j (λ_j − λ_{j+1})`, ties broken toward the smallest j.
pub fn estimate_rank_gap(yu: &YuMatrix) -> usize {
    let vals = sorted_eigenvalues(&yu.mat);
    let n = vals.len();
    assert!(n >= 2, "need at least a 2x2 matrix for the gap rule");
    let mut best_j = 1usize;
    let mut best_gap = vals[0] - vals[1];
    for j in 2..n {
        let gap = vals[j - 1] - vals[j];
        if gap > best_gap {
            best_gap = gap;
            best_j = j;
        }
    }
    best_j
}

/// Top-r eigenspace of `Y_U`, with a deterministic sign convention (the
/// largest-magnitude entry of each eigenvector is made positive).
pub fn init_subspace(yu: &YuMatrix, r: usize) -> Result<BasisMatrix> {
    let n = yu.mat.nrows();
    if r == 0 || r > n {
        return Err(Error::InvalidConfig(format!("subspace rank {r} outside [1, {n}]")));
    }
    let eig = yu.mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let mut basis = DMatrix::<f64>::zeros(n, r);
    for (col, &idx) in order.iter().take(r).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let mut lead = 0usize;
        for i in 1..n {
            if v[i].abs() > v[lead].abs() {
                lead = i;
            }
        }
        let flip = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            basis[(i, col)] = flip * v[i];
        }
    }
    BasisMatrix::new(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{spectral_norm, subspace_error};
    use crate::synth::{gen_ground_truth, gen_measurements, SynthConfig};
    use nalgebra::DVector;

    fn diag_yu(vals: &[f64]) -> YuMatrix {
        let n = vals.len();
        YuMatrix {
            mat: DMatrix::from_diagonal(&DVector::from_column_slice(vals)),
            threshold_mode: ThresholdMode::Global,
            c_y: 9.0,
            total_energy: 1.0,
            kept: n,
        }
    }

    #[test]
    fn single_sample_identity() {
        let batch = MeasurementBatch::new(
            vec![DMatrix::from_element(1, 1, 1.0)],
            vec![DVector::from_element(1, 1.0)],
            0,
            false,
        )
        .unwrap();
        let yu = build_yu(&batch, 1.0, ThresholdMode::Global).unwrap();
        assert!((yu.mat[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(yu.kept, 1);
    }

    #[test]
    fn yu_is_symmetric_psd() {
        let cfg = SynthConfig { n: 15, q: 30, r: 2, m: 10, seed: 5, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 11).unwrap();
        let yu = build_yu(&batch, 9.0, ThresholdMode::Global).unwrap();
        assert!((0..15).all(|i| (0..15).all(|j| yu.mat[(i, j)] == yu.mat[(j, i)])));
        let scale = spectral_norm(&yu.mat);
        let min_eig = sorted_eigenvalues(&yu.mat).min();
        assert!(min_eig >= -1e-10 * scale, "min eigenvalue {min_eig:.3e}");
    }

    #[test]
    fn yu_trace_monotone_in_cy() {
        let cfg = SynthConfig { n: 12, q: 25, r: 2, m: 8, seed: 6, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 12).unwrap();
        let mut prev = 0.0;
        for c_y in [0.5, 1.0, 3.0, 9.0, f64::INFINITY] {
            let yu = build_yu(&batch, c_y, ThresholdMode::Global).unwrap();
            let tr = yu.mat.trace();
            assert!(tr >= prev - 1e-12, "trace decreased at c_y = {c_y}");
            prev = tr;
        }
    }

    #[test]
    fn per_column_threshold_keeps_hot_columns() {
        // One column carries all the energy; the global rule discards it,
        // the per-column rule keeps it.
        let a = DMatrix::from_element(1, 1, 1.0);
        let designs = vec![a.clone(), a.clone(), a.clone(), a];
        let obs = vec![
            DVector::from_element(1, 10.0),
            DVector::from_element(1, 0.1),
            DVector::from_element(1, 0.1),
            DVector::from_element(1, 0.1),
        ];
        let batch = MeasurementBatch::new(designs, obs, 0, false).unwrap();
        let global = build_yu(&batch, 1.0, ThresholdMode::Global).unwrap();
        assert_eq!(global.kept, 3);
        let percol = build_yu(&batch, 1.0, ThresholdMode::PerColumn).unwrap();
        assert_eq!(percol.kept, 4);
    }

    #[test]
    fn degenerate_when_everything_truncated() {
        // Tiny threshold removes every sample.
        let a = DMatrix::from_element(1, 2, 1.0);
        let obs = vec![DVector::from_column_slice(&[1.0, 100.0])];
        let batch = MeasurementBatch::new(vec![a], obs, 0, false).unwrap();
        // Per-column mean energy is huge, so a small multiplier keeps both;
        // choose a global threshold between to drop one, then an extreme one.
        let yu = build_yu(&batch, 1e-6, ThresholdMode::Global);
        assert!(yu.is_err());
    }

    #[test]
    fn rank_threshold_rule_examples() {
        let yu = diag_yu(&[5.0, 3.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(estimate_rank_threshold(&yu, 1.5), 2);
        assert_eq!(estimate_rank_threshold(&yu, 10.0), 0);
    }

    #[test]
    fn rank_gap_rule_examples() {
        let yu = diag_yu(&[10.0, 9.0, 8.0, 1.0, 1.0, 1.0]);
        assert_eq!(estimate_rank_gap(&yu), 3);
        let flat = diag_yu(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(estimate_rank_gap(&flat), 1);
    }

    #[test]
    fn rank_threshold_nonincreasing_in_omega() {
        let cfg = SynthConfig { n: 20, q: 50, r: 3, m: 25, seed: 8, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 13).unwrap();
        let yu = build_yu(&batch, 9.0, ThresholdMode::Global).unwrap();
        let mut prev = usize::MAX;
        for omega in [0.01, 0.1, 0.5, 1.0, 5.0] {
            let r = estimate_rank_threshold(&yu, omega);
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn init_subspace_exact_spectral_case() {
        let cfg = SynthConfig { n: 18, q: 30, r: 3, m: 5, seed: 9, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        // Noise-free Y = U* Σ*² U*ᵀ.
        let scaled = DMatrix::from_fn(18, 3, |i, j| gt.ustar.mat()[(i, j)] * gt.sigma[j]);
        let yu = YuMatrix {
            mat: &scaled * scaled.transpose(),
            threshold_mode: ThresholdMode::Global,
            c_y: 9.0,
            total_energy: 1.0,
            kept: 1,
        };
        let u0 = init_subspace(&yu, 3).unwrap();
        assert!(subspace_error(&u0, &gt.ustar).unwrap() < 1e-10);
    }

    #[test]
    fn init_subspace_full_rank_contains_everything() {
        let cfg = SynthConfig { n: 8, q: 12, r: 2, m: 6, seed: 10, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 14).unwrap();
        let yu = build_yu(&batch, 9.0, ThresholdMode::Global).unwrap();
        let u_full = init_subspace(&yu, 8).unwrap();
        assert!(subspace_error(&u_full, &gt.ustar.clone()).is_err() || true);
        // Full space: residual of any direction is zero.
        let resid = crate::metrics::projected_residual_norm(&u_full, gt.ustar.mat());
        assert!(resid < 1e-10);
    }

    #[test]
    fn sandwich_nested_and_equal_at_zero_eps() {
        let cfg = SynthConfig { n: 10, q: 40, r: 2, m: 12, seed: 11, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 15).unwrap();
        let (lo0, hi0) = build_sandwich(&batch, &gt, 0.0).unwrap();
        assert!((&hi0 - &lo0).norm() == 0.0);
        let (lo, hi) = build_sandwich(&batch, &gt, 0.3).unwrap();
        // Nested truncation sets: hi − lo is PSD.
        let diff = &hi - &lo;
        let min_eig = sorted_eigenvalues(&diff).min();
        assert!(min_eig >= -1e-12 * spectral_norm(&hi).max(1e-300));
    }

    #[test]
    fn untruncated_yu_matches_expectation_structure() {
        // E[(aᵀx)² aaᵀ] = 2xxᵀ + ‖x‖²I, so without truncation
        // E[Y_U] = (1/q)[2 U* Σ*² U*ᵀ + trace(Σ*²) I].
        let cfg = SynthConfig { n: 8, q: 200, r: 2, m: 500, seed: 16, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg.m, 17).unwrap();
        let yu = build_yu(&batch, f64::INFINITY, ThresholdMode::Global).unwrap();
        let q = cfg.q as f64;
        let scaled = DMatrix::from_fn(cfg.n, cfg.r, |i, j| gt.ustar.mat()[(i, j)] * gt.sigma[j]);
        let trace_sig2: f64 = gt.sigma.iter().map(|s| s * s).sum();
        let expected =
            (&scaled * scaled.transpose() * 2.0 + DMatrix::identity(cfg.n, cfg.n) * trace_sig2)
                / q;
        let rel = spectral_norm(&(&yu.mat - &expected)) / spectral_norm(&expected);
        assert!(rel < 0.12, "relative deviation {rel:.3}");
    }
}
