//! Synthetic problem generation: planted low-rank truths, column-wise
//! Gaussian phaseless measurements, controlled subspace rotations for
//! tracking streams, and sample-splitting partitions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm_action;
use crate::mat::{orthonormalize, BasisMatrix};
use crate::metrics::subspace_error;
use crate::model::{GroundTruth, MeasurementBatch};
use crate::par::map_indexed;
use crate::rng::{gaussian_matrix, gaussian_vector, stream, stream_rng};

/// Dimensions and seeding for one synthetic instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    /// Measurements per column.
    pub m: usize,
    pub seed: u64,
    /// Sample splitting: when `Some(t)`, `m` is treated as `m_tot` and split
    /// into one initialization set plus `2t` disjoint update sets.
    pub split: Option<usize>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.n.min(self.q) {
            return Err(Error::InvalidConfig(format!(
                "rank {} must be in [1, min(n, q)] = [1, {}]",
                self.r,
                self.n.min(self.q)
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("need at least one measurement per column".into()));
        }
        Ok(())
    }
}

/// Plant `X* = U*₀ B̃*` with Gaussian factors, then store the re-SVD'd form so
/// κ and μ refer to the SVD factors.
pub fn gen_ground_truth(cfg: &SynthConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let raw = gaussian_matrix(&mut stream_rng(cfg.seed, stream::USTAR, 0), cfg.n, cfg.r);
    let (u0, _) = orthonormalize(&raw)?;
    let mut btilde = DMatrix::zeros(cfg.r, cfg.q);
    for k in 0..cfg.q {
        let col = gaussian_vector(&mut stream_rng(cfg.seed, stream::BTILDE, k as u64), cfg.r);
        btilde.set_column(k, &col);
    }
    // SVD of the small factor gives the SVD of X* = U*₀ B̃* directly.
    let svd = btilde.clone().svd(true, true);
    let ub = svd.u.as_ref().expect("svd with u requested");
    let vt = svd.v_t.as_ref().expect("svd with v requested");
    let ustar = BasisMatrix::new(u0.mat() * ub)?;
    GroundTruth::from_factors(ustar, svd.singular_values.clone(), vt.clone())
}

/// Phaseless measurements `y_k = |A_kᵀ x*_k|` with a fresh i.i.d. Gaussian
/// design per column. Column `k` draws from stream `column_offset + k`, so any
/// sub-batch can be regenerated independently.
pub fn gen_measurements(xstar: &DMatrix<f64>, m: usize, seed: u64) -> Result<MeasurementBatch> {
    gen_measurements_at(xstar, m, seed, 0, false)
}

/// Linear (phase-known) measurements `y_k = A_kᵀ x*_k`.
pub fn gen_linear_measurements(
    xstar: &DMatrix<f64>,
    m: usize,
    seed: u64,
) -> Result<MeasurementBatch> {
    gen_measurements_at(xstar, m, seed, 0, true)
}

pub fn gen_measurements_at(
    xstar: &DMatrix<f64>,
    m: usize,
    seed: u64,
    column_offset: usize,
    signed: bool,
) -> Result<MeasurementBatch> {
    if m == 0 {
        return Err(Error::InvalidConfig("need at least one measurement per column".into()));
    }
    let n = xstar.nrows();
    let q = xstar.ncols();
    let cols: Vec<(DMatrix<f64>, DVector<f64>)> = map_indexed(q, |k| {
        let mut rng = stream_rng(seed, stream::MEASUREMENT, (column_offset + k) as u64);
        let a = gaussian_matrix(&mut rng, n, m);
        let mut y = a.tr_mul(&xstar.column(k));
        if !signed {
            y.apply(|v| *v = v.abs());
        }
        (a, y)
    });
    let (designs, obs) = cols.into_iter().unzip();
    MeasurementBatch::new(designs, obs, column_offset, signed)
}

fn skew_generator(seed: u64, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(&mut stream_rng(seed, stream::ROTATION, 0), n, n);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = g[(i, j)];
            m[(j, i)] = -g[(i, j)];
        }
    }
    m
}

/// Rotate a subspace by `exp(−γM)` with a seeded skew-symmetric generator.
pub fn rotate_subspace(u: &BasisMatrix, gamma: f64, seed: u64) -> Result<BasisMatrix> {
    if gamma < 0.0 {
        return Err(Error::InvalidConfig("gamma must be nonnegative".into()));
    }
    let m = skew_generator(seed, u.nrows());
    let rotated = expm_action(&m, -gamma, u.mat());
    Ok(orthonormalize(&rotated)?.0)
}

/// Bisection on γ (fixed generator from `seed`) until the rotation produces
/// `SE(rotate(u, γ), u) = target_se` within 1e-3.
pub fn calibrate_gamma(u: &BasisMatrix, target_se: f64, seed: u64) -> Result<f64> {
    if !(target_se > 0.0 && target_se < 1.0) {
        return Err(Error::InvalidConfig("target subspace error must lie in (0, 1)".into()));
    }
    const TOL: f64 = 1e-3;
    const MAX_STEPS: usize = 200;
    let m = skew_generator(seed, u.nrows());
    let se_at = |gamma: f64| -> Result<f64> {
        let rotated = expm_action(&m, -gamma, u.mat());
        let (basis, _) = orthonormalize(&rotated)?;
        subspace_error(&basis, u)
    };
    let mut steps = 0usize;
    let mut lo = 0.0f64;
    let mut hi = 1e-3;
    // Grow until the target is bracketed.
    loop {
        let se = se_at(hi)?;
        steps += 1;
        if se >= target_se {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if steps >= MAX_STEPS {
            return Err(Error::NoConvergence(format!(
                "could not bracket target SE {target_se} within {MAX_STEPS} steps"
            )));
        }
    }
    while steps < MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let se = se_at(mid)?;
        steps += 1;
        if (se - target_se).abs() <= TOL {
            return Ok(mid);
        }
        if se < target_se {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!(
        "bisection did not reach |SE - {target_se}| <= {TOL} in {MAX_STEPS} steps"
    )))
}

/// Index ranges of a sample-splitting partition: one initialization block
/// followed by `2T` equal update blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePartition {
    pub init: std::ops::Range<usize>,
    pub blocks: Vec<std::ops::Range<usize>>,
}

/// Partition `m_tot` measurement indices for `t_outer` outer iterations.
///
/// Block size is `floor(m_tot / (2T + 1))`; the initialization block absorbs
/// the remainder, so the ranges tile `[0, m_tot)` exactly.
pub fn split_samples(m_tot: usize, t_outer: usize) -> Result<SamplePartition> {
    let parts = 2 * t_outer + 1;
    if m_tot < parts {
        return Err(Error::InvalidConfig(format!(
            "m_tot = {m_tot} too small to split into {parts} nonempty sets"
        )));
    }
    let block = m_tot / parts;
    let m_init = m_tot - 2 * t_outer * block;
    let mut blocks = Vec::with_capacity(2 * t_outer);
    let mut start = m_init;
    for _ in 0..2 * t_outer {
        blocks.push(start..start + block);
        start += block;
    }
    Ok(SamplePartition { init: 0..m_init, blocks })
}

/// Piecewise-constant subspace schedule for tracking streams.
#[derive(Debug, Clone)]
pub struct ChangeSchedule {
    /// Change times: column index at which each new subspace takes over.
    /// `change_times[0] = 0` marks the start of the stream.
    pub change_times: Vec<usize>,
    pub subspaces: Vec<BasisMatrix>,
    /// γ used to generate each change (0 for the initial segment).
    pub gammas: Vec<f64>,
    pub q_full: usize,
}

impl ChangeSchedule {
    /// Build a schedule: the initial subspace plus one rotated subspace per
    /// `(change_time, target_se)` pair, with γ calibrated per change.
    pub fn generate(
        n: usize,
        r: usize,
        q_full: usize,
        changes: &[(usize, f64)],
        seed: u64,
    ) -> Result<Self> {
        let raw = gaussian_matrix(&mut stream_rng(seed, stream::USTAR, 0), n, r);
        let (u0, _) = orthonormalize(&raw)?;
        let mut change_times = vec![0usize];
        let mut subspaces = vec![u0];
        let mut gammas = vec![0.0];
        let mut prev_time = 0usize;
        for (j, &(k_j, target_se)) in changes.iter().enumerate() {
            if k_j <= prev_time || k_j >= q_full {
                return Err(Error::InvalidConfig(format!(
                    "change times must be increasing and inside (0, q_full); got {k_j}"
                )));
            }
            let rot_seed = crate::rng::derive_seed(seed, stream::ROTATION, (j + 1) as u64);
            let prev = subspaces.last().unwrap();
            let gamma = calibrate_gamma(prev, target_se, rot_seed)?;
            let next = rotate_subspace(prev, gamma, rot_seed)?;
            change_times.push(k_j);
            subspaces.push(next);
            gammas.push(gamma);
            prev_time = k_j;
        }
        Ok(ChangeSchedule { change_times, subspaces, gammas, q_full })
    }

    /// The subspace active at column `k`.
    pub fn subspace_at(&self, k: usize) -> &BasisMatrix {
        let j = match self.change_times.binary_search(&k) {
            Ok(j) => j,
            Err(j) => j - 1,
        };
        &self.subspaces[j]
    }

    /// Index of the segment active at column `k`.
    pub fn segment_at(&self, k: usize) -> usize {
        match self.change_times.binary_search(&k) {
            Ok(j) => j,
            Err(j) => j - 1,
        }
    }

    /// Planted stream `x*_k = U*_(j) d̃*_k` with i.i.d. Gaussian coefficients.
    pub fn gen_stream(&self, seed: u64) -> DMatrix<f64> {
        let n = self.subspaces[0].nrows();
        let r = self.subspaces[0].ncols();
        let mut x = DMatrix::zeros(n, self.q_full);
        for k in 0..self.q_full {
            let d = gaussian_vector(&mut stream_rng(seed, stream::COEFF, k as u64), r);
            let col = self.subspace_at(k).mat() * d;
            x.set_column(k, &col);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SynthConfig {
        SynthConfig { n: 40, q: 60, r: 3, m: 20, seed: 123, split: None }
    }

    #[test]
    fn ground_truth_satisfies_invariants() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        assert_eq!(gt.n(), 40);
        assert_eq!(gt.q(), 60);
        assert_eq!(gt.rank(), 3);
        assert!(gt.kappa >= 1.0);
        assert!(gt.mu >= 1.0);
        // X* actually equals U* Σ* B*.
        let rebuilt = gt.ustar.mat() * gt.btilde();
        assert!((&rebuilt - &gt.xstar).norm() / gt.xstar.norm() < 1e-12);
    }

    #[test]
    fn ground_truth_mu_matches_direct_recomputation() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        let q = gt.q() as f64;
        let r = gt.rank() as f64;
        let max_b = (0..gt.q())
            .map(|k| gt.bstar.column(k).norm())
            .fold(0.0f64, f64::max);
        assert!((gt.mu - (q / r).sqrt() * max_b).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_kappa_near_one_at_experiment_scale() {
        let cfg = SynthConfig { n: 200, q: 400, r: 4, m: 1, seed: 7, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        assert!(gt.kappa < 2.0, "kappa = {}", gt.kappa);
        // Gaussian B̃* gives σ²/q ≈ 1 on both ends.
        let smin2 = gt.sigma_min() * gt.sigma_min() / 400.0;
        let smax2 = gt.sigma_max() * gt.sigma_max() / 400.0;
        assert!(smin2 > 0.5 && smax2 < 2.0, "σ²/q out of range: {smin2}, {smax2}");
    }

    #[test]
    fn single_column_rank_one_truth() {
        let cfg = SynthConfig { n: 10, q: 1, r: 1, m: 5, seed: 3, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        assert!((gt.xstar.norm() - gt.sigma[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_rank_too_large() {
        let cfg = SynthConfig { n: 4, q: 3, r: 4, m: 5, seed: 0, split: None };
        assert!(gen_ground_truth(&cfg).is_err());
    }

    #[test]
    fn measurements_zero_signal_zero_obs() {
        let x = DMatrix::zeros(6, 3);
        let batch = gen_measurements(&x, 8, 5).unwrap();
        for y in &batch.obs {
            assert!(y.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn measurements_are_seed_deterministic() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        let a = gen_measurements(&gt.xstar, 7, 99).unwrap();
        let b = gen_measurements(&gt.xstar, 7, 99).unwrap();
        assert_eq!(a.designs, b.designs);
        assert_eq!(a.obs, b.obs);
    }

    #[test]
    fn measurement_second_moment_matches_signal_energy() {
        // n=1: y_i = |a_i c|, so mean(y²)/c² → E[a²] = 1.
        let c = 2.5f64;
        let x = DMatrix::from_element(1, 1, c);
        let m = 100_000;
        let batch = gen_measurements(&x, m, 21).unwrap();
        let mean_sq: f64 = batch.obs[0].iter().map(|v| v * v).sum::<f64>() / m as f64;
        assert!((mean_sq / (c * c) - 1.0).abs() < 0.05);
    }

    #[test]
    fn rotate_gamma_zero_is_identity() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        let rotated = rotate_subspace(&gt.ustar, 0.0, 17).unwrap();
        assert!(subspace_error(&rotated, &gt.ustar).unwrap() < 1e-10);
    }

    #[test]
    fn calibrate_gamma_reproduces_target() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        let gamma = calibrate_gamma(&gt.ustar, 0.5, 31).unwrap();
        let rotated = rotate_subspace(&gt.ustar, gamma, 31).unwrap();
        let se = subspace_error(&rotated, &gt.ustar).unwrap();
        assert!((se - 0.5).abs() <= 1.1e-3, "se = {se}");
    }

    #[test]
    fn calibrate_gamma_monotone_below_first_peak() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        let g1 = calibrate_gamma(&gt.ustar, 0.2, 77).unwrap();
        let g2 = calibrate_gamma(&gt.ustar, 0.4, 77).unwrap();
        let g3 = calibrate_gamma(&gt.ustar, 0.6, 77).unwrap();
        assert!(g1 < g2 && g2 < g3);
    }

    #[test]
    fn calibrate_gamma_rejects_boundary_targets() {
        let gt = gen_ground_truth(&small_cfg()).unwrap();
        assert!(calibrate_gamma(&gt.ustar, 0.0, 1).is_err());
        assert!(calibrate_gamma(&gt.ustar, 1.0, 1).is_err());
    }

    #[test]
    fn split_covers_disjointly() {
        let p = split_samples(103, 5).unwrap();
        let mut covered = vec![false; 103];
        for idx in p.init.clone().chain(p.blocks.iter().flat_map(|b| b.clone())) {
            assert!(!covered[idx], "index {idx} covered twice");
            covered[idx] = true;
        }
        assert!(covered.iter().all(|&c| c));
        assert_eq!(p.blocks.len(), 10);
    }

    #[test]
    fn split_minimal_case() {
        let p = split_samples(11, 5).unwrap();
        assert_eq!(p.init, 0..1);
        assert!(p.blocks.iter().all(|b| b.len() == 1));
        assert!(split_samples(10, 5).is_err());
    }

    #[test]
    fn split_t_zero_single_block() {
        let p = split_samples(9, 0).unwrap();
        assert_eq!(p.init, 0..9);
        assert!(p.blocks.is_empty());
    }

    #[test]
    fn schedule_segments_and_stream() {
        let sched = ChangeSchedule::generate(20, 2, 100, &[(40, 0.5)], 5).unwrap();
        assert_eq!(sched.change_times, vec![0, 40]);
        assert_eq!(sched.segment_at(0), 0);
        assert_eq!(sched.segment_at(39), 0);
        assert_eq!(sched.segment_at(40), 1);
        let se = subspace_error(&sched.subspaces[1], &sched.subspaces[0]).unwrap();
        assert!((se - 0.5).abs() < 2e-3);
        let x = sched.gen_stream(9);
        assert_eq!(x.shape(), (20, 100));
        // Columns land in the active subspace.
        let u1 = &sched.subspaces[1];
        let col = x.column(50).into_owned();
        let resid = &col - u1.mat() * u1.mat().tr_mul(&col);
        assert!(resid.norm() < 1e-10 * col.norm());
    }
}
