//! The alternating-minimization outer loop for low-rank phase retrieval and
//! its linear (phase-known) variant.
//!
//! Each outer iteration: recover every coefficient column by an r-dimensional
//! phase retrieval with design `UᵀA_k`, estimate the measurement signs from
//! `x̂_k = U b̂_k`, orthonormalize the right factor, then re-estimate the
//! subspace by a single least-squares problem solved matrix-free by
//! conjugate gradient, followed by QR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cg::{cg_solve, CgReport};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::mat::{orthonormalize, BasisMatrix};
use crate::metrics::{mat_dist, projected_residual_norm};
use crate::model::{GroundTruth, IterRecord, MeasurementBatch, RecoveryResult};
use crate::par::{map_chunks, map_indexed};
use crate::rwf::{rel_amplitude_residual, rwf_solve, sign_pos, RwfConfig};
use crate::specinit::{
    build_yu, estimate_rank_gap, estimate_rank_threshold, init_subspace, ThresholdMode,
};
use crate::synth::split_samples;

/// How the rank fed to the spectral initialization is chosen.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    Fixed { r: usize },
    /// Largest j with `λ_j(Y_U) − λ_n(Y_U) ≥ omega`.
    Threshold { omega: f64 },
    /// Largest consecutive spectral gap; needs no model parameters.
    MaxGap,
}

/// Inner phase-retrieval iteration schedule across outer iterations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RwfSchedule {
    Fixed { iters: usize },
    /// Grows linearly from `from` at t = 0 to `to` at t = T − 1.
    Linear { from: usize, to: usize },
    /// `⌈c · (log r + log κ + t · log 0.7 / log(1 − contraction))⌉`.
    Theorem { c: f64, contraction: f64 },
}

impl RwfSchedule {
    pub fn iters_at(&self, t: usize, t_outer: usize, r: usize, kappa: f64) -> usize {
        match *self {
            RwfSchedule::Fixed { iters } => iters,
            RwfSchedule::Linear { from, to } => {
                if t_outer <= 1 || to <= from {
                    return from.max(to);
                }
                let frac = t as f64 / (t_outer - 1) as f64;
                (from as f64 + frac * (to - from) as f64).round() as usize
            }
            RwfSchedule::Theorem { c, contraction } => {
                let growth = 0.7f64.ln() / (1.0 - contraction).ln();
                let raw = c
                    * ((r.max(2) as f64).ln() + kappa.max(1.0).ln() + t as f64 * growth);
                raw.ceil().max(1.0) as usize
            }
        }
    }
}

/// How the subspace iterate is initialized.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Top eigenvectors of the truncated spectral matrix.
    Spectral,
    /// Orthonormalized Gaussian basis; reproduces the negative result that
    /// random initialization does not converge. No contract attached.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AltMinConfig {
    /// Outer iterations T.
    pub t_outer: usize,
    pub rwf_schedule: RwfSchedule,
    pub rwf_step_size: f64,
    pub rwf_init_trunc: f64,
    /// Relative residual target for the conjugate-gradient subspace update.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub rank: RankRule,
    /// Partition measurements into 2T + 1 disjoint sets instead of reusing.
    pub sample_split: bool,
    /// Phase-known model: replace the per-column PR step by least squares
    /// and skip sign estimation.
    pub linear_mode: bool,
    pub c_y: f64,
    pub threshold_mode: ThresholdMode,
    pub init: InitMode,
    /// Stop early when `‖X̂_t − X̂_{t−1}‖_F / ‖X̂_t‖_F` falls below this.
    pub early_exit_rel_change: f64,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        AltMinConfig {
            t_outer: 30,
            rwf_schedule: RwfSchedule::Linear { from: 5, to: 30 },
            rwf_step_size: 0.8,
            rwf_init_trunc: 3.0,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            rank: RankRule::MaxGap,
            sample_split: false,
            linear_mode: false,
            c_y: 9.0,
            threshold_mode: ThresholdMode::Global,
            init: InitMode::Spectral,
            early_exit_rel_change: 1e-9,
        }
    }
}

impl AltMinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_outer == 0 {
            return Err(Error::InvalidConfig("need at least one outer iteration".into()));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidConfig("cg tolerance must lie in (0, 1)".into()));
        }
        if !(self.rwf_step_size > 0.0 && self.rwf_step_size < 2.0) {
            return Err(Error::InvalidConfig("rwf step size must lie in (0, 2)".into()));
        }
        Ok(())
    }
}

/// Per-column measurement signs, entries in {−1, +1}.
#[derive(Debug, Clone)]
pub struct PhaseMatrix {
    pub signs: Vec<DVector<f64>>,
}

impl PhaseMatrix {
    pub fn new(signs: Vec<DVector<f64>>) -> Result<Self> {
        for (k, s) in signs.iter().enumerate() {
            if s.iter().any(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidConfig(format!(
                    "phase vector {k} contains entries outside {{-1, +1}}"
                )));
            }
        }
        Ok(PhaseMatrix { signs })
    }

    /// True signs of `A_kᵀ x_k` for a reference matrix (oracle phases).
    pub fn oracle(batch: &MeasurementBatch, x: &DMatrix<f64>) -> Self {
        estimate_phases(x, batch)
    }
}

/// Output of one alternating epoch.
pub struct EpochOutcome {
    pub bhat: DMatrix<f64>,
    pub xhat: DMatrix<f64>,
    pub u_next: BasisMatrix,
    pub cg: CgReport,
    pub degenerate_cols: Vec<usize>,
}

/// Recover every coefficient column against a fixed subspace.
///
/// Phaseless mode runs RWF on the projected design `UᵀA_k`; linear mode
/// solves the overdetermined least squares directly. Returns the r×q
/// coefficient matrix, `X̂ = U B̂`, and any columns flagged degenerate.
///
/// A column whose amplitude residual is grossly out of line with the batch
/// (above `max(25×median, 1e-4)`) is a stalled solve, not noise; it gets one
/// harder salvage attempt and is otherwise zeroed. A zero coefficient column
/// drops out of the subspace least squares entirely (every term carries
/// `b_k`), so one stuck column cannot poison the subspace update. Below the
/// absolute floor a bad column perturbs the subspace by less than the
/// solver's own precision, so nothing is flagged there.
pub fn update_b(
    u: &BasisMatrix,
    batch: &MeasurementBatch,
    rwf: &RwfConfig,
    linear_mode: bool,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<usize>) {
    let r = u.ncols();
    let q = batch.q();
    let cols: Vec<(DVector<f64>, f64, bool)> = map_indexed(q, |k| {
        let design = u.mat().tr_mul(&batch.designs[k]);
        let y = &batch.obs[k];
        if linear_mode {
            match linear_lstsq(&design, y) {
                Some(b) => (b, 0.0, false),
                None => (DVector::zeros(r), f64::INFINITY, true),
            }
        } else {
            let sol = rwf_solve(y, &design, rwf);
            let resid =
                if sol.degenerate { 0.0 } else { rel_amplitude_residual(&sol.x, y, &design) };
            (sol.x, resid, sol.degenerate)
        }
    });
    let mut resids: Vec<f64> = cols.iter().map(|(_, resid, _)| *resid).collect();
    resids.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let median = resids.get(q / 2).copied().unwrap_or(0.0);
    let stall_threshold = (25.0 * median).max(1e-4);
    let mut bhat = DMatrix::zeros(r, q);
    let mut degenerate = Vec::new();
    for (k, (b, resid, degen)) in cols.into_iter().enumerate() {
        if degen {
            degenerate.push(k);
            continue;
        }
        if !linear_mode && resid > stall_threshold && q > 1 {
            // Salvage attempt with a larger restart budget.
            let design = u.mat().tr_mul(&batch.designs[k]);
            let y = &batch.obs[k];
            let hard = RwfConfig { restarts: 12, warm_start: None, ..rwf.clone() };
            let sol = rwf_solve(y, &design, &hard);
            let salvage_resid = rel_amplitude_residual(&sol.x, y, &design);
            if salvage_resid <= stall_threshold {
                bhat.set_column(k, &sol.x);
            } else {
                degenerate.push(k);
            }
            continue;
        }
        bhat.set_column(k, &b);
    }
    let xhat = u.mat() * &bhat;
    (bhat, xhat, degenerate)
}

/// `argmin_b ‖y − Gᵀ b‖` via the normal equations (r is small).
fn linear_lstsq(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let gram = design * design.transpose();
    let rhs = design * y;
    gram.cholesky().map(|ch| ch.solve(&rhs))
}

/// Measurement signs of the current estimate: `ĉ_ik = sign(a_ikᵀ x̂_k)`,
/// with `sign(0) = +1`.
pub fn estimate_phases(xhat: &DMatrix<f64>, batch: &MeasurementBatch) -> PhaseMatrix {
    let signs = map_indexed(batch.q(), |k| {
        let proj = batch.designs[k].tr_mul(&xhat.column(k));
        proj.map(sign_pos)
    });
    PhaseMatrix { signs }
}

/// Least-squares subspace update, solved matrix-free.
///
/// Minimizes `Σ_k ‖ĉ_k ∘ y_k − A_kᵀ W b_k‖²` over n×r matrices `W` by
/// conjugate gradient on the normal equations; the system operator
/// `W ↦ Σ_k A_k (A_kᵀ W b_k) b_kᵀ` is applied without ever materializing the
/// nr×nr matrix. The minimizer is then orthonormalized.
pub fn update_u(
    b: &DMatrix<f64>,
    phases: Option<&PhaseMatrix>,
    batch: &MeasurementBatch,
    cg_tol: f64,
    cg_max_iters: usize,
) -> Result<(BasisMatrix, CgReport)> {
    let q = batch.q();
    assert_eq!(b.ncols(), q, "right factor must have one column per batch column");
    if let Some(p) = phases {
        assert_eq!(p.signs.len(), q, "one sign vector per column required");
    }
    let rhs_parts = map_chunks(q, |range| {
        let mut acc = DMatrix::<f64>::zeros(batch.n(), b.nrows());
        for k in range {
            let z = match phases {
                Some(p) => batch.obs[k].component_mul(&p.signs[k]),
                None => batch.obs[k].clone(),
            };
            let az = &batch.designs[k] * z;
            // acc += az · b_kᵀ
            acc.ger(1.0, &az, &b.column(k).into_owned(), 1.0);
        }
        acc
    });
    let mut rhs = DMatrix::<f64>::zeros(batch.n(), b.nrows());
    for part in rhs_parts {
        rhs += part;
    }
    let op = |w: &DMatrix<f64>| -> DMatrix<f64> {
        let parts = map_chunks(q, |range| {
            let mut acc = DMatrix::<f64>::zeros(w.nrows(), w.ncols());
            for k in range {
                let bk = b.column(k).into_owned();
                let wb = w * &bk;
                let proj = batch.designs[k].tr_mul(&wb);
                let back = &batch.designs[k] * proj;
                acc.ger(1.0, &back, &bk, 1.0);
            }
            acc
        });
        let mut out = DMatrix::<f64>::zeros(w.nrows(), w.ncols());
        for part in parts {
            out += part;
        }
        out
    };
    let (w, report) = cg_solve(op, &rhs, cg_tol, cg_max_iters);
    let (basis, _) = orthonormalize(&w)?;
    Ok((basis, report))
}

/// One full alternating epoch: coefficient update, sign estimation, QR of the
/// right factor, subspace least squares, QR.
pub fn altmin_epoch(
    u: &BasisMatrix,
    b_batch: &MeasurementBatch,
    u_batch: &MeasurementBatch,
    rwf: &RwfConfig,
    linear_mode: bool,
    cg_tol: f64,
    cg_max_iters: usize,
) -> Result<EpochOutcome> {
    let (bhat, xhat, degenerate_cols) = update_b(u, b_batch, rwf, linear_mode);
    let phases = if linear_mode { None } else { Some(estimate_phases(&xhat, u_batch)) };
    let (b_orth_t, _) = orthonormalize(&bhat.transpose())?;
    let b_orth = b_orth_t.mat().transpose();
    let (u_next, cg) = update_u(&b_orth, phases.as_ref(), u_batch, cg_tol, cg_max_iters)?;
    Ok(EpochOutcome { bhat, xhat, u_next, cg, degenerate_cols })
}

/// Subspace error of an estimate against the truth, tolerating a rank
/// mismatch by comparing against the top `min(r̂, r)` true directions.
pub fn se_vs_truth(u: &BasisMatrix, gt: &GroundTruth) -> f64 {
    let r_eff = u.ncols().min(gt.rank());
    let target = gt.ustar.mat().columns(0, r_eff).into_owned();
    projected_residual_norm(u, &target)
}

/// Full recovery: rank selection, spectral initialization, then `t_outer`
/// alternating epochs with an optional per-iteration trace against a truth.
pub fn altmin_lowrap(
    batch: &MeasurementBatch,
    cfg: &AltMinConfig,
    gt: Option<&GroundTruth>,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let partition = if cfg.sample_split {
        Some(split_samples(batch.m(), cfg.t_outer)?)
    } else {
        None
    };
    let init_batch = match &partition {
        Some(p) => batch.measurement_slice(p.init.clone()),
        None => batch.clone(),
    };
    let yu = build_yu(&init_batch, cfg.c_y, cfg.threshold_mode)?;
    let rank_used = match cfg.rank {
        RankRule::Fixed { r } => r,
        RankRule::Threshold { omega } => estimate_rank_threshold(&yu, omega),
        RankRule::MaxGap => estimate_rank_gap(&yu),
    };
    if rank_used == 0 || rank_used > batch.n() {
        return Err(Error::Degenerate(format!(
            "rank estimation returned {rank_used}; aborting trial"
        )));
    }
    let u0 = match cfg.init {
        InitMode::Spectral => init_subspace(&yu, rank_used)?,
        InitMode::Random { seed } => {
            let g = crate::rng::gaussian_matrix(
                &mut crate::rng::stream_rng(seed, crate::rng::stream::USTAR, 1),
                batch.n(),
                rank_used,
            );
            orthonormalize(&g)?.0
        }
    };
    run_epochs(batch, partition.as_ref(), u0, rank_used, cfg, gt, clock)
}

/// Same loop, but starting from a caller-supplied subspace (no spectral
/// initialization). Rank is taken from `u0`.
pub fn altmin_lowrap_from(
    batch: &MeasurementBatch,
    u0: BasisMatrix,
    cfg: &AltMinConfig,
    gt: Option<&GroundTruth>,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let partition = if cfg.sample_split {
        Some(split_samples(batch.m(), cfg.t_outer)?)
    } else {
        None
    };
    let rank = u0.ncols();
    run_epochs(batch, partition.as_ref(), u0, rank, cfg, gt, clock)
}

fn run_epochs(
    batch: &MeasurementBatch,
    partition: Option<&crate::synth::SamplePartition>,
    mut u: BasisMatrix,
    rank_used: usize,
    cfg: &AltMinConfig,
    gt: Option<&GroundTruth>,
    clock: Stopwatch,
) -> Result<RecoveryResult> {
    let kappa = gt.map(|g| g.kappa).unwrap_or(1.0);
    let mut trace: Vec<IterRecord> = Vec::with_capacity(cfg.t_outer + 1);
    let mut prev_xhat: Option<DMatrix<f64>> = None;
    let slice_for = |t: usize, side: usize| -> MeasurementBatch {
        match partition {
            Some(p) => batch.measurement_slice(p.blocks[side * cfg.t_outer + t].clone()),
            None => batch.clone(),
        }
    };
    let mut rwf = RwfConfig {
        step_size: cfg.rwf_step_size,
        init_trunc: cfg.rwf_init_trunc,
        ..Default::default()
    };
    for t in 0..cfg.t_outer {
        rwf.max_iters = cfg.rwf_schedule.iters_at(t, cfg.t_outer, rank_used, kappa);
        let b_batch = slice_for(t, 0);
        let u_batch = slice_for(t, 1);
        let epoch = altmin_epoch(
            &u,
            &b_batch,
            &u_batch,
            &rwf,
            cfg.linear_mode,
            cfg.cg_tol,
            cfg.cg_max_iters,
        )?;
        trace.push(record(t, &clock, &u, &epoch.xhat, gt));
        let rel_change = prev_xhat
            .as_ref()
            .map(|prev| (&epoch.xhat - prev).norm() / epoch.xhat.norm().max(1e-300));
        prev_xhat = Some(epoch.xhat);
        u = epoch.u_next;
        if let Some(change) = rel_change {
            if change < cfg.early_exit_rel_change {
                break;
            }
        }
    }
    // Recompute the coefficients against the final subspace so the output
    // triple (Û, B̂, X̂) is consistent. When sample-splitting, this reuses
    // the last coefficient block; the subspace is no longer updated from it.
    let t_last = trace.len().saturating_sub(1);
    rwf.max_iters = cfg
        .rwf_schedule
        .iters_at(cfg.t_outer.saturating_sub(1), cfg.t_outer, rank_used, kappa);
    let final_batch = slice_for(t_last.min(cfg.t_outer - 1), 0);
    let (bhat, xhat, _) = update_b(&u, &final_batch, &rwf, cfg.linear_mode);
    trace.push(record(t_last + 1, &clock, &u, &xhat, gt));
    Ok(RecoveryResult { uhat: u, bhat, xhat, trace, rank_used })
}

fn record(
    iter: usize,
    clock: &Stopwatch,
    u: &BasisMatrix,
    xhat: &DMatrix<f64>,
    gt: Option<&GroundTruth>,
) -> IterRecord {
    let (se, matdist_rel) = match gt {
        Some(g) => {
            let se = se_vs_truth(u, g);
            let md = mat_dist(xhat, &g.xstar).expect("shapes agree") / g.xstar.norm();
            (Some(se), Some(md))
        }
        None => (None, None),
    };
    IterRecord { iter, elapsed_s: clock.elapsed_s(), se, matdist_rel }
}

/// Linear-model recovery (compressive PCA): identical loop with exact
/// least-squares column solves and no sign estimation.
pub fn compressive_pca(
    batch: &MeasurementBatch,
    cfg: &AltMinConfig,
    gt: Option<&GroundTruth>,
) -> Result<RecoveryResult> {
    if !batch.signed {
        return Err(Error::InvalidConfig(
            "compressive_pca needs signed (phase-known) observations".into(),
        ));
    }
    let cfg = AltMinConfig { linear_mode: true, ..cfg.clone() };
    altmin_lowrap(batch, &cfg, gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{phase_dist, subspace_error};
    use crate::rng::{gaussian_matrix, stream_rng};
    use crate::synth::{gen_ground_truth, gen_linear_measurements, gen_measurements, SynthConfig};

    fn setup(seed: u64, n: usize, q: usize, r: usize, m: usize) -> (GroundTruth, MeasurementBatch) {
        let cfg = SynthConfig { n, q, r, m, seed, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_measurements(&gt.xstar, m, seed ^ 0xABCD).unwrap();
        (gt, batch)
    }

    #[test]
    fn update_b_exact_subspace_recovers_columns() {
        let (gt, batch) = setup(21, 24, 30, 2, 48);
        let rwf = RwfConfig::with_iters(200);
        let (bhat, xhat, degen) = update_b(&gt.ustar, &batch, &rwf, false);
        assert!(degen.is_empty());
        let btilde = gt.btilde();
        for k in 0..gt.q() {
            let d = phase_dist(&bhat.column(k).into_owned(), &btilde.column(k).into_owned())
                .unwrap();
            assert!(d <= 1e-6 * gt.xstar.column(k).norm(), "column {k}: dist {d:.2e}");
        }
        assert!((gt.ustar.mat() * &bhat - &xhat).norm() < 1e-12);
    }

    #[test]
    fn update_b_single_column_is_standard_pr() {
        let (gt, batch) = setup(22, 16, 1, 1, 40);
        let rwf = RwfConfig::with_iters(150);
        let (_, xhat, _) = update_b(&gt.ustar, &batch, &rwf, false);
        let d = phase_dist(&xhat.column(0).into_owned(), &gt.xstar.column(0).into_owned())
            .unwrap();
        assert!(d <= 1e-6 * gt.xstar.norm());
    }

    #[test]
    fn update_b_linear_mode_is_exact() {
        let cfg = SynthConfig { n: 20, q: 15, r: 3, m: 8, seed: 23, split: None };
        let gt = gen_ground_truth(&cfg).unwrap();
        let batch = gen_linear_measurements(&gt.xstar, cfg.m, 77).unwrap();
        let rwf = RwfConfig::default();
        let (_, xhat, degen) = update_b(&gt.ustar, &batch, &rwf, true);
        assert!(degen.is_empty());
        assert!((&xhat - &gt.xstar).norm() / gt.xstar.norm() < 1e-10);
    }

    #[test]
    fn phases_match_truth_and_flip_with_sign() {
        let (gt, batch) = setup(24, 12, 8, 2, 10);
        let truth = estimate_phases(&gt.xstar, &batch);
        for k in 0..batch.q() {
            let proj = batch.designs[k].tr_mul(&gt.xstar.column(k));
            for i in 0..batch.m() {
                assert_eq!(truth.signs[k][i], sign_pos(proj[i]));
            }
        }
        let flipped = estimate_phases(&(-&gt.xstar), &batch);
        for k in 0..batch.q() {
            assert_eq!(flipped.signs[k], -truth.signs[k].clone());
        }
    }

    #[test]
    fn update_u_oracle_inputs_recover_span_exactly() {
        let (gt, batch) = setup(25, 20, 40, 2, 10);
        let phases = PhaseMatrix::oracle(&batch, &gt.xstar);
        let (u_next, report) = update_u(&gt.bstar, Some(&phases), &batch, 1e-12, 500).unwrap();
        assert!(report.converged, "cg stalled at {:.2e}", report.rel_residual);
        let se = subspace_error(&u_next, &gt.ustar).unwrap();
        assert!(se <= 1e-8, "SE = {se:.2e}");
    }

    #[test]
    fn update_u_matches_dense_direct_solve() {
        // q = 1, r = 1 degenerates to an ordinary n-unknown least squares.
        let (gt, batch) = setup(26, 12, 1, 1, 30);
        let phases = PhaseMatrix::oracle(&batch, &gt.xstar);
        let (u_cg, _) = update_u(&gt.bstar, Some(&phases), &batch, 1e-14, 1000).unwrap();
        // Dense solve: A Aᵀ b₁² w = A z b₁.
        let a = &batch.designs[0];
        let b1 = gt.bstar[(0, 0)];
        let z = batch.obs[0].component_mul(&phases.signs[0]);
        let gram = (a * a.transpose()) * (b1 * b1);
        let rhs = (a * z) * b1;
        let w = gram.lu().solve(&rhs).unwrap();
        let w_mat = DMatrix::from_column_slice(12, 1, w.as_slice());
        let (u_dense, _) = orthonormalize(&w_mat).unwrap();
        let se = subspace_error(&u_cg, &u_dense).unwrap();
        assert!(se < 1e-10, "SE between CG and dense = {se:.2e}");
    }

    #[test]
    fn update_u_flipped_phases_same_span() {
        let (gt, batch) = setup(27, 14, 20, 2, 12);
        let phases = PhaseMatrix::oracle(&batch, &gt.xstar);
        let flipped = PhaseMatrix::new(phases.signs.iter().map(|s| -s.clone()).collect()).unwrap();
        let (u_a, _) = update_u(&gt.bstar, Some(&phases), &batch, 1e-12, 500).unwrap();
        let (u_b, _) = update_u(&gt.bstar, Some(&flipped), &batch, 1e-12, 500).unwrap();
        assert!(subspace_error(&u_a, &u_b).unwrap() < 1e-10);
    }

    #[test]
    fn update_u_operator_is_symmetric_psd() {
        let (gt, batch) = setup(28, 10, 16, 2, 8);
        let op = |w: &DMatrix<f64>| -> DMatrix<f64> {
            let mut out = DMatrix::zeros(10, 2);
            for k in 0..batch.q() {
                let bk = gt.bstar.column(k).into_owned();
                let wb = w * &bk;
                let proj = batch.designs[k].tr_mul(&wb);
                let back = &batch.designs[k] * proj;
                out.ger(1.0, &back, &bk, 1.0);
            }
            out
        };
        let mut rng = stream_rng(29, 80, 0);
        for _ in 0..5 {
            let w1 = gaussian_matrix(&mut rng, 10, 2);
            let w2 = gaussian_matrix(&mut rng, 10, 2);
            let lhs = w1.dot(&op(&w2));
            let rhs = op(&w1).dot(&w2);
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0));
            assert!(w1.dot(&op(&w1)) >= 0.0);
        }
    }

    #[test]
    fn altmin_converges_on_small_instance() {
        let (gt, batch) = setup(30, 30, 60, 2, 40);
        let cfg = AltMinConfig {
            t_outer: 10,
            rank: RankRule::Fixed { r: 2 },
            ..Default::default()
        };
        let res = altmin_lowrap(&batch, &cfg, Some(&gt)).unwrap();
        assert_eq!(res.rank_used, 2);
        let final_err = res.final_matdist_rel().unwrap();
        assert!(final_err <= 1e-6, "final error {final_err:.2e}");
        // Trace keeps the product identity.
        assert!((res.uhat.mat() * &res.bhat - &res.xhat).norm() < 1e-10 * res.xhat.norm());
    }

    #[test]
    fn altmin_from_true_subspace_converges_in_one_epoch() {
        let (gt, batch) = setup(31, 24, 48, 2, 48);
        let cfg = AltMinConfig {
            t_outer: 1,
            rwf_schedule: RwfSchedule::Fixed { iters: 300 },
            ..Default::default()
        };
        let res = altmin_lowrap_from(&batch, gt.ustar.clone(), &cfg, Some(&gt)).unwrap();
        let final_err = res.final_matdist_rel().unwrap();
        assert!(final_err <= 1e-8, "error after one epoch {final_err:.2e}");
    }

    #[test]
    fn compressive_pca_machine_precision() {
        let cfg_s = SynthConfig { n: 20, q: 40, r: 2, m: 8, seed: 33, split: None };
        let gt = gen_ground_truth(&cfg_s).unwrap();
        let batch = gen_linear_measurements(&gt.xstar, cfg_s.m, 55).unwrap();
        let cfg = AltMinConfig {
            t_outer: 40,
            rank: RankRule::Fixed { r: 2 },
            cg_tol: 1e-12,
            cg_max_iters: 2000,
            early_exit_rel_change: 1e-14,
            ..Default::default()
        };
        let res = compressive_pca(&batch, &cfg, Some(&gt)).unwrap();
        let err = res.final_matdist_rel().unwrap();
        assert!(err <= 1e-8, "linear-mode error {err:.2e}");
    }

    #[test]
    fn compressive_pca_rejects_phaseless_batch() {
        let (gt, batch) = setup(34, 10, 8, 2, 6);
        let _ = gt;
        let cfg = AltMinConfig::default();
        assert!(compressive_pca(&batch, &cfg, None).is_err());
    }

    #[test]
    fn rwf_schedule_shapes() {
        let lin = RwfSchedule::Linear { from: 5, to: 30 };
        assert_eq!(lin.iters_at(0, 30, 4, 1.0), 5);
        assert_eq!(lin.iters_at(29, 30, 4, 1.0), 30);
        let fixed = RwfSchedule::Fixed { iters: 12 };
        assert_eq!(fixed.iters_at(7, 30, 4, 1.0), 12);
        let thm = RwfSchedule::Theorem { c: 3.0, contraction: 0.3 };
        assert!(thm.iters_at(5, 30, 4, 1.2) > thm.iters_at(0, 30, 4, 1.2));
    }
}
