//! Phaseless subspace tracking over α-column mini-batches.
//!
//! A two-mode state machine: T alternating epochs estimate the current
//! subspace (update mode), after which the estimate is frozen and incoming
//! batches are screened for spectral evidence of a subspace change (detect
//! mode). The PST-all variant keeps updating during detection, which also
//! tracks changes too small to trip the detector.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::altmin::{altmin_epoch, RwfSchedule};
use crate::error::{Error, Result};
use crate::mat::{orthonormalize_trunc, BasisMatrix};
use crate::model::MeasurementBatch;
use crate::par::map_indexed;
use crate::rwf::{rwf_solve, RwfConfig};
use crate::specinit::{build_yu, init_subspace, sorted_eigenvalues, ThresholdMode};

/// Tolerance for dropping dependent directions when joining two segment
/// estimates into a union basis.
pub const UNION_BASIS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Mini-batch length α.
    pub alpha: usize,
    /// Update epochs per segment before entering detect mode.
    pub t_epochs: usize,
    /// Detection threshold on `λ_max − λ_{n−r}` of the projected spectral
    /// matrix.
    pub omega_det: f64,
    /// Subspace rank, fixed for the whole stream.
    pub rank: usize,
    /// Keep updating the running estimate during detect mode.
    pub pst_all: bool,
    pub rwf_schedule: RwfSchedule,
    pub rwf_step_size: f64,
    pub rwf_init_trunc: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub c_y: f64,
    pub threshold_mode: ThresholdMode,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            alpha: 250,
            t_epochs: 8,
            omega_det: 0.6,
            rank: 2,
            pst_all: false,
            rwf_schedule: RwfSchedule::Linear { from: 5, to: 30 },
            rwf_step_size: 0.8,
            rwf_init_trunc: 3.0,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            c_y: 9.0,
            threshold_mode: ThresholdMode::Global,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < self.rank {
            return Err(Error::InvalidConfig(format!(
                "batch length {} must be at least the rank {}",
                self.alpha, self.rank
            )));
        }
        if !(self.omega_det > 0.0) {
            return Err(Error::InvalidConfig("detection threshold must be positive".into()));
        }
        if self.t_epochs == 0 {
            return Err(Error::InvalidConfig("need at least one update epoch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerMode {
    Update,
    Detect,
}

/// Tracker state between batches.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub mode: TrackerMode,
    /// Change-segment index.
    pub j: usize,
    /// Epoch counter within the current segment; equals `t_epochs` while in
    /// detect mode.
    pub ell: usize,
    /// Detected change columns (start of the triggering batch).
    pub khat: Vec<usize>,
    /// Running subspace estimate.
    pub current_u: Option<BasisMatrix>,
    /// Estimate frozen at the end of the segment's update epochs; detection
    /// is always measured against this.
    pub frozen_u: Option<BasisMatrix>,
    /// Finalized estimate per completed segment.
    pub segment_estimates: Vec<BasisMatrix>,
    next_offset: usize,
}

impl TrackerState {
    pub fn new() -> Self {
        TrackerState {
            mode: TrackerMode::Update,
            j: 0,
            ell: 0,
            khat: Vec::new(),
            current_u: None,
            frozen_u: None,
            segment_estimates: Vec::new(),
            next_offset: 0,
        }
    }

    /// Check the mode-machine invariants; used by the self-test suite.
    pub fn check_invariants(&self, cfg: &TrackerConfig) -> Result<()> {
        if self.mode == TrackerMode::Detect && self.ell != cfg.t_epochs {
            return Err(Error::InvalidConfig(format!(
                "detect mode with ell = {} != T = {}",
                self.ell, cfg.t_epochs
            )));
        }
        if self.ell > cfg.t_epochs {
            return Err(Error::InvalidConfig("epoch counter exceeded T".into()));
        }
        if !self.khat.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("detected change times not increasing".into()));
        }
        Ok(())
    }

    /// Per-segment estimates including the still-running last segment.
    pub fn all_segment_estimates(&self) -> Vec<BasisMatrix> {
        let mut out = self.segment_estimates.clone();
        if out.len() <= self.j {
            if let Some(u) = self.current_u.as_ref().or(self.frozen_u.as_ref()) {
                out.push(u.clone());
            }
        }
        out
    }
}

impl Default for TrackerState {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of feeding one batch to the tracker.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub batch_start: usize,
    /// Mode the tracker was in while processing this batch.
    pub mode: TrackerMode,
    pub segment: usize,
    pub ell_after: usize,
    /// Detection statistic, when one was computed.
    pub statistic: Option<f64>,
    pub detected: bool,
    /// Whether the subspace estimate changed on this batch.
    pub updated: bool,
}

/// Spectral change statistic for a batch against a frozen subspace:
/// `λ_max − λ_{n−r}` of `(I − UUᵀ) Y_U (I − UUᵀ)`, with `λ_{n−r}` indexed in
/// ascending order, i.e. the (r+1)-th largest eigenvalue.
///
/// Read this way, the statistic is the excess of the top eigenvalue over the
/// residual noise bulk: near zero while the batch stays inside the frozen
/// span, and of order `SE²·σ²min/α` once the underlying subspace has moved.
/// (The descending reading would measure the full bulk spread, whose sampling
/// noise floor at practical batch sizes exceeds any usable threshold.)
///
/// Degenerate spectral matrices (everything truncated) yield 0.
pub fn detect_statistic(
    batch: &MeasurementBatch,
    prev_u: &BasisMatrix,
    c_y: f64,
    mode: ThresholdMode,
) -> Result<f64> {
    let n = batch.n();
    let r = prev_u.ncols();
    if prev_u.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "subspace is {}-dimensional, batch is {n}-dimensional",
            prev_u.nrows()
        )));
    }
    if r >= n {
        return Ok(0.0);
    }
    let yu = match build_yu(batch, c_y, mode) {
        Ok(yu) => yu,
        Err(Error::Degenerate(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    // (I − UUᵀ) Y (I − UUᵀ) without forming the projector.
    let yu_u = &yu.mat * prev_u.mat();
    let ut_yu_u = prev_u.mat().tr_mul(&yu_u);
    let mut big = yu.mat.clone();
    big.gemm(-1.0, &yu_u, &prev_u.mat().transpose(), 1.0);
    big.gemm(-1.0, prev_u.mat(), &yu_u.transpose(), 1.0);
    big.gemm(1.0, &(prev_u.mat() * ut_yu_u), &prev_u.mat().transpose(), 1.0);
    let big = (&big + big.transpose()) * 0.5;
    let vals = sorted_eigenvalues(&big);
    Ok(vals[0] - vals[r])
}

/// Feed the next α-column batch through the detect/update state machine.
pub fn tracker_step(
    state: &mut TrackerState,
    batch: &MeasurementBatch,
    cfg: &TrackerConfig,
) -> Result<BatchReport> {
    cfg.validate()?;
    if batch.q() != cfg.alpha {
        return Err(Error::DimensionMismatch(format!(
            "tracker expects batches of exactly α = {} columns, got {}",
            cfg.alpha,
            batch.q()
        )));
    }
    if batch.column_offset != state.next_offset {
        return Err(Error::InvalidConfig(format!(
            "batches must arrive in column order: expected offset {}, got {}",
            state.next_offset, batch.column_offset
        )));
    }
    state.next_offset += cfg.alpha;
    let mode_at_entry = state.mode;
    let mut report = BatchReport {
        batch_start: batch.column_offset,
        mode: mode_at_entry,
        segment: state.j,
        ell_after: state.ell,
        statistic: None,
        detected: false,
        updated: false,
    };
    match mode_at_entry {
        TrackerMode::Update => {
            if state.ell == 0 {
                let yu = build_yu(batch, cfg.c_y, cfg.threshold_mode)?;
                state.current_u = Some(init_subspace(&yu, cfg.rank)?);
            }
            run_update_epoch(state, batch, cfg, state.ell)?;
            state.ell += 1;
            report.updated = true;
            if state.ell == cfg.t_epochs {
                let u = state.current_u.clone().expect("estimate exists after an epoch");
                state.frozen_u = Some(u.clone());
                if state.segment_estimates.len() == state.j {
                    state.segment_estimates.push(u);
                } else {
                    state.segment_estimates[state.j] = u;
                }
                state.mode = TrackerMode::Detect;
            }
        }
        TrackerMode::Detect => {
            let frozen = state
                .frozen_u
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("detect mode without a frozen subspace".into()))?
                .clone();
            let stat = detect_statistic(batch, &frozen, cfg.c_y, cfg.threshold_mode)?;
            report.statistic = Some(stat);
            if cfg.pst_all {
                // Keep refining during detection; detection stays anchored
                // to the frozen estimate.
                run_update_epoch(state, batch, cfg, cfg.t_epochs.saturating_sub(1))?;
                report.updated = true;
                if let Some(u) = state.current_u.clone() {
                    state.segment_estimates[state.j] = u;
                }
            }
            if stat >= cfg.omega_det {
                report.detected = true;
                state.j += 1;
                state.khat.push(batch.column_offset);
                state.ell = 0;
                state.mode = TrackerMode::Update;
            }
        }
    }
    report.ell_after = state.ell;
    Ok(report)
}

fn run_update_epoch(
    state: &mut TrackerState,
    batch: &MeasurementBatch,
    cfg: &TrackerConfig,
    schedule_t: usize,
) -> Result<()> {
    let u = state
        .current_u
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("update epoch without an estimate".into()))?;
    let rwf = RwfConfig {
        max_iters: cfg.rwf_schedule.iters_at(schedule_t, cfg.t_epochs, cfg.rank, 1.0),
        step_size: cfg.rwf_step_size,
        init_trunc: cfg.rwf_init_trunc,
        ..Default::default()
    };
    let epoch = altmin_epoch(u, batch, batch, &rwf, false, cfg.cg_tol, cfg.cg_max_iters)?;
    state.current_u = Some(epoch.u_next);
    Ok(())
}

/// Offline smoothing: re-estimate every column against the union of the
/// consecutive segment estimates bracketing it, so columns that arrived
/// between the true change and its detection are still covered.
///
/// `khat` holds the recorded detection times (start of the triggering batch);
/// the true change lies somewhere in `[k̂_j, k̂_j + 2α)`, so segment j is cut
/// at `k̂_j + alpha` and every column in the uncertain stretch is recovered
/// in the union of the two adjacent estimates.
pub fn offline_smooth(
    batches: &[MeasurementBatch],
    khat: &[usize],
    alpha: usize,
    segment_estimates: &[BasisMatrix],
    rwf_iters: usize,
) -> Result<DMatrix<f64>> {
    if batches.is_empty() {
        return Err(Error::InvalidConfig("no batches to smooth".into()));
    }
    if segment_estimates.is_empty() {
        return Err(Error::InvalidConfig("no segment estimates".into()));
    }
    let n = batches[0].n();
    let q_full: usize = batches.iter().map(|b| b.q()).sum();
    // Segment boundaries: column 0, then the end of each triggering batch.
    let mut starts = Vec::with_capacity(khat.len() + 1);
    starts.push(0usize);
    starts.extend(khat.iter().map(|&k| (k + alpha).min(q_full)));
    if starts.len() != segment_estimates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} segments but {} estimates",
            starts.len(),
            segment_estimates.len()
        )));
    }
    let mut xhat = DMatrix::<f64>::zeros(n, q_full);
    let rwf = RwfConfig { max_iters: rwf_iters, ..Default::default() };
    for (j, &start) in starts.iter().enumerate() {
        let end = starts.get(j + 1).copied().unwrap_or(q_full);
        if start >= end {
            // Empty segment: nothing to recover; columns stay zero.
            continue;
        }
        let union = if j + 1 < segment_estimates.len() {
            let concat = stack_columns(&segment_estimates[j], &segment_estimates[j + 1]);
            orthonormalize_trunc(&concat, UNION_BASIS_TOL)?
        } else {
            segment_estimates[j].clone()
        };
        let cols: Vec<(usize, nalgebra::DVector<f64>)> = {
            let indices: Vec<usize> = (start..end).collect();
            map_indexed(indices.len(), |i| {
                let k = indices[i];
                let (batch, local) = locate(batches, k);
                let design = union.mat().tr_mul(&batch.designs[local]);
                let sol = rwf_solve(&batch.obs[local], &design, &rwf);
                (k, union.mat() * sol.x)
            })
        };
        for (k, col) in cols {
            xhat.set_column(k, &col);
        }
    }
    Ok(xhat)
}

fn stack_columns(a: &BasisMatrix, b: &BasisMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a.mat());
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b.mat());
    out
}

fn locate<'a>(batches: &'a [MeasurementBatch], k: usize) -> (&'a MeasurementBatch, usize) {
    for b in batches {
        if k >= b.column_offset && k < b.column_offset + b.q() {
            return (b, k - b.column_offset);
        }
    }
    panic!("column {k} not covered by any batch");
}
