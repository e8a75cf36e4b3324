//! Provable low-rank phase retrieval.
//!
//! Recovers a rank-r matrix `X*` from column-wise phaseless Gaussian
//! projections `y_k = |A_kᵀ x*_k|` by a truncated spectral initialization of
//! the column span followed by alternating minimization: an r-dimensional
//! phase retrieval per column, sign estimation, and a conjugate-gradient
//! least-squares subspace update. Also provides the linear (phase-known)
//! variant of the same loop, a reshaped-Wirtinger-flow baseline for
//! unstructured phase retrieval, and a mini-batch subspace tracker with
//! spectral change detection.

pub mod altmin;
pub mod cg;
pub mod clock;
pub mod error;
pub mod expm;
pub mod io;
pub mod mat;
pub mod metrics;
pub mod model;
pub mod par;
pub mod pst;
pub mod rng;
pub mod rwf;
pub mod specinit;
pub mod synth;

pub use altmin::{
    altmin_lowrap, altmin_lowrap_from, compressive_pca, estimate_phases, update_b, update_u,
    AltMinConfig, InitMode, PhaseMatrix, RankRule, RwfSchedule,
};
pub use error::{Error, Result};
pub use mat::{orthonormalize, orthonormalize_trunc, BasisMatrix};
pub use metrics::{mat_dist, phase_dist, subspace_error};
pub use model::{GroundTruth, IterRecord, MeasurementBatch, RecoveryResult};
pub use pst::{
    detect_statistic, offline_smooth, tracker_step, BatchReport, TrackerConfig, TrackerMode,
    TrackerState,
};
pub use rwf::{rwf_init, rwf_solve, rwf_step, RwfConfig, RwfSolution};
pub use specinit::{
    build_sandwich, build_yu, estimate_rank_gap, estimate_rank_threshold, init_subspace,
    ThresholdMode, YuMatrix,
};
pub use synth::{
    calibrate_gamma, gen_ground_truth, gen_linear_measurements, gen_measurements,
    gen_measurements_at, rotate_subspace, split_samples, ChangeSchedule, SamplePartition,
    SynthConfig,
};
