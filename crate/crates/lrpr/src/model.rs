//! Domain types shared by the solvers: planted ground truths, column-wise
//! Gaussian measurement batches, and recovery outputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mat::{check_finite, BasisMatrix};

/// A planted rank-r factorization `X* = U* Σ* B*` in SVD form, plus the
/// constants the analysis is parameterized by.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Left singular vectors, n×r.
    pub ustar: BasisMatrix,
    /// Singular values, nonincreasing and strictly positive.
    pub sigma: DVector<f64>,
    /// Right factor with orthonormal rows, r×q.
    pub bstar: DMatrix<f64>,
    /// The planted matrix itself, n×q.
    pub xstar: DMatrix<f64>,
    /// Condition number σ*max / σ*min.
    pub kappa: f64,
    /// Right-incoherence parameter: `sqrt(q/r) · max_k ‖b*_k‖`.
    pub mu: f64,
}

impl GroundTruth {
    /// Assemble from SVD-form factors, checking every invariant.
    pub fn from_factors(
        ustar: BasisMatrix,
        sigma: DVector<f64>,
        bstar: DMatrix<f64>,
    ) -> Result<Self> {
        let r = ustar.ncols();
        if sigma.len() != r || bstar.nrows() != r {
            return Err(Error::DimensionMismatch(format!(
                "factor ranks disagree: U* has {r} cols, {} singular values, B* has {} rows",
                sigma.len(),
                bstar.nrows()
            )));
        }
        check_finite(&bstar, "bstar")?;
        for i in 0..r {
            if !(sigma[i] > 0.0) {
                return Err(Error::InvalidConfig("singular values must be positive".into()));
            }
            if i + 1 < r && sigma[i] < sigma[i + 1] {
                return Err(Error::InvalidConfig("singular values must be nonincreasing".into()));
            }
        }
        let gram = &bstar * bstar.transpose();
        let dev = (gram - DMatrix::identity(r, r))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if dev > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "rows of B* not orthonormal: max |B*B*ᵀ - I| = {dev:.3e}"
            )));
        }
        let q = bstar.ncols();
        let scaled = DMatrix::from_fn(r, q, |i, j| sigma[i] * bstar[(i, j)]);
        let xstar = ustar.mat() * &scaled;
        let kappa = sigma[0] / sigma[r - 1];
        let max_b_norm = (0..q).fold(0.0f64, |acc, k| acc.max(bstar.column(k).norm()));
        let mu = (q as f64 / r as f64).sqrt() * max_b_norm;
        Ok(GroundTruth { ustar, sigma, bstar, xstar, kappa, mu })
    }

    pub fn n(&self) -> usize {
        self.ustar.nrows()
    }

    pub fn q(&self) -> usize {
        self.bstar.ncols()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    /// Scaled right factor `B̃* = Σ* B*` whose columns the solvers estimate.
    pub fn btilde(&self) -> DMatrix<f64> {
        let (r, q) = self.bstar.shape();
        DMatrix::from_fn(r, q, |i, j| self.sigma[i] * self.bstar[(i, j)])
    }
}

/// Per-column Gaussian designs `A_k` (n×m) and observations `y_k` for a
/// contiguous block of columns.
///
/// Phaseless batches carry `y_k = |A_kᵀ x*_k|`; `signed` marks the linear
/// (phase-known) model where `y_k = A_kᵀ x*_k` may be negative.
#[derive(Debug, Clone)]
pub struct MeasurementBatch {
    pub designs: Vec<DMatrix<f64>>,
    pub obs: Vec<DVector<f64>>,
    /// Global index of the first column, for tracking streams.
    pub column_offset: usize,
    pub signed: bool,
}

impl MeasurementBatch {
    pub fn new(
        designs: Vec<DMatrix<f64>>,
        obs: Vec<DVector<f64>>,
        column_offset: usize,
        signed: bool,
    ) -> Result<Self> {
        if designs.len() != obs.len() || designs.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} designs vs {} observation vectors",
                designs.len(),
                obs.len()
            )));
        }
        let (n, m) = designs[0].shape();
        for (k, (a, y)) in designs.iter().zip(&obs).enumerate() {
            if a.shape() != (n, m) {
                return Err(Error::DimensionMismatch(format!(
                    "design {k} is {:?}, expected ({n}, {m})",
                    a.shape()
                )));
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "observation {k} has length {}, expected {m}",
                    y.len()
                )));
            }
            check_finite(a, "design matrix")?;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NotFinite("observations".into()));
            }
            if !signed && y.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidConfig(
                    "phaseless observations must be nonnegative".into(),
                ));
            }
        }
        Ok(MeasurementBatch { designs, obs, column_offset, signed })
    }

    /// Signal dimension n.
    pub fn n(&self) -> usize {
        self.designs[0].nrows()
    }

    /// Measurements per column.
    pub fn m(&self) -> usize {
        self.designs[0].ncols()
    }

    /// Number of columns in the batch.
    pub fn q(&self) -> usize {
        self.designs.len()
    }

    /// Restrict every column to a measurement index range (sample splitting).
    pub fn measurement_slice(&self, range: std::ops::Range<usize>) -> MeasurementBatch {
        assert!(range.end <= self.m(), "measurement range out of bounds");
        let designs = self
            .designs
            .iter()
            .map(|a| a.columns(range.start, range.len()).into_owned())
            .collect();
        let obs = self
            .obs
            .iter()
            .map(|y| y.rows(range.start, range.len()).into_owned())
            .collect();
        MeasurementBatch {
            designs,
            obs,
            column_offset: self.column_offset,
            signed: self.signed,
        }
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    /// Subspace error against the truth, when a truth was supplied.
    pub se: Option<f64>,
    /// `mat_dist(X̂, X*)/‖X*‖_F`, when a truth was supplied.
    pub matdist_rel: Option<f64>,
}

/// Final output of a recovery run.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub uhat: BasisMatrix,
    pub bhat: DMatrix<f64>,
    pub xhat: DMatrix<f64>,
    pub trace: Vec<IterRecord>,
    pub rank_used: usize,
}

impl RecoveryResult {
    /// Final relative matrix distance, if the trace recorded one.
    pub fn final_matdist_rel(&self) -> Option<f64> {
        self.trace.iter().rev().find_map(|r| r.matdist_rel)
    }

    pub fn final_se(&self) -> Option<f64> {
        self.trace.iter().rev().find_map(|r| r.se)
    }
}
