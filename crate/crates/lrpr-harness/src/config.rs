//! Experiment configuration: a flat JSON `experiment` object where every
//! field has a default matching the synthetic benchmark setup.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lrpr::{RankRule, RwfSchedule, ThresholdMode};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Recovery battery at fixed dimensions.
    Recover,
    /// Low-rank solver at m = n/4 vs the unstructured baseline at m = 4n.
    TimeCompare,
    /// Rank-estimation study (threshold and gap rules).
    RankEst,
    /// Linear (phase-known) recovery battery.
    PcaLinear,
    /// Subspace-tracking demo with a piecewise-constant subspace stream.
    PstDemo,
}

/// How the rank fed to the solver is chosen, in config form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRuleConfig {
    Fixed { r: usize },
    /// ω = mult · σ*²min / q, using the planted truth's σ*min.
    ThresholdSigmaMult { mult: f64 },
    /// Explicit ω.
    Threshold { omega: f64 },
    /// Largest consecutive spectral gap (parameter-free).
    Gap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,

    // Problem dimensions.
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub m: usize,
    pub seed: u64,

    // Battery controls.
    pub trials: usize,
    pub keep_best: usize,
    /// 0 = use all available parallelism.
    pub threads: usize,

    // Solver parameters.
    pub t_outer: usize,
    pub rwf_iters_from: usize,
    pub rwf_iters_to: usize,
    pub rwf_step_size: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub c_y: f64,
    pub threshold_mode: ThresholdMode,
    pub rank_rule: RankRuleConfig,
    pub sample_split: bool,
    pub early_exit_rel_change: f64,

    // time-compare extras.
    /// Baseline measurement count as a multiple of n.
    pub baseline_m_factor: f64,
    /// Solver measurement count as a fraction of n (m = n · this) when the
    /// explicit `m` is 0.
    pub solver_m_fraction: f64,
    pub target_error: f64,
    pub baseline_max_iters: usize,

    // pst-demo extras.
    pub alpha: usize,
    pub t_epochs: usize,
    pub omega_det: f64,
    pub q_full: usize,
    /// Column index of the subspace change; 0 disables the change.
    pub change_at: usize,
    /// Target subspace error of the change.
    pub change_se: f64,
    pub pst_all: bool,

    // Output.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Recover,
            n: 200,
            q: 400,
            r: 4,
            m: 80,
            seed: 7,
            trials: 100,
            keep_best: 90,
            threads: 0,
            t_outer: 10,
            rwf_iters_from: 5,
            rwf_iters_to: 30,
            rwf_step_size: 0.8,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            c_y: 9.0,
            threshold_mode: ThresholdMode::Global,
            rank_rule: RankRuleConfig::Gap,
            sample_split: false,
            early_exit_rel_change: 1e-9,
            baseline_m_factor: 4.0,
            solver_m_fraction: 0.25,
            target_error: 1e-6,
            baseline_max_iters: 300,
            alpha: 250,
            t_epochs: 8,
            omega_det: 0.6,
            q_full: 6000,
            change_at: 2992,
            change_se: 0.8,
            pst_all: false,
            out_dir: None,
        }
    }
}

#[derive(Deserialize)]
struct ConfigFile {
    experiment: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(format!("line {}: {e}", e.line())))?;
        file.experiment.validate()?;
        Ok(file.experiment)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.keep_best > self.trials {
            return Err(HarnessError::Config(format!(
                "keep_best {} exceeds trials {}",
                self.keep_best, self.trials
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("need at least one trial".into()));
        }
        if self.r == 0 || self.r > self.n.min(self.q) {
            return Err(HarnessError::Config(format!(
                "rank {} outside [1, min(n, q)]",
                self.r
            )));
        }
        if self.kind == ExperimentKind::PstDemo {
            if self.alpha < self.r {
                return Err(HarnessError::Config("alpha must be at least the rank".into()));
            }
            if self.q_full % self.alpha != 0 {
                return Err(HarnessError::Config(format!(
                    "q_full {} must be a multiple of alpha {}",
                    self.q_full, self.alpha
                )));
            }
            if self.change_at != 0 && self.change_at >= self.q_full {
                return Err(HarnessError::Config("change_at must lie inside the stream".into()));
            }
        }
        Ok(())
    }

    pub fn rwf_schedule(&self) -> RwfSchedule {
        RwfSchedule::Linear { from: self.rwf_iters_from, to: self.rwf_iters_to }
    }

    /// Resolve the configured rank rule against a planted truth.
    pub fn rank_rule(&self, sigma_min: f64, q: usize) -> RankRule {
        match self.rank_rule {
            RankRuleConfig::Fixed { r } => RankRule::Fixed { r },
            RankRuleConfig::Threshold { omega } => RankRule::Threshold { omega },
            RankRuleConfig::ThresholdSigmaMult { mult } => {
                RankRule::Threshold { omega: mult * sigma_min * sigma_min / q as f64 }
            }
            RankRuleConfig::Gap => RankRule::MaxGap,
        }
    }

    pub fn altmin(&self, sigma_min: f64) -> lrpr::AltMinConfig {
        lrpr::AltMinConfig {
            t_outer: self.t_outer,
            rwf_schedule: self.rwf_schedule(),
            rwf_step_size: self.rwf_step_size,
            rwf_init_trunc: 3.0,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            rank: self.rank_rule(sigma_min, self.q),
            sample_split: self.sample_split,
            linear_mode: self.kind == ExperimentKind::PcaLinear,
            c_y: self.c_y,
            threshold_mode: self.threshold_mode,
            init: lrpr::InitMode::Spectral,
            early_exit_rel_change: self.early_exit_rel_change,
        }
    }

    pub fn tracker(&self) -> lrpr::TrackerConfig {
        lrpr::TrackerConfig {
            alpha: self.alpha,
            t_epochs: self.t_epochs,
            omega_det: self.omega_det,
            rank: self.r,
            pst_all: self.pst_all,
            rwf_schedule: self.rwf_schedule(),
            rwf_step_size: self.rwf_step_size,
            rwf_init_trunc: 3.0,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            c_y: self.c_y,
            threshold_mode: self.threshold_mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_validate() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": {}}"#).unwrap();
        assert_eq!(cfg.n, 200);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.keep_best, 90);
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let err = ExperimentConfig::from_json(r#"{"experiment": {"bogus": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("line"));
    }

    #[test]
    fn rejects_keep_best_above_trials() {
        let err = ExperimentConfig::from_json(
            r#"{"experiment": {"trials": 5, "keep_best": 6}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("keep_best"));
    }

    #[test]
    fn kind_and_rank_rule_spelling() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": {"kind": "pst_demo", "rank_rule": {"fixed": {"r": 2}}, "q_full": 500, "alpha": 100, "r": 2, "change_at": 300}}"#,
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::PstDemo);
        assert!(matches!(cfg.rank_rule, RankRuleConfig::Fixed { r: 2 }));
    }
}
