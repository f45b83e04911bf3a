//! Experiment configuration files.
//!
//! Files are TOML with an explicit `schema_version`; unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::filters::ZetaSchedule;
use crate::learners::{LearnerConfig, LearnerKind};
use crate::scenarios::{ScenarioConfig, TrackingKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Replaces the default learner for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentOverride {
    pub agent: usize,
    pub learner: LearnerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    /// Learner used by every agent without an override.
    pub learner: LearnerConfig,
    #[serde(default)]
    pub agents: Vec<AgentOverride>,
    /// Negotiation rounds per game (per checkpoint in multi-stage scenarios).
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial beliefs put the most weight on this joint action.
    #[serde(default)]
    pub believed_joint: Option<Vec<usize>>,
    /// Keep learners across the stages of a multi-stage scenario instead of
    /// rebuilding them with fresh beliefs.
    #[serde(default)]
    pub carry_beliefs: bool,
}

fn default_iterations() -> usize {
    50
}

fn default_replications() -> usize {
    100
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig, learner: LearnerConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            learner,
            agents: Vec::new(),
            iterations: default_iterations(),
            replications: default_replications(),
            seed: 0,
            believed_joint: None,
            carry_beliefs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        if self.iterations == 0 {
            return config("iterations must be at least 1");
        }
        if self.replications == 0 {
            return config("replications must be at least 1");
        }
        self.learner.validate()?;
        for o in &self.agents {
            o.learner.validate()?;
        }
        Ok(())
    }

    pub fn learner_for(&self, agent: usize) -> &LearnerConfig {
        self.agents
            .iter()
            .rev()
            .find(|o| o.agent == agent)
            .map(|o| &o.learner)
            .unwrap_or(&self.learner)
    }

    /// Label for the learner column of summaries, e.g. `ekf_fp` or `mixed`.
    pub fn learner_label(&self) -> String {
        let kind = self.learner.kind;
        if self.agents.iter().all(|o| o.learner.kind == kind) {
            kind.name().to_string()
        } else {
            "mixed".to_string()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Grid over the EKF noise parameters for the opponent-tracking benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub xi: Vec<f64>,
    pub zeta: Vec<ZetaSchedule>,
    #[serde(default = "default_sweep_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_tracking_kinds")]
    pub tracking: Vec<TrackingKind>,
    #[serde(default = "default_sweep_learner")]
    pub learner: LearnerKind,
    /// Remaining filter parameters (`psi`, `tau`); `xi` and `zeta` come from the grid.
    #[serde(default)]
    pub psi: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

fn default_sweep_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_horizon() -> u64 {
    5000
}

fn default_tracking_kinds() -> Vec<TrackingKind> {
    vec![TrackingKind::Sinusoid, TrackingKind::Abrupt]
}

fn default_sweep_learner() -> LearnerKind {
    LearnerKind::EkfFp
}

/// Fixed noise values of the default grid, log-spaced over [0.005, 0.5].
pub const DEFAULT_GRID: [f64; 7] = [0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5];

impl Default for SweepConfig {
    fn default() -> Self {
        let mut zeta: Vec<ZetaSchedule> = DEFAULT_GRID.iter().map(|&z| ZetaSchedule::Fixed(z)).collect();
        zeta.push(ZetaSchedule::InverseT);
        Self {
            schema_version: SCHEMA_VERSION,
            xi: DEFAULT_GRID.to_vec(),
            zeta,
            seeds: default_sweep_seeds(),
            horizon: default_horizon(),
            tracking: default_tracking_kinds(),
            learner: default_sweep_learner(),
            psi: None,
            tau: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        if self.xi.is_empty() || self.zeta.is_empty() {
            return config("sweep grid must have at least one xi and one zeta value");
        }
        if self.xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return config("xi grid values must be positive");
        }
        if self.zeta.iter().any(|z| matches!(z, ZetaSchedule::Fixed(v) if !(*v > 0.0 && v.is_finite()))) {
            return config("zeta grid values must be positive");
        }
        if self.seeds.is_empty() {
            return config("sweep needs at least one seed");
        }
        if self.tracking.is_empty() {
            return config("sweep needs at least one tracking scenario");
        }
        if self.horizon == 0 {
            return config("horizon must be at least 1");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }
}

fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return config(format!("unsupported schema_version {version}, expected {SCHEMA_VERSION}"));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN: &str = r#"
schema_version = 1
iterations = 40
replications = 10
seed = 7
believed_joint = [0, 1]

[scenario]
kind = "coordination2"

[learner]
kind = "ekf_fp"
xi_tilde = 0.1
zeta = "1/t"

[[agents]]
agent = 1
learner = { kind = "pf_fp", particles = 100 }
"#;

    #[test]
    fn run_config_round_trips() {
        let cfg = RunConfig::from_toml(RUN).unwrap();
        assert_eq!(cfg.iterations, 40);
        assert_eq!(cfg.learner.zeta, ZetaSchedule::InverseT);
        assert_eq!(cfg.learner_for(1).kind, LearnerKind::PfFp);
        assert_eq!(cfg.learner_for(0).kind, LearnerKind::EkfFp);
        assert_eq!(cfg.learner_label(), "mixed");
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn typos_and_bad_values_are_rejected() {
        let typo = RUN.replace("xi_tilde", "xi_tidle");
        let err = RunConfig::from_toml(&typo).unwrap_err().to_string();
        assert!(err.contains("xi_tidle"), "{err}");
        assert!(RunConfig::from_toml(&RUN.replace("iterations = 40", "iterations = 0")).is_err());
        assert!(RunConfig::from_toml(&RUN.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(RunConfig::from_toml(&RUN.replace("\"ekf_fp\"", "\"kalman\"")).is_err());
    }

    #[test]
    fn default_sweep_grid_includes_inverse_t() {
        let s = SweepConfig::default();
        s.validate().unwrap();
        assert_eq!(s.zeta.len(), 8);
        assert_eq!(s.zeta.last(), Some(&ZetaSchedule::InverseT));
        let parsed = SweepConfig::from_toml("schema_version = 1\nxi = [0.1]\nzeta = [\"1/t\", 0.05]").unwrap();
        assert_eq!(parsed.zeta, vec![ZetaSchedule::InverseT, ZetaSchedule::Fixed(0.05)]);
        assert!(SweepConfig::from_toml("schema_version = 1\nxi = []\nzeta = [0.1]").is_err());
    }
}
