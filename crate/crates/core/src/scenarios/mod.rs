//! Benchmark scenarios and their per-replication instantiation.

pub mod corridor;
pub mod sensor;
pub mod symmetric;
pub mod tracking;
pub mod warehouse;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{is_pure_nash, Game, MatrixGame, TOLERANCE};

pub use corridor::{build_corridor_checkpoint_game, Checkpoint, CorridorSpec};
pub use sensor::{build_sensor_game, sensor_score, SensorEvent, SensorGame, SensorNetSpec, SensorParams};
pub use symmetric::{build_symmetric_game, coordination_game, matching_pennies, three_action_game, SymmetricKind};
pub use tracking::{tracking_strategy, TrackingKind, TrackingSpec};
pub use warehouse::{build_warehouse_game, warehouse_score, WarehouseGame, WarehouseParams, WarehouseSpec};

/// Scenario selection as it appears in run configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    /// Two-action coordination game.
    Coordination2,
    /// Three-action force-matching game.
    Symmetric3,
    MatchingPennies,
    /// Randomly generated warehouse, redrawn per replication.
    Warehouse(WarehouseParams),
    /// A fixed warehouse layout.
    WarehouseInstance(WarehouseSpec),
    Corridor(CorridorSpec),
    /// Randomly generated sensor network, redrawn per replication.
    Sensor(SensorParams),
    /// A fixed sensor network layout.
    SensorInstance(SensorNetSpec),
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::Coordination2 => "coordination2",
            ScenarioConfig::Symmetric3 => "symmetric3",
            ScenarioConfig::MatchingPennies => "matching_pennies",
            ScenarioConfig::Warehouse(_) => "warehouse",
            ScenarioConfig::WarehouseInstance(_) => "warehouse_instance",
            ScenarioConfig::Corridor(_) => "corridor",
            ScenarioConfig::Sensor(_) => "sensor",
            ScenarioConfig::SensorInstance(_) => "sensor_instance",
        }
    }

    /// Builds the games for one replication. Random scenarios draw their
    /// layout from `rng`; fixed ones ignore it.
    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ScenarioInstance> {
        let stages = match self {
            ScenarioConfig::Coordination2 => vec![Stage::Matrix(coordination_game())],
            ScenarioConfig::Symmetric3 => vec![Stage::Matrix(three_action_game())],
            ScenarioConfig::MatchingPennies => vec![Stage::Matrix(matching_pennies())],
            ScenarioConfig::Warehouse(params) => vec![Stage::Warehouse(build_warehouse_game(params.sample(rng)?)?)],
            ScenarioConfig::WarehouseInstance(spec) => vec![Stage::Warehouse(build_warehouse_game(spec.clone())?)],
            ScenarioConfig::Corridor(spec) => (0..spec.checkpoints.len())
                .map(|k| {
                    Ok(Stage::Checkpoint {
                        game: build_corridor_checkpoint_game(spec, k)?,
                        success_reward: spec.success_reward,
                    })
                })
                .collect::<Result<_>>()?,
            ScenarioConfig::Sensor(params) => vec![Stage::Sensor(build_sensor_game(params.sample(rng)?)?)],
            ScenarioConfig::SensorInstance(spec) => vec![Stage::Sensor(build_sensor_game(spec.clone())?)],
        };
        Ok(ScenarioInstance { stages })
    }
}

/// One game played to completion during a replication.
#[derive(Debug, Clone)]
pub enum Stage {
    Matrix(MatrixGame),
    Checkpoint { game: MatrixGame, success_reward: f64 },
    Warehouse(WarehouseGame),
    Sensor(SensorGame),
}

impl Stage {
    pub fn game(&self) -> &dyn Game {
        match self {
            Stage::Matrix(g) | Stage::Checkpoint { game: g, .. } => g,
            Stage::Warehouse(g) => g,
            Stage::Sensor(g) => g,
        }
    }

    /// Team-level reward: the mean player reward for matrix games, the
    /// shared global reward otherwise.
    pub fn global_reward(&self, joint: &[usize]) -> f64 {
        match self {
            Stage::Matrix(g) | Stage::Checkpoint { game: g, .. } => {
                let r = g.rewards(joint);
                r.iter().sum::<f64>() / r.len() as f64
            }
            Stage::Warehouse(g) => g.global_reward(joint),
            Stage::Sensor(g) => g.global_reward(joint),
        }
    }

    /// Scenario-specific score: the warehouse percentage score, the sensor
    /// reward as a fraction of the all-awake ceiling, the team reward otherwise.
    pub fn score(&self, joint: &[usize]) -> Result<f64> {
        match self {
            Stage::Warehouse(g) => warehouse_score(joint, g),
            Stage::Sensor(g) => Ok(sensor_score(joint, g)),
            _ => Ok(self.global_reward(joint)),
        }
    }

    /// Whether the joint action completes the stage's task, where the
    /// scenario defines one.
    pub fn success(&self, joint: &[usize]) -> Option<bool> {
        match self {
            Stage::Checkpoint { game, success_reward } => Some(game.reward(0, joint) >= success_reward - TOLERANCE),
            _ => None,
        }
    }

    pub fn is_pure_nash(&self, joint: &[usize]) -> bool {
        is_pure_nash(self.game(), joint)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioInstance {
    pub stages: Vec<Stage>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn configs_parse_from_toml() {
        let c: ScenarioConfig = toml::from_str("kind = \"coordination2\"").unwrap();
        assert_eq!(c, ScenarioConfig::Coordination2);
        let c: ScenarioConfig = toml::from_str("kind = \"warehouse\"\nnum_robots = 5\nnum_areas = 5").unwrap();
        assert_eq!(c, ScenarioConfig::Warehouse(WarehouseParams::new(5, 5)));
        let c: ScenarioConfig = toml::from_str("kind = \"corridor\"").unwrap();
        assert_eq!(c, ScenarioConfig::Corridor(CorridorSpec::default()));
        let c: ScenarioConfig = toml::from_str("kind = \"sensor\"").unwrap();
        assert_eq!(c, ScenarioConfig::Sensor(SensorParams::default()));
    }

    #[test]
    fn unknown_scenario_keys_are_rejected() {
        assert!(toml::from_str::<ScenarioConfig>("kind = \"warehouse\"\nnum_robots = 5\nnum_areas = 5\nrobts = 3").is_err());
        assert!(toml::from_str::<ScenarioConfig>("kind = \"teleport\"").is_err());
    }

    #[test]
    fn corridor_instance_has_one_stage_per_checkpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inst = ScenarioConfig::Corridor(CorridorSpec::default()).instantiate(&mut rng).unwrap();
        assert_eq!(inst.stages.len(), 27);
        assert_eq!(inst.stages[0].success(&[0, 0]), Some(true));
        assert_eq!(inst.stages[3].success(&[0, 0]), Some(false));
        assert_eq!(inst.stages[3].success(&[2, 2]), Some(true));
    }

    #[test]
    fn matrix_stage_reports_mean_reward() {
        let stage = Stage::Matrix(matching_pennies());
        assert_eq!(stage.global_reward(&[0, 0]), 0.0);
        let stage = Stage::Matrix(coordination_game());
        assert_eq!(stage.score(&[1, 1]).unwrap(), 1.0);
        assert!(stage.is_pure_nash(&[1, 1]));
        assert_eq!(stage.success(&[1, 1]), None);
    }
}
