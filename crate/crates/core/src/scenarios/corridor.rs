//! Two robots carrying an object through a corridor, one coordination game
//! per checkpoint.
//!
//! Moves: Action 1 goes forward, Actions 2-3 are right-turn variants and
//! Actions 4-5 left-turn variants. Feasibility is declared per checkpoint.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::MatrixGame;

pub const NUM_MOVES: usize = 5;

/// Joint moves, numbered from 1 as in "Action 1", that let the task proceed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub feasible: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorSpec {
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<Checkpoint>,
    /// Distance between dynamically generated checkpoints, in meters.
    #[serde(default = "default_step")]
    pub step_length: f64,
    #[serde(default = "default_reward")]
    pub success_reward: f64,
}

fn default_step() -> f64 {
    5.0
}

fn default_reward() -> f64 {
    1.0
}

/// The 27-checkpoint corridor: straight segments where only moving
/// forward together succeeds, and four turns with two coordinated options.
fn default_checkpoints() -> Vec<Checkpoint> {
    let straight = Checkpoint { feasible: vec![[1, 1]] };
    let right = Checkpoint {
        feasible: vec![[2, 2], [3, 3]],
    };
    let left = Checkpoint {
        feasible: vec![[4, 4], [5, 5]],
    };
    (1..=27)
        .map(|k| match k {
            4 | 17 | 21 => right.clone(),
            12 => left.clone(),
            _ => straight.clone(),
        })
        .collect()
}

impl Default for CorridorSpec {
    fn default() -> Self {
        Self {
            checkpoints: default_checkpoints(),
            step_length: default_step(),
            success_reward: default_reward(),
        }
    }
}

impl CorridorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.checkpoints.is_empty() {
            return config("corridor needs at least one checkpoint");
        }
        if !(self.success_reward > 0.0) {
            return config("success reward must be positive");
        }
        if !(self.step_length > 0.0) {
            return config("step length must be positive");
        }
        for (k, cp) in self.checkpoints.iter().enumerate() {
            if cp.feasible.iter().flatten().any(|&m| m == 0 || m > NUM_MOVES) {
                return config(format!("checkpoint {}: moves are numbered 1..={NUM_MOVES}", k + 1));
            }
            if !cp.feasible.iter().any(|[a, b]| a == b) {
                return config(format!("checkpoint {} has no feasible coordinated move", k + 1));
            }
        }
        Ok(())
    }

    /// Total path length covered when every checkpoint is passed.
    pub fn path_length(&self) -> f64 {
        self.step_length * self.checkpoints.len() as f64
    }
}

/// Identical-interest game at `checkpoint`: both robots get the success
/// reward iff they pick the same move and that joint move is feasible.
pub fn build_corridor_checkpoint_game(spec: &CorridorSpec, checkpoint: usize) -> Result<MatrixGame> {
    spec.validate()?;
    let cp = spec
        .checkpoints
        .get(checkpoint)
        .ok_or_else(|| crate::error::Error::Config(format!("checkpoint {checkpoint} out of range")))?;
    let c = spec.success_reward;
    let reward = move |j: &[usize]| {
        let feasible = cp.feasible.contains(&[j[0] + 1, j[1] + 1]);
        if feasible && j[0] == j[1] {
            c
        } else {
            0.0
        }
    };
    let names: Vec<String> = (1..=NUM_MOVES).map(|k| format!("Action {k}")).collect();
    MatrixGame::from_fn(vec![NUM_MOVES, NUM_MOVES], |j| {
        let r = reward(j);
        vec![r, r]
    })?
    .with_potential_fn(reward)
    .with_labels(vec![names.clone(), names])
}
