//! Seeded replications of the negotiation loop, plus metrics and output.

pub mod metrics;
pub mod output;
pub mod tracking;

use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::rng::{stream, StreamRng, SCENARIO_STREAM};
use crate::scenarios::Stage;

pub use metrics::{convergence_stats, timing_report, ConvergenceStats, TimingReport};
pub use tracking::{parameter_sweep, tracking_mse, tracking_mse_with, SweepGrid, SweepResult};

/// Record of one stage (one game) of a replication.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    /// Joint action of every round.
    pub joints: Vec<Vec<usize>>,
    /// Per-player rewards of every round.
    pub rewards: Vec<Vec<f64>>,
    pub global_rewards: Vec<f64>,
    /// Scenario score of every round's joint action.
    pub scores: Vec<f64>,
    /// Whether the final joint action is a pure Nash equilibrium.
    pub converged: bool,
    /// Task completion at the final round, for scenarios that define it.
    pub success: Option<bool>,
}

impl StageTrace {
    pub fn final_joint(&self) -> Option<&[usize]> {
        self.joints.last().map(Vec::as_slice)
    }

    pub fn final_score(&self) -> Option<f64> {
        self.scores.last().copied()
    }

    /// First round (1-based) from which the joint action never changes.
    pub fn consensus_iteration(&self) -> Option<usize> {
        let last = self.joints.last()?;
        let stable_from = self.joints.iter().rposition(|j| j != last).map_or(0, |k| k + 1);
        Some(stable_from + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTrace {
    pub replication: u64,
    pub stages: Vec<StageTrace>,
    /// Wall-clock seconds spent inside each agent's learner steps.
    pub agent_seconds: Vec<f64>,
    /// Cause of a numerical or configuration failure, if any.
    pub failure: Option<String>,
}

impl ReplicationTrace {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Every stage ended at a pure Nash equilibrium.
    pub fn converged(&self) -> bool {
        !self.failed() && !self.stages.is_empty() && self.stages.iter().all(|s| s.converged)
    }

    /// Every stage ended in success; `None` when the scenario has no notion of success.
    pub fn completed(&self) -> Option<bool> {
        let flags: Option<Vec<bool>> = self.stages.iter().map(|s| s.success).collect();
        flags.map(|f| !self.failed() && !f.is_empty() && f.iter().all(|&x| x))
    }
}

fn build_learners(config: &RunConfig, stage: &Stage, rngs: &mut [StreamRng]) -> Result<Vec<Box<dyn Learner>>> {
    let counts = stage.game().action_counts();
    rngs.iter_mut()
        .enumerate()
        .map(|(i, rng)| config.learner_for(i).build(counts, i, config.believed_joint.as_deref(), rng))
        .collect()
}

/// Plays one replication: every stage runs `config.iterations` synchronous
/// rounds in which each agent steps its learner on last round's joint action.
/// Deterministic given the config and `replication`.
pub fn run_replication(config: &RunConfig, replication: u64) -> ReplicationTrace {
    let mut trace = ReplicationTrace {
        replication,
        stages: Vec::new(),
        agent_seconds: Vec::new(),
        failure: None,
    };
    if let Err(e) = play(config, replication, &mut trace) {
        trace.failure = Some(e.to_string());
    }
    trace
}

fn play(config: &RunConfig, replication: u64, trace: &mut ReplicationTrace) -> Result<()> {
    config.validate()?;
    let mut scenario_rng = stream(config.seed, replication, SCENARIO_STREAM);
    let instance = config.scenario.instantiate(&mut scenario_rng)?;
    let first = instance
        .stages
        .first()
        .ok_or_else(|| Error::Empty("scenario has no stages".into()))?;
    let players = first.game().num_players();
    let mut rngs: Vec<StreamRng> = (0..players as u64).map(|i| stream(config.seed, replication, i)).collect();
    trace.agent_seconds = vec![0.0; players];

    let mut learners: Vec<Box<dyn Learner>> = Vec::new();
    let mut carried: Option<Vec<usize>> = None;
    for stage in &instance.stages {
        let game = stage.game();
        if game.num_players() != players {
            return Err(Error::Config("all stages must have the same number of players".into()));
        }
        if learners.is_empty() || !config.carry_beliefs {
            learners = build_learners(config, stage, &mut rngs)?;
            carried = None;
        }
        let mut st = StageTrace {
            joints: Vec::with_capacity(config.iterations),
            rewards: Vec::with_capacity(config.iterations),
            global_rewards: Vec::with_capacity(config.iterations),
            scores: Vec::with_capacity(config.iterations),
            converged: false,
            success: None,
        };
        let mut previous = carried.take();
        for _ in 0..config.iterations {
            let mut joint = Vec::with_capacity(players);
            for (i, (learner, rng)) in learners.iter_mut().zip(rngs.iter_mut()).enumerate() {
                let start = Instant::now();
                let action = learner.step(game, i, previous.as_deref(), rng);
                trace.agent_seconds[i] += start.elapsed().as_secs_f64();
                joint.push(action?);
            }
            st.rewards.push(game.rewards(&joint));
            st.global_rewards.push(stage.global_reward(&joint));
            st.scores.push(stage.score(&joint)?);
            st.joints.push(joint.clone());
            previous = Some(joint);
        }
        let last = previous.expect("at least one iteration");
        st.converged = stage.is_pure_nash(&last);
        st.success = stage.success(&last);
        trace.stages.push(st);
        carried = Some(last);
    }
    Ok(())
}

/// Runs every replication of `config`, in parallel on `jobs` threads (all
/// cores when `None`). Results are ordered by replication index and do not
/// depend on the thread count.
pub fn run_replications(config: &RunConfig, jobs: Option<usize>) -> Result<Vec<ReplicationTrace>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let reps = config.replications as u64;
    Ok(pool.install(|| (0..reps).into_par_iter().map(|r| run_replication(config, r)).collect()))
}
