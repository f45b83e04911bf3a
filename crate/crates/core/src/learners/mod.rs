//! Per-agent decision processes with a uniform step interface.
//!
//! Fictitious-play learners keep one [`OpponentModel`] per opponent, combine
//! the estimated strategies into a product profile and best-respond to it.
//! Baselines ignore observations entirely.

pub mod models;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::filters::ekf::{GaussianBelief, NoiseConfig};
use crate::filters::linalg::Matrix;
use crate::filters::softmax::softmax_probs;
use crate::game::{argmax_with_tie_break, best_response, expected_rewards, Game, JointMixedProfile, MixedStrategy, TieBreak};
use crate::rng::StreamRng;

pub use models::{CountingModel, EkfModel, OpponentModel, ParticleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    ClassicFp,
    EkfFp,
    PfFp,
    Greedy,
    Random,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::ClassicFp => "classic_fp",
            LearnerKind::EkfFp => "ekf_fp",
            LearnerKind::PfFp => "pf_fp",
            LearnerKind::Greedy => "greedy",
            LearnerKind::Random => "random",
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classic_fp" => LearnerKind::ClassicFp,
            "ekf_fp" => LearnerKind::EkfFp,
            "pf_fp" => LearnerKind::PfFp,
            "greedy" => LearnerKind::Greedy,
            "random" => LearnerKind::Random,
            other => return config(format!("unknown learner kind {other:?}")),
        })
    }
}

/// How an action is picked from expected rewards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum DecisionRule {
    #[default]
    BestResponse,
    /// Samples from a softmax over expected rewards.
    SmoothBestResponse { temperature: f64 },
}

/// Where initial propensity means come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMean {
    /// `Q0 ~ N(0, I)`
    #[default]
    Random,
    Zero,
}

/// One agent's step in the synchronous negotiation loop.
pub trait Learner: Send {
    /// Chooses this round's action. `observed` is last round's joint action
    /// (absent on the first round); the agent's own entry is ignored.
    fn step(&mut self, game: &dyn Game, player: usize, observed: Option<&[usize]>, rng: &mut StreamRng) -> Result<usize>;

    fn kind(&self) -> LearnerKind;

    /// Current estimated strategy of every player, own slot uniform.
    fn beliefs(&self) -> Option<Vec<MixedStrategy>> {
        None
    }
}

/// Fictitious play with a pluggable opponent model.
#[derive(Debug, Clone)]
pub struct FpLearner<M> {
    kind: LearnerKind,
    /// `models[j]` is `None` for the learner's own slot.
    models: Vec<Option<M>>,
    decision: DecisionRule,
    tie_break: TieBreak,
    last_action: Option<usize>,
    t: u64,
}

pub type ClassicFpLearner = FpLearner<CountingModel>;
pub type EkfFpLearner = FpLearner<EkfModel>;
pub type PfFpLearner = FpLearner<ParticleModel>;

impl<M: OpponentModel> FpLearner<M> {
    pub fn new(kind: LearnerKind, models: Vec<Option<M>>, decision: DecisionRule, tie_break: TieBreak) -> Self {
        Self {
            kind,
            models,
            decision,
            tie_break,
            last_action: None,
            t: 0,
        }
    }

    pub fn model(&self, opponent: usize) -> Option<&M> {
        self.models.get(opponent).and_then(Option::as_ref)
    }

    pub fn last_action(&self) -> Option<usize> {
        self.last_action
    }

    /// Rounds played so far.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    fn profile(&self) -> Result<JointMixedProfile> {
        self.models
            .iter()
            .map(|m| match m {
                Some(m) => m.strategy(),
                None => Ok(MixedStrategy::uniform(1)),
            })
            .collect::<Result<Vec<_>>>()
            .map(JointMixedProfile::new)
    }

    fn check_shape(&self, game: &dyn Game, player: usize) -> Result<()> {
        let counts = game.action_counts();
        if self.models.len() != counts.len() || self.models.get(player).map_or(true, Option::is_some) {
            return config(format!("learner for player {player} is not shaped for this game"));
        }
        for (j, m) in self.models.iter().enumerate() {
            if let Some(m) = m {
                if m.num_actions() != counts[j] {
                    return config(format!("model of player {j} has {} actions, game has {}", m.num_actions(), counts[j]));
                }
            }
        }
        Ok(())
    }
}

impl<M: OpponentModel> Learner for FpLearner<M> {
    fn step(&mut self, game: &dyn Game, player: usize, observed: Option<&[usize]>, rng: &mut StreamRng) -> Result<usize> {
        self.check_shape(game, player)?;
        for (j, model) in self.models.iter_mut().enumerate() {
            if let Some(model) = model {
                model.advance(observed.map(|o| o[j]), rng)?;
            }
        }
        let mut profile = self.profile()?;
        profile.set(player, MixedStrategy::uniform(game.action_counts()[player]));
        let action = decide(game, player, &profile, self.decision, self.tie_break, self.last_action, rng)?;
        self.last_action = Some(action);
        self.t += 1;
        Ok(action)
    }

    fn kind(&self) -> LearnerKind {
        self.kind
    }

    fn beliefs(&self) -> Option<Vec<MixedStrategy>> {
        self.profile().ok().map(|p| p.strategies().to_vec())
    }
}

fn decide(
    game: &dyn Game,
    player: usize,
    profile: &JointMixedProfile,
    rule: DecisionRule,
    tie_break: TieBreak,
    previous: Option<usize>,
    rng: &mut StreamRng,
) -> Result<usize> {
    match rule {
        DecisionRule::BestResponse => best_response(game, player, profile, tie_break, previous),
        DecisionRule::SmoothBestResponse { temperature } => {
            let values = expected_rewards(game, player, profile)?;
            let probs = softmax_probs(&values, temperature)?;
            Ok(sample_index(&probs, rng))
        }
    }
}

fn sample_index(probs: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Best response to uniformly mixing opponents, ignoring observations.
#[derive(Debug, Clone, Default)]
pub struct GreedyLearner {
    tie_break: TieBreak,
    last_action: Option<usize>,
}

impl GreedyLearner {
    pub fn new(tie_break: TieBreak) -> Self {
        Self {
            tie_break,
            last_action: None,
        }
    }
}

impl Learner for GreedyLearner {
    fn step(&mut self, game: &dyn Game, player: usize, _observed: Option<&[usize]>, rng: &mut StreamRng) -> Result<usize> {
        let action = baseline_step(LearnerKind::Greedy, game, player, self.tie_break, self.last_action, rng)?;
        self.last_action = Some(action);
        Ok(action)
    }

    fn kind(&self) -> LearnerKind {
        LearnerKind::Greedy
    }
}

/// Uniformly random action every round.
#[derive(Debug, Clone, Default)]
pub struct RandomLearner;

impl Learner for RandomLearner {
    fn step(&mut self, game: &dyn Game, player: usize, _observed: Option<&[usize]>, rng: &mut StreamRng) -> Result<usize> {
        baseline_step(LearnerKind::Random, game, player, TieBreak::Stay, None, rng)
    }

    fn kind(&self) -> LearnerKind {
        LearnerKind::Random
    }
}

/// Greedy or random baseline action.
pub fn baseline_step(
    kind: LearnerKind,
    game: &dyn Game,
    player: usize,
    tie_break: TieBreak,
    previous: Option<usize>,
    rng: &mut StreamRng,
) -> Result<usize> {
    let n = game.action_counts()[player];
    match kind {
        LearnerKind::Greedy => {
            let profile = JointMixedProfile::uniform(game.action_counts());
            let values = expected_rewards(game, player, &profile)?;
            Ok(argmax_with_tie_break(&values, tie_break, previous))
        }
        LearnerKind::Random => Ok(rng.random_range(0..n)),
        other => config(format!("{other} is not a baseline")),
    }
}

/// Learner parameters as they appear in run configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    #[serde(default = "default_xi")]
    pub xi_tilde: f64,
    #[serde(default = "default_psi")]
    pub psi: f64,
    #[serde(default = "default_zeta")]
    pub zeta: crate::filters::ZetaSchedule,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_resample_threshold")]
    pub resample_threshold: f64,
    #[serde(default)]
    pub initial_mean: InitialMean,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub decision: DecisionRule,
}

fn default_xi() -> f64 {
    NoiseConfig::default().xi_tilde
}
fn default_psi() -> f64 {
    NoiseConfig::default().psi
}
fn default_zeta() -> crate::filters::ZetaSchedule {
    NoiseConfig::default().zeta
}
fn default_tau() -> f64 {
    NoiseConfig::default().tau
}
fn default_particles() -> usize {
    500
}
fn default_resample_threshold() -> f64 {
    0.5
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            xi_tilde: default_xi(),
            psi: default_psi(),
            zeta: default_zeta(),
            tau: default_tau(),
            particles: default_particles(),
            resample_threshold: default_resample_threshold(),
            initial_mean: InitialMean::Random,
            tie_break: TieBreak::Stay,
            decision: DecisionRule::BestResponse,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            xi_tilde: self.xi_tilde,
            psi: self.psi,
            zeta: self.zeta,
            tau: self.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise().validate()?;
        if self.kind == LearnerKind::PfFp {
            if self.particles == 0 {
                return config("particles must be at least 1");
            }
            if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
                return config("resample_threshold must be in (0, 1]");
            }
        }
        if let DecisionRule::SmoothBestResponse { temperature } = self.decision {
            if !(temperature > 0.0) {
                return config("smooth best response temperature must be positive");
            }
        }
        Ok(())
    }

    /// Builds the learner for `player`. When `believed_joint` is given, each
    /// initial opponent belief is arranged so that the opponent's entry in it
    /// is the most likely action.
    pub fn build(
        &self,
        action_counts: &[usize],
        player: usize,
        believed_joint: Option<&[usize]>,
        rng: &mut StreamRng,
    ) -> Result<Box<dyn Learner>> {
        self.validate()?;
        if let Some(joint) = believed_joint {
            if joint.len() != action_counts.len() || joint.iter().zip(action_counts).any(|(&a, &n)| a >= n) {
                return config(format!("believed joint action {joint:?} does not fit the game"));
            }
        }
        let believed = |j: usize| believed_joint.map(|b| b[j]);
        let opponents = |build: &mut dyn FnMut(usize, usize) -> Result<()>| -> Result<()> {
            for (j, &n) in action_counts.iter().enumerate() {
                if j != player {
                    build(j, n)?;
                }
            }
            Ok(())
        };
        Ok(match self.kind {
            LearnerKind::ClassicFp => {
                let mut models: Vec<Option<CountingModel>> = vec![None; action_counts.len()];
                opponents(&mut |j, n| {
                    let mut w = vec![1.0; n];
                    if let Some(k) = believed(j) {
                        w[k] += 1.0;
                    }
                    models[j] = Some(CountingModel::new(w)?);
                    Ok(())
                })?;
                Box::new(FpLearner::new(self.kind, models, self.decision, self.tie_break))
            }
            LearnerKind::EkfFp => {
                let mut models: Vec<Option<EkfModel>> = vec![None; action_counts.len()];
                opponents(&mut |j, n| {
                    let mean = initial_mean(self.initial_mean, n, believed(j), rng);
                    let belief = GaussianBelief::new(mean, Matrix::identity(n))?;
                    models[j] = Some(EkfModel::new(belief, self.noise())?);
                    Ok(())
                })?;
                Box::new(FpLearner::new(self.kind, models, self.decision, self.tie_break))
            }
            LearnerKind::PfFp => {
                let mut models: Vec<Option<ParticleModel>> = vec![None; action_counts.len()];
                opponents(&mut |j, n| {
                    let center = match believed(j) {
                        Some(k) => initial_mean(InitialMean::Random, n, Some(k), rng),
                        None => vec![0.0; n],
                    };
                    models[j] = Some(ParticleModel::new(&center, self.particles, self.noise(), self.resample_threshold, rng)?);
                    Ok(())
                })?;
                Box::new(FpLearner::new(self.kind, models, self.decision, self.tie_break))
            }
            LearnerKind::Greedy => Box::new(GreedyLearner::new(self.tie_break)),
            LearnerKind::Random => Box::new(RandomLearner),
        })
    }
}

/// Initial propensity mean. With a believed action, the largest sampled
/// component is swapped into that action's slot.
pub fn initial_mean(mode: InitialMean, n: usize, believed: Option<usize>, rng: &mut StreamRng) -> Vec<f64> {
    let mut mean: Vec<f64> = match mode {
        InitialMean::Random => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
        InitialMean::Zero => vec![0.0; n],
    };
    if let Some(k) = believed {
        let argmax = (0..n).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap_or(k);
        mean.swap(argmax, k);
        if mode == InitialMean::Zero {
            mean[k] = 1.0;
        }
    }
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::is_pure_nash;
    use crate::scenarios::symmetric::{coordination_game, three_action_game};
    use rand::SeedableRng;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    #[test]
    fn learner_kind_parses() {
        assert_eq!("ekf_fp".parse::<LearnerKind>().unwrap(), LearnerKind::EkfFp);
        assert!("kalman".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn greedy_on_symmetric_game_is_a_tie_resolved_by_rule() {
        let g = coordination_game();
        let mut r = rng(0);
        assert_eq!(baseline_step(LearnerKind::Greedy, &g, 0, TieBreak::Stay, Some(1), &mut r).unwrap(), 1);
        assert_eq!(baseline_step(LearnerKind::Greedy, &g, 0, TieBreak::LowestIndex, Some(1), &mut r).unwrap(), 0);
    }

    #[test]
    fn random_baseline_is_uniform() {
        let g = three_action_game();
        let mut r = rng(42);
        let mut counts = [0usize; 3];
        let draws = 10_000;
        for _ in 0..draws {
            counts[baseline_step(LearnerKind::Random, &g, 0, TieBreak::Stay, None, &mut r).unwrap()] += 1;
        }
        let p = 1.0 / 3.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn believed_action_becomes_argmax() {
        let mut r = rng(8);
        for k in 0..4 {
            let m = initial_mean(InitialMean::Random, 4, Some(k), &mut r);
            assert!((0..4).all(|j| m[k] >= m[j]));
            let z = initial_mean(InitialMean::Zero, 4, Some(k), &mut r);
            assert_eq!(z[k], 1.0);
        }
    }

    fn play(learners: &mut [Box<dyn Learner>], game: &dyn Game, rounds: usize, rng: &mut StreamRng) -> Vec<Vec<usize>> {
        let mut history: Vec<Vec<usize>> = Vec::new();
        for _ in 0..rounds {
            let prev = history.last().cloned();
            let joint: Vec<usize> = learners
                .iter_mut()
                .enumerate()
                .map(|(i, l)| l.step(game, i, prev.as_deref(), rng).unwrap())
                .collect();
            history.push(joint);
        }
        history
    }

    #[test]
    fn ekf_fp_absorbed_at_strict_equilibrium() {
        let g = coordination_game();
        let cfg = LearnerConfig::new(LearnerKind::EkfFp);
        for seed in 0..20 {
            let mut r = rng(seed);
            let mut learners: Vec<_> = (0..2).map(|i| cfg.build(g.action_counts(), i, Some(&[0, 0]), &mut r).unwrap()).collect();
            let history = play(&mut learners, &g, 200, &mut r);
            assert!(history.iter().all(|j| j == &[0, 0]), "seed {seed} left (U,L)");
        }
    }

    #[test]
    fn ekf_fp_steps_are_deterministic() {
        let g = three_action_game();
        let cfg = LearnerConfig::new(LearnerKind::EkfFp);
        let run = || {
            let mut r = rng(77);
            let mut learners: Vec<_> = (0..2).map(|i| cfg.build(g.action_counts(), i, None, &mut r).unwrap()).collect();
            play(&mut learners, &g, 30, &mut r)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn every_kind_plays_valid_actions() {
        let g = three_action_game();
        for kind in [LearnerKind::ClassicFp, LearnerKind::EkfFp, LearnerKind::PfFp, LearnerKind::Greedy, LearnerKind::Random] {
            let mut cfg = LearnerConfig::new(kind);
            cfg.particles = 50;
            let mut r = rng(4);
            let mut learners: Vec<_> = (0..2).map(|i| cfg.build(g.action_counts(), i, None, &mut r).unwrap()).collect();
            for joint in play(&mut learners, &g, 10, &mut r) {
                assert!(joint.iter().all(|&a| a < 3));
            }
            if kind != LearnerKind::Greedy && kind != LearnerKind::Random {
                let beliefs = learners[0].beliefs().unwrap();
                assert_eq!(beliefs.len(), 2);
                assert_eq!(beliefs[1].len(), 3);
            }
        }
    }

    #[test]
    fn classic_fp_converges_on_coordination_game() {
        let g = coordination_game();
        let cfg = LearnerConfig::new(LearnerKind::ClassicFp);
        let mut r = rng(1);
        let mut learners: Vec<_> = (0..2).map(|i| cfg.build(g.action_counts(), i, Some(&[0, 0]), &mut r).unwrap()).collect();
        let history = play(&mut learners, &g, 10, &mut r);
        assert!(is_pure_nash(&g, history.last().unwrap()));
    }

    #[test]
    fn smooth_best_response_prefers_higher_rewards() {
        let g = coordination_game();
        let mut cfg = LearnerConfig::new(LearnerKind::ClassicFp);
        cfg.decision = DecisionRule::SmoothBestResponse { temperature: 0.05 };
        let mut r = rng(3);
        let mut l = cfg.build(g.action_counts(), 0, Some(&[0, 0]), &mut r).unwrap();
        let mut hits = 0;
        for _ in 0..200 {
            if l.step(&g, 0, Some(&[0, 0]), &mut r).unwrap() == 0 {
                hits += 1;
            }
        }
        assert!(hits > 190);
    }

    #[test]
    fn mis_shaped_learner_is_rejected() {
        let g = coordination_game();
        let g3 = three_action_game();
        let cfg = LearnerConfig::new(LearnerKind::EkfFp);
        let mut r = rng(0);
        let mut l = cfg.build(g.action_counts(), 0, None, &mut r).unwrap();
        assert!(l.step(&g3, 0, None, &mut r).is_err());
        assert!(cfg.build(g.action_counts(), 0, Some(&[0, 5]), &mut r).is_err());
    }
}
