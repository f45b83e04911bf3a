//! Finite n-player games in strategic form.
//!
//! A [`Game`] exposes per-player rewards for every joint action. Expected
//! rewards against independent opponent mixtures default to exact enumeration
//! of the opponents' joint action space; structured games (warehouse patrol,
//! sensor coverage) override [`Game::expected_reward`] with an exact
//! factorised form so that 40-player instances stay tractable.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, Error, Result};

/// Absolute tolerance used for reward ties, Nash checks and potential checks.
pub const TOLERANCE: f64 = 1e-9;

/// Default cap on the size of any joint action space that is enumerated.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// A probability vector over one player's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return config("mixed strategy needs at least one action");
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return config(format!("mixed strategy has a negative or non-finite entry: {probs:?}"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return config(format!("mixed strategy sums to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    /// Normalise a nonnegative weight vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return config(format!("weights must be finite and nonnegative: {weights:?}"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return config("weights sum to zero");
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over zero actions");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn pure(n: usize, action: usize) -> Self {
        assert!(action < n, "pure action {action} out of range for {n} actions");
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self { probs }
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMixedProfile {
    strategies: Vec<MixedStrategy>,
}

impl JointMixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Self { strategies }
    }

    /// Degenerate profile concentrated on `joint`.
    pub fn pure(action_counts: &[usize], joint: &[usize]) -> Self {
        Self::new(
            action_counts
                .iter()
                .zip(joint)
                .map(|(&n, &a)| MixedStrategy::pure(n, a))
                .collect(),
        )
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self::new(action_counts.iter().map(|&n| MixedStrategy::uniform(n)).collect())
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn set(&mut self, player: usize, strategy: MixedStrategy) {
        self.strategies[player] = strategy;
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// Checks that the profile is dimensioned for `action_counts`.
    pub fn check_dims(&self, action_counts: &[usize]) -> Result<()> {
        if self.strategies.len() != action_counts.len() {
            return config(format!(
                "profile has {} strategies for a {}-player game",
                self.strategies.len(),
                action_counts.len()
            ));
        }
        for (i, (s, &n)) in self.strategies.iter().zip(action_counts).enumerate() {
            if s.len() != n {
                return config(format!(
                    "player {i}: strategy has {} entries but the player has {n} actions",
                    s.len()
                ));
            }
        }
        Ok(())
    }
}

/// A finite game in strategic form.
pub trait Game: Send + Sync {
    /// Number of actions available to each player.
    fn action_counts(&self) -> &[usize];

    /// Reward of `player` at `joint`.
    fn reward(&self, player: usize, joint: &[usize]) -> f64;

    fn num_players(&self) -> usize {
        self.action_counts().len()
    }

    fn rewards(&self, joint: &[usize]) -> Vec<f64> {
        (0..self.num_players()).map(|i| self.reward(i, joint)).collect()
    }

    /// Shared global objective, when the game has one.
    fn potential(&self, _joint: &[usize]) -> Option<f64> {
        None
    }

    /// Expected reward of `player` choosing `action` while every other player
    /// independently follows its entry in `profile`. The player's own entry is
    /// ignored. Dimensions are validated by [`expected_reward`].
    fn expected_reward(&self, player: usize, action: usize, profile: &JointMixedProfile) -> Result<f64> {
        enumerate_expected_reward(self, player, action, profile, DEFAULT_ENUMERATION_CAP)
    }

    /// Expected reward of every action of `player`. Games with structure
    /// shared across actions override this to avoid repeated work.
    fn expected_rewards_all(&self, player: usize, profile: &JointMixedProfile) -> Result<Vec<f64>> {
        (0..self.action_counts()[player])
            .map(|a| self.expected_reward(player, a, profile))
            .collect()
    }

    /// Human-readable action name.
    fn action_label(&self, _player: usize, action: usize) -> String {
        format!("{}", action + 1)
    }
}

impl<G: Game + ?Sized> Game for Arc<G> {
    fn action_counts(&self) -> &[usize] {
        (**self).action_counts()
    }
    fn reward(&self, player: usize, joint: &[usize]) -> f64 {
        (**self).reward(player, joint)
    }
    fn num_players(&self) -> usize {
        (**self).num_players()
    }
    fn rewards(&self, joint: &[usize]) -> Vec<f64> {
        (**self).rewards(joint)
    }
    fn potential(&self, joint: &[usize]) -> Option<f64> {
        (**self).potential(joint)
    }
    fn expected_reward(&self, player: usize, action: usize, profile: &JointMixedProfile) -> Result<f64> {
        (**self).expected_reward(player, action, profile)
    }
    fn expected_rewards_all(&self, player: usize, profile: &JointMixedProfile) -> Result<Vec<f64>> {
        (**self).expected_rewards_all(player, profile)
    }
    fn action_label(&self, player: usize, action: usize) -> String {
        (**self).action_label(player, action)
    }
}

/// Size of the joint action space, saturating at `u128::MAX`.
pub fn joint_space_size(action_counts: &[usize]) -> u128 {
    action_counts
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
        .unwrap_or(u128::MAX)
}

/// Odometer over every joint action, player 0 varying fastest.
#[derive(Debug, Clone)]
pub struct JointActions {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl JointActions {
    pub fn new(action_counts: &[usize]) -> Self {
        let next = if action_counts.iter().all(|&n| n > 0) {
            Some(vec![0; action_counts.len()])
        } else {
            None
        };
        Self {
            counts: action_counts.to_vec(),
            next,
        }
    }
}

impl Iterator for JointActions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for (slot, &n) in succ.iter_mut().zip(&self.counts) {
            *slot += 1;
            if *slot < n {
                carried = false;
                break;
            }
            *slot = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(current)
    }
}

fn ensure_enumerable(action_counts: &[usize], cap: u128) -> Result<()> {
    let size = joint_space_size(action_counts);
    if size > cap {
        return Err(Error::JointSpaceTooLarge { size, cap });
    }
    Ok(())
}

/// Exact expected reward by enumerating the opponents' joint actions.
/// Zero-probability opponent actions are skipped.
pub fn enumerate_expected_reward<G: Game + ?Sized>(
    game: &G,
    player: usize,
    action: usize,
    profile: &JointMixedProfile,
    cap: u128,
) -> Result<f64> {
    let counts = game.action_counts();
    // Only opponents' supports are enumerated.
    let supports: Vec<Vec<(usize, f64)>> = (0..counts.len())
        .map(|j| {
            if j == player {
                vec![(action, 1.0)]
            } else {
                profile
                    .strategy(j)
                    .probs()
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .collect()
            }
        })
        .collect();
    let support_sizes: Vec<usize> = supports.iter().map(Vec::len).collect();
    ensure_enumerable(&support_sizes, cap)?;

    let mut joint = vec![0; counts.len()];
    let mut total = 0.0;
    for idx in JointActions::new(&support_sizes) {
        let mut weight = 1.0;
        for (j, &k) in idx.iter().enumerate() {
            let (a, p) = supports[j][k];
            joint[j] = a;
            weight *= p;
        }
        total += weight * game.reward(player, &joint);
    }
    Ok(total)
}

fn check_player_action(counts: &[usize], player: usize, action: usize) -> Result<()> {
    if player >= counts.len() {
        return config(format!("player {player} out of range for a {}-player game", counts.len()));
    }
    if action >= counts[player] {
        return config(format!(
            "action {action} out of range for player {player} with {} actions",
            counts[player]
        ));
    }
    Ok(())
}

/// Expected reward of `player` playing `action` against `profile`.
pub fn expected_reward<G: Game + ?Sized>(
    game: &G,
    player: usize,
    action: usize,
    profile: &JointMixedProfile,
) -> Result<f64> {
    check_player_action(game.action_counts(), player, action)?;
    profile.check_dims(game.action_counts())?;
    game.expected_reward(player, action, profile)
}

/// Expected reward of every action of `player` against `profile`.
pub fn expected_rewards<G: Game + ?Sized>(game: &G, player: usize, profile: &JointMixedProfile) -> Result<Vec<f64>> {
    check_player_action(game.action_counts(), player, 0)?;
    profile.check_dims(game.action_counts())?;
    game.expected_rewards_all(player, profile)
}

/// How ties among maximising actions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Keep the previous action when it is among the maximisers, else the lowest index.
    #[default]
    Stay,
    LowestIndex,
}

/// Picks the maximiser of `values`, resolving ties within [`TOLERANCE`].
pub fn argmax_with_tie_break(values: &[f64], tie_break: TieBreak, previous: Option<usize>) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let (TieBreak::Stay, Some(prev)) = (tie_break, previous) {
        if prev < values.len() && values[prev] >= best - TOLERANCE {
            return prev;
        }
    }
    values
        .iter()
        .position(|&v| v >= best - TOLERANCE)
        .unwrap_or(0)
}

/// Best response of `player` to the opponents' strategies in `profile`.
pub fn best_response<G: Game + ?Sized>(
    game: &G,
    player: usize,
    profile: &JointMixedProfile,
    tie_break: TieBreak,
    previous: Option<usize>,
) -> Result<usize> {
    let values = expected_rewards(game, player, profile)?;
    Ok(argmax_with_tie_break(&values, tie_break, previous))
}

/// True iff no player can strictly gain by deviating unilaterally from `joint`.
pub fn is_pure_nash<G: Game + ?Sized>(game: &G, joint: &[usize]) -> bool {
    let counts = game.action_counts();
    assert_eq!(joint.len(), counts.len(), "joint action has the wrong arity");
    let mut probe = joint.to_vec();
    for (i, &n) in counts.iter().enumerate() {
        assert!(joint[i] < n, "joint action out of bounds for player {i}");
        let current = game.reward(i, joint);
        for a in (0..n).filter(|&a| a != joint[i]) {
            probe[i] = a;
            if game.reward(i, &probe) > current + TOLERANCE {
                return false;
            }
        }
        probe[i] = joint[i];
    }
    true
}

/// Every pure Nash equilibrium, by brute force over the joint action space.
pub fn enumerate_pure_nash<G: Game + ?Sized>(game: &G, cap: u128) -> Result<Vec<Vec<usize>>> {
    ensure_enumerable(game.action_counts(), cap)?;
    Ok(JointActions::new(game.action_counts())
        .filter(|joint| is_pure_nash(game, joint))
        .collect())
}

/// Checks `phi` is an exact potential: every unilateral deviation changes the
/// deviator's reward by exactly the change in `phi`.
pub fn verify_exact_potential<G, F>(game: &G, phi: F, cap: u128) -> Result<bool>
where
    G: Game + ?Sized,
    F: Fn(&[usize]) -> f64,
{
    let counts = game.action_counts();
    ensure_enumerable(counts, cap)?;
    for joint in JointActions::new(counts) {
        let phi_here = phi(&joint);
        let mut probe = joint.clone();
        for (i, &n) in counts.iter().enumerate() {
            let r_here = game.reward(i, &joint);
            // Deviations to higher indices only; the reverse direction is the same pair.
            for a in joint[i] + 1..n {
                probe[i] = a;
                let dr = r_here - game.reward(i, &probe);
                let dphi = phi_here - phi(&probe);
                if (dr - dphi).abs() > TOLERANCE {
                    return Ok(false);
                }
            }
            probe[i] = joint[i];
        }
    }
    Ok(true)
}

/// Formats a joint action with the game's action labels, e.g. `(U,L)`.
pub fn format_joint<G: Game + ?Sized>(game: &G, joint: &[usize]) -> String {
    let labels: Vec<String> = joint
        .iter()
        .enumerate()
        .map(|(i, &a)| game.action_label(i, a))
        .collect();
    format!("({})", labels.join(","))
}

/// Per-player reward `r_g(s) - r_g(s0, s_-i)` where `s0` is the player's reference action.
pub fn wonderful_life_utility<F>(global_reward: F, player: usize, reference_action: usize) -> impl Fn(&[usize]) -> f64
where
    F: Fn(&[usize]) -> f64,
{
    move |joint: &[usize]| {
        let mut reference = joint.to_vec();
        reference[player] = reference_action;
        global_reward(joint) - global_reward(&reference)
    }
}

/// A game whose rewards are computed on demand by a closure.
#[derive(Clone)]
pub struct FnGame {
    action_counts: Vec<usize>,
    rewards: Arc<dyn Fn(&[usize]) -> Vec<f64> + Send + Sync>,
    potential: Option<Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>>,
}

impl fmt::Debug for FnGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnGame")
            .field("action_counts", &self.action_counts)
            .field("has_potential", &self.potential.is_some())
            .finish()
    }
}

impl FnGame {
    pub fn new<F>(action_counts: Vec<usize>, rewards: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<f64> + Send + Sync + 'static,
    {
        validate_counts(&action_counts)?;
        Ok(Self {
            action_counts,
            rewards: Arc::new(rewards),
            potential: None,
        })
    }

    pub fn with_potential<F>(mut self, potential: F) -> Self
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        self.potential = Some(Arc::new(potential));
        self
    }

    /// Game in which every player is paid its wonderful life utility with
    /// respect to `global_reward`; the global reward is its potential.
    pub fn wonderful_life<F>(action_counts: Vec<usize>, global_reward: F, reference_actions: Vec<usize>) -> Result<Self>
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        validate_counts(&action_counts)?;
        if reference_actions.len() != action_counts.len() {
            return config("one reference action per player is required");
        }
        for (i, (&r, &n)) in reference_actions.iter().zip(&action_counts).enumerate() {
            if r >= n {
                return config(format!("reference action {r} invalid for player {i}"));
            }
        }
        let global = Arc::new(global_reward);
        let g = Arc::clone(&global);
        let game = Self::new(action_counts, move |joint| {
            reference_actions
                .iter()
                .enumerate()
                .map(|(i, &r)| wonderful_life_utility(|s: &[usize]| g(s), i, r)(joint))
                .collect()
        })?;
        Ok(game.with_potential(move |joint| global(joint)))
    }
}

impl Game for FnGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn reward(&self, player: usize, joint: &[usize]) -> f64 {
        (self.rewards)(joint)[player]
    }

    fn rewards(&self, joint: &[usize]) -> Vec<f64> {
        (self.rewards)(joint)
    }

    fn potential(&self, joint: &[usize]) -> Option<f64> {
        self.potential.as_ref().map(|p| p(joint))
    }
}

/// Dense payoff table. Joint actions are indexed with player 0 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    action_counts: Vec<usize>,
    payoffs: Vec<f64>,
    potential: Option<Vec<f64>>,
    labels: Option<Vec<Vec<String>>>,
}

impl MatrixGame {
    /// Tabulates `rewards` over the whole joint action space.
    pub fn from_fn<F>(action_counts: Vec<usize>, mut rewards: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        validate_counts(&action_counts)?;
        ensure_enumerable(&action_counts, DEFAULT_ENUMERATION_CAP)?;
        let n = action_counts.len();
        let mut payoffs = Vec::with_capacity(joint_space_size(&action_counts) as usize * n);
        for joint in JointActions::new(&action_counts) {
            let r = rewards(&joint);
            if r.len() != n || r.iter().any(|x| !x.is_finite()) {
                return config(format!("reward at {joint:?} must be {n} finite values, got {r:?}"));
            }
            payoffs.extend(r);
        }
        Ok(Self {
            action_counts,
            payoffs,
            potential: None,
            labels: None,
        })
    }

    /// Dense cache of any game whose joint space is at most `cap`.
    pub fn tabulate<G: Game + ?Sized>(game: &G, cap: u128) -> Result<Self> {
        ensure_enumerable(game.action_counts(), cap)?;
        let mut table = Self::from_fn(game.action_counts().to_vec(), |joint| game.rewards(joint))?;
        if game.potential(&vec![0; game.num_players()]).is_some() {
            table.potential = Some(
                JointActions::new(game.action_counts())
                    .map(|joint| game.potential(&joint).unwrap_or(0.0))
                    .collect(),
            );
        }
        let labels = (0..game.num_players())
            .map(|i| (0..game.action_counts()[i]).map(|a| game.action_label(i, a)).collect())
            .collect();
        table.labels = Some(labels);
        Ok(table)
    }

    /// Two-player bimatrix game from row-major `(row reward, column reward)` cells.
    pub fn bimatrix(cells: &[Vec<(f64, f64)>]) -> Result<Self> {
        let rows = cells.len();
        let cols = cells.first().map_or(0, Vec::len);
        if cells.iter().any(|row| row.len() != cols) {
            return config("bimatrix rows have different lengths");
        }
        Self::from_fn(vec![rows, cols], |joint| {
            let (a, b) = cells[joint[0]][joint[1]];
            vec![a, b]
        })
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.action_counts.len()
            || labels.iter().zip(&self.action_counts).any(|(l, &n)| l.len() != n)
        {
            return config("labels must match action counts");
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_potential_fn<F: Fn(&[usize]) -> f64>(mut self, phi: F) -> Self {
        self.potential = Some(JointActions::new(&self.action_counts).map(|j| phi(&j)).collect());
        self
    }

    fn index(&self, joint: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (&a, &n) in joint.iter().zip(&self.action_counts) {
            idx += a * stride;
            stride *= n;
        }
        idx
    }
}

impl Game for MatrixGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn reward(&self, player: usize, joint: &[usize]) -> f64 {
        self.payoffs[self.index(joint) * self.action_counts.len() + player]
    }

    fn potential(&self, joint: &[usize]) -> Option<f64> {
        self.potential.as_ref().map(|p| p[self.index(joint)])
    }

    fn action_label(&self, player: usize, action: usize) -> String {
        match &self.labels {
            Some(labels) => labels[player][action].clone(),
            None => format!("{}", action + 1),
        }
    }
}

fn validate_counts(action_counts: &[usize]) -> Result<()> {
    if action_counts.is_empty() {
        return config("a game needs at least one player");
    }
    if let Some(i) = action_counts.iter().position(|&n| n == 0) {
        return config(format!("player {i} has no actions"));
    }
    Ok(())
}
