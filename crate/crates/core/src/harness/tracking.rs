//! Opponent-tracking error and the noise-parameter sweep.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::filters::{GaussianBelief, NoiseConfig, ZetaSchedule};
use crate::learners::models::{CountingModel, EkfModel, OpponentModel, ParticleModel};
use crate::learners::LearnerKind;
use crate::rng::{stream, StreamRng};
use crate::scenarios::{tracking_strategy, TrackingKind, TrackingSpec};

/// Particles used by the particle-filter model in tracking runs.
pub const TRACKING_PARTICLES: usize = 500;

/// Result of following one tracking schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    /// Mean over rounds of the componentwise mean squared error.
    pub mse: f64,
    /// Estimated probability of the first action at each round.
    pub first_action_estimates: Vec<f64>,
}

fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Follows `spec` with `model`: at every round the estimate is scored against
/// the true strategy before the opponent's action is drawn and observed.
/// The opponent's draws come from `opponent_rng` only, so models compared on
/// the same stream face identical action sequences.
pub fn tracking_run_with(
    model: &mut dyn OpponentModel,
    spec: &TrackingSpec,
    opponent_rng: &mut StreamRng,
    model_rng: &mut StreamRng,
) -> Result<TrackingRun> {
    if spec.horizon == 0 {
        return config("tracking horizon must be at least 1");
    }
    if model.num_actions() != 2 {
        return config("tracking schedules have two actions");
    }
    let mut total = 0.0;
    let mut first_action_estimates = Vec::with_capacity(spec.horizon as usize);
    for t in 1..=spec.horizon {
        let truth = tracking_strategy(spec, t)?;
        let estimate = model.strategy()?;
        let err: f64 = estimate
            .probs()
            .iter()
            .zip(truth.probs())
            .map(|(e, s)| (e - s).powi(2))
            .sum::<f64>()
            / 2.0;
        total += err;
        first_action_estimates.push(estimate.probs()[0]);
        let action = sample_action(truth.probs(), opponent_rng);
        model.advance(Some(action), model_rng)?;
    }
    Ok(TrackingRun {
        mse: total / spec.horizon as f64,
        first_action_estimates,
    })
}

/// Tracking MSE of an arbitrary model.
pub fn tracking_mse_with(
    model: &mut dyn OpponentModel,
    spec: &TrackingSpec,
    opponent_rng: &mut StreamRng,
    model_rng: &mut StreamRng,
) -> Result<f64> {
    Ok(tracking_run_with(model, spec, opponent_rng, model_rng)?.mse)
}

fn spec_stream(spec: &TrackingSpec) -> u64 {
    match spec.kind {
        TrackingKind::Sinusoid => 0,
        TrackingKind::Abrupt => 1,
    }
}

/// Opponent model of `kind` starting from an uninformative belief.
pub fn tracking_model(kind: LearnerKind, noise: NoiseConfig, rng: &mut StreamRng) -> Result<Box<dyn OpponentModel>> {
    Ok(match kind {
        LearnerKind::ClassicFp => Box::new(CountingModel::uniform_prior(2)),
        LearnerKind::EkfFp => Box::new(EkfModel::new(GaussianBelief::standard(2), noise)?),
        LearnerKind::PfFp => Box::new(ParticleModel::new(&[0.0, 0.0], TRACKING_PARTICLES, noise, 0.5, rng)?),
        LearnerKind::Greedy | LearnerKind::Random => {
            return config(format!("{kind} keeps no opponent model to track with"));
        }
    })
}

/// Tracking run of a fresh `kind` model on `spec`, seeded by `seed`.
pub fn tracking_run(kind: LearnerKind, noise: NoiseConfig, spec: &TrackingSpec, seed: u64) -> Result<TrackingRun> {
    noise.validate()?;
    let s = spec_stream(spec);
    let mut opponent_rng = stream(seed, s, 0);
    let mut model_rng = stream(seed, s, 1);
    let mut model = tracking_model(kind, noise, &mut model_rng)?;
    tracking_run_with(model.as_mut(), spec, &mut opponent_rng, &mut model_rng)
}

pub fn tracking_mse(kind: LearnerKind, noise: NoiseConfig, spec: &TrackingSpec, seed: u64) -> Result<f64> {
    Ok(tracking_run(kind, noise, spec, seed)?.mse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub xi: Vec<f64>,
    pub zeta: Vec<ZetaSchedule>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.xi.is_empty() || self.zeta.is_empty() {
            return config("sweep grid is empty");
        }
        if self.xi.iter().any(|x| !(*x > 0.0 && x.is_finite()))
            || self.zeta.iter().any(|z| matches!(z, ZetaSchedule::Fixed(v) if !(*v > 0.0 && v.is_finite())))
        {
            return config("sweep grid values must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: SweepGrid,
    /// `mse[i][j]` for `xi[i]`, `zeta[j]`, averaged over specs and seeds.
    pub mse: Vec<Vec<f64>>,
    /// Index `(i, j)` of the smallest entry; the first one on ties.
    pub argmin: (usize, usize),
}

impl SweepResult {
    pub fn argmin_values(&self) -> (f64, ZetaSchedule) {
        let (i, j) = self.argmin;
        (self.grid.xi[i], self.grid.zeta[j])
    }
}

/// Combined tracking MSE over every grid cell. All cells see the same
/// opponent draws for a given (spec, seed) pair.
pub fn parameter_sweep(
    grid: &SweepGrid,
    specs: &[TrackingSpec],
    seeds: &[u64],
    base: NoiseConfig,
    kind: LearnerKind,
) -> Result<SweepResult> {
    grid.validate()?;
    if specs.is_empty() || seeds.is_empty() {
        return config("sweep needs at least one tracking spec and one seed");
    }
    let cells: Vec<(usize, usize)> = (0..grid.xi.len())
        .flat_map(|i| (0..grid.zeta.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let noise = NoiseConfig {
                xi_tilde: grid.xi[i],
                zeta: grid.zeta[j],
                ..base
            };
            let mut sum = 0.0;
            for spec in specs {
                for &seed in seeds {
                    sum += tracking_mse(kind, noise, spec, seed)?;
                }
            }
            Ok(sum / (specs.len() * seeds.len()) as f64)
        })
        .collect::<Result<_>>()?;
    let mse: Vec<Vec<f64>> = values.chunks(grid.zeta.len()).map(<[f64]>::to_vec).collect();
    let mut argmin = (0, 0);
    for (&(i, j), v) in cells.iter().zip(&values) {
        if *v < mse[argmin.0][argmin.1] {
            argmin = (i, j);
        }
    }
    Ok(SweepResult {
        grid: grid.clone(),
        mse,
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MixedStrategy;

    /// Reports the scheduled strategy exactly.
    struct Oracle {
        spec: TrackingSpec,
        t: u64,
    }

    impl OpponentModel for Oracle {
        fn advance(&mut self, _observed: Option<usize>, _rng: &mut StreamRng) -> Result<()> {
            self.t += 1;
            Ok(())
        }
        fn strategy(&self) -> Result<MixedStrategy> {
            tracking_strategy(&self.spec, self.t)
        }
        fn num_actions(&self) -> usize {
            2
        }
    }

    #[test]
    fn oracle_has_zero_error() {
        for spec in [TrackingSpec::sinusoid(), TrackingSpec::abrupt()] {
            let mut oracle = Oracle { spec, t: 1 };
            let mse = tracking_mse_with(&mut oracle, &spec, &mut stream(0, 0, 0), &mut stream(0, 0, 1)).unwrap();
            assert_eq!(mse, 0.0);
        }
    }

    #[test]
    fn one_cell_sweep_equals_tracking_mse() {
        let spec = TrackingSpec::abrupt().with_horizon(300);
        let grid = SweepGrid {
            xi: vec![0.1],
            zeta: vec![ZetaSchedule::InverseT],
        };
        let noise = NoiseConfig::default();
        let r = parameter_sweep(&grid, &[spec], &[3], noise, LearnerKind::EkfFp).unwrap();
        assert_eq!(r.mse.len(), 1);
        assert_eq!(r.argmin, (0, 0));
        assert_eq!(r.mse[0][0], tracking_mse(LearnerKind::EkfFp, noise, &spec, 3).unwrap());
    }

    #[test]
    fn sweep_values_are_nonnegative_and_order_free() {
        let spec = TrackingSpec::sinusoid().with_horizon(200);
        let grid = SweepGrid {
            xi: vec![0.01, 0.1],
            zeta: vec![ZetaSchedule::Fixed(0.05), ZetaSchedule::InverseT],
        };
        let flipped = SweepGrid {
            xi: vec![0.1, 0.01],
            zeta: vec![ZetaSchedule::InverseT, ZetaSchedule::Fixed(0.05)],
        };
        let noise = NoiseConfig::default();
        let a = parameter_sweep(&grid, &[spec], &[1, 2], noise, LearnerKind::EkfFp).unwrap();
        let b = parameter_sweep(&flipped, &[spec], &[1, 2], noise, LearnerKind::EkfFp).unwrap();
        assert!(a.mse.iter().flatten().all(|v| *v >= 0.0));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.mse[i][j], b.mse[1 - i][1 - j]);
            }
        }
        assert_eq!(a.argmin_values(), b.argmin_values());
    }

    #[test]
    fn empty_grid_and_baselines_are_rejected() {
        let grid = SweepGrid { xi: vec![], zeta: vec![] };
        assert!(parameter_sweep(&grid, &[TrackingSpec::sinusoid()], &[0], NoiseConfig::default(), LearnerKind::EkfFp).is_err());
        assert!(tracking_mse(LearnerKind::Greedy, NoiseConfig::default(), &TrackingSpec::sinusoid(), 0).is_err());
    }

    #[test]
    fn every_model_kind_tracks_a_constant_opponent() {
        let spec = TrackingSpec::abrupt().with_horizon(1000);
        for kind in [LearnerKind::ClassicFp, LearnerKind::EkfFp, LearnerKind::PfFp] {
            let run = tracking_run(kind, NoiseConfig::default(), &spec, 0).unwrap();
            assert!(run.first_action_estimates[999] > 0.9, "{kind}");
        }
    }
}
