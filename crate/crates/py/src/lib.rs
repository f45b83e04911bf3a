//! Python bindings: games, the softmax link, the EKF opponent model and the
//! experiment harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ekffp::config::{RunConfig, SweepConfig};
use ekffp::filters::{self, GaussianBelief, Matrix, NoiseConfig, ZetaSchedule};
use ekffp::game::{self, format_joint, Game, JointMixedProfile, MatrixGame, MixedStrategy, TieBreak, DEFAULT_ENUMERATION_CAP};
use ekffp::harness::output::traces_csv;
use ekffp::harness::{convergence_stats, parameter_sweep, run_replications, timing_report, SweepGrid};
use ekffp::learners::{EkfModel, LearnerKind, OpponentModel};
use ekffp::rng::{stream, StreamRng};
use ekffp::scenarios::{self, TrackingKind, TrackingSpec};

fn err(e: ekffp::Error) -> PyErr {
    match e {
        ekffp::Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_zeta(zeta: &Bound<'_, PyAny>) -> PyResult<ZetaSchedule> {
    if let Ok(z) = zeta.extract::<f64>() {
        return Ok(ZetaSchedule::Fixed(z));
    }
    zeta.extract::<String>()?.parse().map_err(err)
}

fn zeta_to_py<'py>(py: Python<'py>, zeta: ZetaSchedule) -> PyResult<Bound<'py, PyAny>> {
    Ok(match zeta {
        ZetaSchedule::Fixed(z) => z.into_pyobject(py)?.into_any(),
        ZetaSchedule::InverseT => "1/t".into_pyobject(py)?.into_any(),
    })
}

fn profile(strategies: Vec<Vec<f64>>) -> PyResult<JointMixedProfile> {
    let s = strategies
        .into_iter()
        .map(MixedStrategy::new)
        .collect::<ekffp::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(JointMixedProfile::new(s))
}

/// A finite game in strategic form with tabulated rewards.
#[pyclass(name = "Game", module = "ekffp_py", frozen)]
struct PyGame {
    inner: MatrixGame,
}

#[pymethods]
impl PyGame {
    /// Two-player game from rows of `(row reward, column reward)` pairs.
    #[new]
    fn new(cells: Vec<Vec<(f64, f64)>>) -> PyResult<Self> {
        Ok(Self {
            inner: MatrixGame::bimatrix(&cells).map_err(err)?,
        })
    }

    #[staticmethod]
    fn coordination() -> Self {
        Self {
            inner: scenarios::coordination_game(),
        }
    }

    #[staticmethod]
    fn three_action() -> Self {
        Self {
            inner: scenarios::three_action_game(),
        }
    }

    #[staticmethod]
    fn matching_pennies() -> Self {
        Self {
            inner: scenarios::matching_pennies(),
        }
    }

    /// Checkpoint `index` (0-based) of the default corridor.
    #[staticmethod]
    fn corridor_checkpoint(index: usize) -> PyResult<Self> {
        let spec = scenarios::CorridorSpec::default();
        Ok(Self {
            inner: scenarios::build_corridor_checkpoint_game(&spec, index).map_err(err)?,
        })
    }

    #[getter]
    fn action_counts(&self) -> Vec<usize> {
        self.inner.action_counts().to_vec()
    }

    fn rewards(&self, joint: Vec<usize>) -> PyResult<Vec<f64>> {
        self.check(&joint)?;
        Ok(self.inner.rewards(&joint))
    }

    /// Expected reward of `player` playing `action` against mixed `strategies`.
    fn expected_reward(&self, player: usize, action: usize, strategies: Vec<Vec<f64>>) -> PyResult<f64> {
        game::expected_reward(&self.inner, player, action, &profile(strategies)?).map_err(err)
    }

    fn best_response(&self, player: usize, strategies: Vec<Vec<f64>>) -> PyResult<usize> {
        game::best_response(&self.inner, player, &profile(strategies)?, TieBreak::LowestIndex, None).map_err(err)
    }

    fn is_pure_nash(&self, joint: Vec<usize>) -> PyResult<bool> {
        self.check(&joint)?;
        Ok(game::is_pure_nash(&self.inner, &joint))
    }

    fn pure_nash(&self) -> PyResult<Vec<Vec<usize>>> {
        game::enumerate_pure_nash(&self.inner, DEFAULT_ENUMERATION_CAP).map_err(err)
    }

    fn label(&self, joint: Vec<usize>) -> PyResult<String> {
        self.check(&joint)?;
        Ok(format_joint(&self.inner, &joint))
    }

    fn __repr__(&self) -> String {
        format!("Game(action_counts={:?})", self.inner.action_counts())
    }
}

impl PyGame {
    fn check(&self, joint: &[usize]) -> PyResult<()> {
        let counts = self.inner.action_counts();
        if joint.len() != counts.len() || joint.iter().zip(counts).any(|(a, n)| a >= n) {
            return Err(PyValueError::new_err(format!("joint action {joint:?} does not fit {counts:?}")));
        }
        Ok(())
    }
}

/// EKF belief about one opponent's strategy.
#[pyclass(name = "EkfFilter", module = "ekffp_py")]
struct PyEkfFilter {
    model: EkfModel,
    rng: StreamRng,
}

#[pymethods]
impl PyEkfFilter {
    #[new]
    #[pyo3(signature = (num_actions, xi_tilde=0.1, psi=None, zeta=None, tau=1.0, mean=None, seed=0))]
    fn new(
        num_actions: usize,
        xi_tilde: f64,
        psi: Option<f64>,
        zeta: Option<&Bound<'_, PyAny>>,
        tau: f64,
        mean: Option<Vec<f64>>,
        seed: u64,
    ) -> PyResult<Self> {
        let defaults = NoiseConfig::default();
        let noise = NoiseConfig {
            xi_tilde,
            psi: psi.unwrap_or(defaults.psi),
            zeta: zeta.map(parse_zeta).transpose()?.unwrap_or(defaults.zeta),
            tau,
        };
        let mean = mean.unwrap_or_else(|| vec![0.0; num_actions]);
        if mean.len() != num_actions || num_actions == 0 {
            return Err(PyValueError::new_err("mean must have one entry per action"));
        }
        let belief = GaussianBelief::new(mean, Matrix::identity(num_actions)).map_err(err)?;
        Ok(Self {
            model: EkfModel::new(belief, noise).map_err(err)?,
            rng: stream(seed, 0, 0),
        })
    }

    /// Updates on an observed action (or nothing) and predicts the next round.
    #[pyo3(signature = (action=None))]
    fn observe(&mut self, action: Option<usize>) -> PyResult<()> {
        if let Some(a) = action {
            if a >= self.model.num_actions() {
                return Err(PyValueError::new_err(format!("action {a} out of range")));
            }
        }
        self.model.advance(action, &mut self.rng).map_err(err)
    }

    fn strategy(&self) -> PyResult<Vec<f64>> {
        Ok(self.model.strategy().map_err(err)?.into_vec())
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.model.belief().mean.clone()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        self.model.belief().cov.to_rows()
    }

    #[getter]
    fn observations(&self) -> u64 {
        self.model.observations()
    }
}

#[pyfunction]
#[pyo3(signature = (q, tau=1.0))]
fn softmax(q: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
    Ok(filters::softmax_link(&q, tau).map_err(err)?.into_vec())
}

#[pyfunction]
#[pyo3(signature = (q, tau=1.0))]
fn softmax_jacobian(q: Vec<f64>, tau: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(filters::softmax_jacobian(&q, tau).map_err(err)?.to_rows())
}

/// One EKF update of `(mean, cov)` on `action` at iteration `t`; returns the new pair.
#[pyfunction]
#[pyo3(signature = (mean, cov, action, t, zeta, tau=1.0))]
fn ekf_update(
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    action: usize,
    t: u64,
    zeta: &Bound<'_, PyAny>,
    tau: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let noise = NoiseConfig {
        zeta: parse_zeta(zeta)?,
        tau,
        ..NoiseConfig::default()
    };
    noise.validate().map_err(err)?;
    let belief = GaussianBelief::new(mean, Matrix::from_rows(&cov)).map_err(err)?;
    let updated = filters::ekf_update(&belief, action, t, &noise).map_err(err)?;
    Ok((updated.mean, updated.cov.to_rows()))
}

/// Runs the experiment described by a TOML run configuration and returns
/// summary statistics; with `traces=True` the traces CSV is included.
#[pyfunction]
#[pyo3(signature = (config, jobs=None, traces=false))]
fn run<'py>(py: Python<'py>, config: &str, jobs: Option<usize>, traces: bool) -> PyResult<Bound<'py, PyDict>> {
    let config = RunConfig::from_toml(config).map_err(err)?;
    let result = py.detach(|| run_replications(&config, jobs)).map_err(err)?;
    let stats = convergence_stats(&result).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("scenario", config.scenario.name())?;
    d.set_item("learner", config.learner_label())?;
    d.set_item("replications", stats.replications)?;
    d.set_item("failures", stats.failures)?;
    d.set_item("percent_converged", stats.percent_converged)?;
    d.set_item("percent_completed", stats.percent_completed)?;
    d.set_item("mean_iterations_to_consensus", stats.mean_iterations_to_consensus)?;
    d.set_item("mean_reward_curve", stats.mean_reward_curve)?;
    d.set_item("mean_final_score", stats.mean_final_score)?;
    d.set_item("learner_seconds_per_agent", timing_report(&result).ok().map(|t| t.mean))?;
    if traces {
        d.set_item("traces_csv", traces_csv(&result).map_err(err)?)?;
    }
    Ok(d)
}

/// Runs a noise-parameter sweep from a TOML sweep configuration.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = SweepConfig::from_toml(config).map_err(err)?;
    let defaults = NoiseConfig::default();
    let base = NoiseConfig {
        psi: config.psi.unwrap_or(defaults.psi),
        tau: config.tau.unwrap_or(defaults.tau),
        ..defaults
    };
    let specs: Vec<TrackingSpec> = config
        .tracking
        .iter()
        .map(|k| match k {
            TrackingKind::Sinusoid => TrackingSpec::sinusoid(),
            TrackingKind::Abrupt => TrackingSpec::abrupt(),
        })
        .map(|s| s.with_horizon(config.horizon))
        .collect();
    let grid = SweepGrid {
        xi: config.xi.clone(),
        zeta: config.zeta.clone(),
    };
    let result = py
        .detach(|| parameter_sweep(&grid, &specs, &config.seeds, base, config.learner))
        .map_err(err)?;
    let (xi, zeta) = result.argmin_values();
    let d = PyDict::new(py);
    d.set_item("xi", &result.grid.xi)?;
    let zetas = result
        .grid
        .zeta
        .iter()
        .map(|z| zeta_to_py(py, *z))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("zeta", zetas)?;
    d.set_item("mse", &result.mse)?;
    d.set_item("argmin", (xi, zeta_to_py(py, zeta)?))?;
    Ok(d)
}

/// Tracking MSE of a fresh model of `kind` on the `"sinusoid"` or `"abrupt"` schedule.
#[pyfunction]
#[pyo3(signature = (kind, schedule, xi_tilde=0.1, zeta=None, horizon=5000, seed=0))]
fn tracking_mse(
    kind: &str,
    schedule: &str,
    xi_tilde: f64,
    zeta: Option<&Bound<'_, PyAny>>,
    horizon: u64,
    seed: u64,
) -> PyResult<f64> {
    let kind: LearnerKind = kind.parse().map_err(err)?;
    let spec = match schedule {
        "sinusoid" => TrackingSpec::sinusoid(),
        "abrupt" => TrackingSpec::abrupt(),
        other => return Err(PyValueError::new_err(format!("unknown schedule {other:?}"))),
    }
    .with_horizon(horizon);
    let defaults = NoiseConfig::default();
    let noise = NoiseConfig {
        xi_tilde,
        zeta: zeta.map(parse_zeta).transpose()?.unwrap_or(defaults.zeta),
        ..defaults
    };
    ekffp::harness::tracking_mse(kind, noise, &spec, seed).map_err(err)
}

#[pymodule]
pub fn ekffp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyEkfFilter>()?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(ekf_update, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(tracking_mse, m)?)?;
    Ok(())
}
