//! Extended Kalman filter over an opponent's propensity vector.
//!
//! State model: propensities follow a Gaussian random walk (identity
//! transition). Observation model: the one-hot indicator of the observed
//! action equals the softmax of the propensities plus Gaussian noise.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filters::linalg::Matrix;
use crate::filters::softmax::{jacobian_from_probs, softmax_probs};

/// Mean and covariance of a propensity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

impl GaussianBelief {
    pub fn new(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        if cov.rows() != mean.len() || !cov.is_square() {
            return Err(Error::Config(format!(
                "covariance is {}x{} for a mean of length {}",
                cov.rows(),
                cov.cols(),
                mean.len()
            )));
        }
        if !cov.is_symmetric(1e-9) {
            return Err(Error::Config("covariance is not symmetric".into()));
        }
        Ok(Self { mean, cov })
    }

    /// Zero mean, identity covariance.
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            cov: Matrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Observation-noise scale as a function of the iteration counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaSchedule {
    Fixed(f64),
    /// `1 / t`
    InverseT,
}

impl ZetaSchedule {
    /// Noise scale at iteration `t` (counted from 1).
    pub fn at(self, t: u64) -> f64 {
        match self {
            ZetaSchedule::Fixed(z) => z,
            ZetaSchedule::InverseT => 1.0 / t.max(1) as f64,
        }
    }
}

impl fmt::Display for ZetaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZetaSchedule::Fixed(z) => write!(f, "{z}"),
            ZetaSchedule::InverseT => f.write_str("1/t"),
        }
    }
}

impl std::str::FromStr for ZetaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1/t" {
            return Ok(ZetaSchedule::InverseT);
        }
        let z: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("zeta must be a positive number or \"1/t\", got {s:?}")))?;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Config(format!("zeta must be positive, got {z}")));
        }
        Ok(ZetaSchedule::Fixed(z))
    }
}

impl Serialize for ZetaSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ZetaSchedule::Fixed(z) => s.serialize_f64(*z),
            ZetaSchedule::InverseT => s.serialize_str("1/t"),
        }
    }
}

impl<'de> Deserialize<'de> for ZetaSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(z) => z.to_string().parse(),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Filter noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// State-noise scale added to the covariance diagonal each prediction.
    pub xi_tilde: f64,
    /// Variance of the Gaussian jitter added to `xi_tilde`.
    pub psi: f64,
    pub zeta: ZetaSchedule,
    /// Softmax temperature.
    pub tau: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            xi_tilde: 0.1,
            psi: 0.05,
            zeta: ZetaSchedule::InverseT,
            tau: 1.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.xi_tilde >= 0.0) || !self.xi_tilde.is_finite() {
            return Err(Error::Config(format!("xi_tilde must be nonnegative, got {}", self.xi_tilde)));
        }
        if !(self.psi >= 0.0) || !self.psi.is_finite() {
            return Err(Error::Config(format!("psi must be nonnegative, got {}", self.psi)));
        }
        if let ZetaSchedule::Fixed(z) = self.zeta {
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::Config(format!("zeta must be positive, got {z}")));
            }
        }
        Ok(())
    }

    /// Draws the state-noise scale `xi_tilde + eps`, `eps ~ N(0, psi)`,
    /// truncated so the result is nonnegative.
    pub fn sample_state_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.psi == 0.0 {
            return self.xi_tilde;
        }
        let eps = Normal::new(0.0, self.psi.sqrt())
            .expect("psi validated nonnegative")
            .sample(rng);
        (self.xi_tilde + eps).max(0.0)
    }
}

/// Prediction step: identity transition, covariance inflated by `(xi + eps) I`.
pub fn ekf_predict<R: Rng + ?Sized>(belief: &GaussianBelief, noise: &NoiseConfig, rng: &mut R) -> GaussianBelief {
    let mut cov = belief.cov.clone();
    cov.add_to_diagonal(noise.sample_state_noise(rng));
    GaussianBelief {
        mean: belief.mean.clone(),
        cov,
    }
}

/// Update step with the one-hot observation of `observed_action` at iteration `t`.
pub fn ekf_update(
    predicted: &GaussianBelief,
    observed_action: usize,
    t: u64,
    noise: &NoiseConfig,
) -> Result<GaussianBelief> {
    let n = predicted.dim();
    if observed_action >= n {
        return Err(Error::Config(format!(
            "observed action {observed_action} out of range for {n} actions"
        )));
    }
    let zeta = noise.zeta.at(t);
    let sigma = softmax_probs(&predicted.mean, noise.tau)?;
    // H is symmetric, so P H^T = (H P)^T.
    let h = jacobian_from_probs(&sigma, noise.tau);
    let hp = h.matmul(&predicted.cov);
    let mut s = hp.matmul(&h);
    s.add_to_diagonal(zeta);
    s.symmetrize();

    // K^T = S^{-1} H P
    let gain_t = s.solve_symmetric(&hp)?;
    let innovation: Vec<f64> = sigma
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == observed_action { 1.0 } else { 0.0 } - p)
        .collect();
    let correction = gain_t.transpose().mul_vec(&innovation);
    let mean: Vec<f64> = predicted.mean.iter().zip(&correction).map(|(m, c)| m + c).collect();

    // K S K^T = (H P)^T K^T
    let mut cov = predicted.cov.sub(&hp.transpose().matmul(&gain_t));
    cov.symmetrize();

    if mean.iter().any(|x| !x.is_finite()) || !cov.is_finite() {
        return Err(Error::Numeric("EKF update produced non-finite values".into()));
    }
    Ok(GaussianBelief { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise(xi: f64, psi: f64, zeta: f64) -> NoiseConfig {
        NoiseConfig {
            xi_tilde: xi,
            psi,
            zeta: ZetaSchedule::Fixed(zeta),
            tau: 1.0,
        }
    }

    #[test]
    fn predict_adds_state_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = GaussianBelief::standard(2);
        let p = ekf_predict(&b, &noise(0.1, 0.0, 1.0), &mut rng);
        assert_eq!(p.mean, vec![0.0, 0.0]);
        assert!(p.cov.max_abs_diff(&Matrix::identity(2).scale(1.1)) < 1e-15);
    }

    #[test]
    fn repeated_predictions_accumulate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = noise(0.25, 0.0, 1.0);
        let mut b = GaussianBelief::standard(3);
        for _ in 0..8 {
            b = ekf_predict(&b, &cfg, &mut rng);
        }
        assert!(b.cov.max_abs_diff(&Matrix::identity(3).scale(3.0)) < 1e-12);
    }

    #[test]
    fn jittered_prediction_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = noise(0.01, 0.5, 1.0);
        let b = GaussianBelief::standard(3);
        for _ in 0..10_000 {
            let p = ekf_predict(&b, &cfg, &mut rng);
            assert!(p.cov.is_symmetric(1e-12));
            assert!(p.cov[(0, 0)] >= 1.0);
        }
    }

    #[test]
    fn two_action_update_sign_structure() {
        let b = GaussianBelief::standard(2);
        let u = ekf_update(&b, 1, 1, &noise(0.1, 0.0, 1.0)).unwrap();
        assert!(u.mean[1] > u.mean[0]);
        assert!(u.mean[1] > 0.0 && 0.0 > u.mean[0]);
    }

    /// Scalar-by-scalar evaluation of the update for two actions, written out
    /// with explicit 2x2 algebra.
    fn two_action_oracle(q: [f64; 2], p: [[f64; 2]; 2], zeta: f64, observed: usize) -> ([f64; 2], [[f64; 2]; 2]) {
        let e0 = q[0].exp();
        let e1 = q[1].exp();
        let s0 = e0 / (e0 + e1);
        let s1 = e1 / (e0 + e1);
        let a = s0 * s1;
        let h = [[a, -a], [-a, a]];
        let mut hp = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hp[i][j] = h[i][0] * p[0][j] + h[i][1] * p[1][j];
            }
        }
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = hp[i][0] * h[j][0] + hp[i][1] * h[j][1];
            }
        }
        s[0][0] += zeta;
        s[1][1] += zeta;
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let s_inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        // P H^T
        let mut pht = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                pht[i][j] = p[i][0] * h[j][0] + p[i][1] * h[j][1];
            }
        }
        let mut k = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                k[i][j] = pht[i][0] * s_inv[0][j] + pht[i][1] * s_inv[1][j];
            }
        }
        let z = if observed == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        let v = [z[0] - s0, z[1] - s1];
        let mean = [q[0] + k[0][0] * v[0] + k[0][1] * v[1], q[1] + k[1][0] * v[0] + k[1][1] * v[1]];
        let mut ks = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ks[i][j] = k[i][0] * s[0][j] + k[i][1] * s[1][j];
            }
        }
        let mut cov = p;
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] -= ks[i][0] * k[j][0] + ks[i][1] * k[j][1];
            }
        }
        (mean, cov)
    }

    #[test]
    fn matches_scalar_oracle_in_two_dimensions() {
        let b = GaussianBelief::standard(2);
        let u = ekf_update(&b, 1, 1, &noise(0.1, 0.0, 0.5)).unwrap();
        let (mean, cov) = two_action_oracle([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 0.5, 1);
        assert!((u.mean[0] - mean[0]).abs() < 1e-12);
        assert!((u.mean[1] - mean[1]).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((u.cov[(i, j)] - cov[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_scalar_oracle_off_centre() {
        let p = [[1.3, 0.2], [0.2, 0.7]];
        let b = GaussianBelief::new(vec![0.4, -0.9], Matrix::from_rows(&[p[0].to_vec(), p[1].to_vec()])).unwrap();
        let u = ekf_update(&b, 0, 4, &noise(0.1, 0.0, 0.05)).unwrap();
        let (mean, cov) = two_action_oracle([0.4, -0.9], p, 0.05, 0);
        assert!((u.mean[0] - mean[0]).abs() < 1e-12 && (u.mean[1] - mean[1]).abs() < 1e-12);
        assert!((u.cov[(0, 1)] - cov[0][1]).abs() < 1e-12);
    }

    #[test]
    fn inverse_t_schedule() {
        assert_eq!(ZetaSchedule::InverseT.at(4), 0.25);
        assert_eq!(ZetaSchedule::InverseT.at(0), 1.0);
        assert_eq!(ZetaSchedule::Fixed(0.3).at(100), 0.3);
        assert_eq!("1/t".parse::<ZetaSchedule>().unwrap(), ZetaSchedule::InverseT);
        assert!("0".parse::<ZetaSchedule>().is_err());
        assert!("abc".parse::<ZetaSchedule>().is_err());
    }

    #[test]
    fn gain_shrinks_as_observation_noise_grows() {
        let b = GaussianBelief::new(vec![0.2, -0.1, 0.5], Matrix::identity(3).scale(0.8)).unwrap();
        let mut last = f64::INFINITY;
        for zeta in [0.001, 0.01, 0.1, 1.0, 10.0] {
            let u = ekf_update(&b, 1, 1, &noise(0.1, 0.0, zeta)).unwrap();
            let shift = u.mean[1] - b.mean[1];
            assert!(shift > 0.0 && shift < last);
            last = shift;
        }
    }

    #[test]
    fn zero_observation_noise_is_singular() {
        let b = GaussianBelief::standard(3);
        let mut cfg = noise(0.1, 0.0, 1.0);
        cfg.zeta = ZetaSchedule::Fixed(0.0);
        assert!(ekf_update(&b, 0, 1, &cfg).is_err());
    }

    fn increments(mean: &[f64], c: f64, zeta: f64, k: usize) -> (Vec<f64>, GaussianBelief) {
        let n = mean.len();
        let b = GaussianBelief::new(mean.to_vec(), Matrix::identity(n).scale(c)).unwrap();
        let u = ekf_update(&b, k, 1, &noise(0.1, 0.0, zeta)).unwrap();
        (u.mean.iter().zip(mean).map(|(a, b)| a - b).collect(), u)
    }

    #[test]
    fn unlikely_observation_can_trail_under_heavy_observation_noise() {
        // With three or more actions the observed action's increment is not
        // always the largest: here sigma = (0.022, 0.749, 0.228) and the
        // third action gains more than the observed first one.
        let (delta, _) = increments(&[-2.3258520333740322, 1.1885147395921776, 0.0], 0.05, 0.5494646723393954, 0);
        assert!(delta[0] > 0.0);
        assert!(delta[2] > delta[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn two_action_observed_increment_is_largest(
            mean in prop::collection::vec(-3.0f64..3.0, 2),
            c in 0.05f64..5.0,
            zeta in 0.001f64..2.0,
            k in 0usize..2,
        ) {
            let (delta, u) = increments(&mean, c, zeta, k);
            prop_assert!(delta[k] > 0.0);
            prop_assert!(delta[k] > delta[1 - k]);
            prop_assert!(u.cov.is_symmetric_psd());
        }

        /// For more actions the ordering holds once the observation noise is
        /// small against the prior spread of the least likely action.
        #[test]
        fn observed_increment_is_largest_under_small_observation_noise(
            mean in prop::collection::vec(-3.0f64..3.0, 3..=6),
            c in 0.05f64..5.0,
            ratio in 1e-6f64..1.0,
            pick in any::<prop::sample::Index>(),
        ) {
            let n = mean.len();
            let k = pick.index(n);
            let s = softmax_probs(&mean, 1.0).unwrap();
            let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
            let zeta = ratio * c * smin * smin;
            let (delta, u) = increments(&mean, c, zeta, k);
            prop_assert!(delta[k] > 0.0);
            for j in (0..n).filter(|&j| j != k) {
                prop_assert!(delta[k] > delta[j], "delta = {:?}", delta);
            }
            prop_assert!(u.cov.is_symmetric_psd());
        }
    }
}
