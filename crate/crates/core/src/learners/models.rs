//! Single-opponent strategy models: empirical counts, an EKF over
//! propensities, and a bootstrap particle filter over propensities.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Result};
use crate::filters::ekf::{ekf_predict, ekf_update, GaussianBelief, NoiseConfig};
use crate::filters::linalg::Matrix;
use crate::filters::softmax::softmax_probs;
use crate::game::MixedStrategy;
use crate::rng::StreamRng;

/// A belief about one opponent's mixed strategy that evolves round by round.
pub trait OpponentModel: Send {
    /// Incorporates last round's observed action (if any) and moves the
    /// belief to the current round.
    fn advance(&mut self, observed: Option<usize>, rng: &mut StreamRng) -> Result<()>;

    /// Current estimate of the opponent's strategy.
    fn strategy(&self) -> Result<MixedStrategy>;

    fn num_actions(&self) -> usize;
}

/// Empirical action counts with nonnegative prior weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingModel {
    weights: Vec<f64>,
}

impl CountingModel {
    pub fn new(initial_weights: Vec<f64>) -> Result<Self> {
        if initial_weights.is_empty() || initial_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return config(format!("initial weights must be nonnegative: {initial_weights:?}"));
        }
        Ok(Self {
            weights: initial_weights,
        })
    }

    pub fn uniform_prior(n: usize) -> Self {
        Self { weights: vec![1.0; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Adds one to the observed action's weight.
    pub fn observe(&mut self, action: usize) -> Result<()> {
        match self.weights.get_mut(action) {
            Some(w) => {
                *w += 1.0;
                Ok(())
            }
            None => config(format!("action {action} out of range")),
        }
    }
}

impl OpponentModel for CountingModel {
    fn advance(&mut self, observed: Option<usize>, _rng: &mut StreamRng) -> Result<()> {
        match observed {
            Some(a) => self.observe(a),
            None => Ok(()),
        }
    }

    fn strategy(&self) -> Result<MixedStrategy> {
        MixedStrategy::from_weights(&self.weights)
    }

    fn num_actions(&self) -> usize {
        self.weights.len()
    }
}

/// Extended Kalman filter over the opponent's propensities.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfModel {
    belief: GaussianBelief,
    noise: NoiseConfig,
    observations: u64,
}

impl EkfModel {
    pub fn new(initial: GaussianBelief, noise: NoiseConfig) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            belief: initial,
            noise,
            observations: 0,
        })
    }

    /// Current (predicted) belief.
    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }
}

impl OpponentModel for EkfModel {
    fn advance(&mut self, observed: Option<usize>, rng: &mut StreamRng) -> Result<()> {
        if let Some(action) = observed {
            self.observations += 1;
            self.belief = ekf_update(&self.belief, action, self.observations, &self.noise)?;
        }
        self.belief = ekf_predict(&self.belief, &self.noise, rng);
        Ok(())
    }

    fn strategy(&self) -> Result<MixedStrategy> {
        Ok(MixedStrategy::from_normalized(softmax_probs(
            &self.belief.mean,
            self.noise.tau,
        )?))
    }

    fn num_actions(&self) -> usize {
        self.belief.dim()
    }
}

/// Sequential importance resampling over propensity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleModel {
    dim: usize,
    /// Row-major, one propensity vector per particle.
    particles: Vec<f64>,
    /// Softmax of each particle, refreshed after every propagation.
    probs: Vec<f64>,
    weights: Vec<f64>,
    noise: NoiseConfig,
    resample_threshold: f64,
    degenerate_resets: u64,
    resamples: u64,
}

impl ParticleModel {
    /// Particles drawn as `center + N(0, I)`.
    pub fn new(
        center: &[f64],
        count: usize,
        noise: NoiseConfig,
        resample_threshold: f64,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        noise.validate()?;
        if count == 0 {
            return config("particle count must be at least 1");
        }
        if !(resample_threshold > 0.0 && resample_threshold <= 1.0) {
            return config(format!("resample threshold must be in (0, 1], got {resample_threshold}"));
        }
        let dim = center.len();
        let mut particles = Vec::with_capacity(count * dim);
        for _ in 0..count {
            for &c in center {
                let z: f64 = StandardNormal.sample(rng);
                particles.push(c + z);
            }
        }
        let mut model = Self {
            dim,
            particles,
            probs: vec![0.0; count * dim],
            weights: vec![1.0 / count as f64; count],
            noise,
            resample_threshold,
            degenerate_resets: 0,
            resamples: 0,
        };
        model.refresh_probs()?;
        Ok(model)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Times every particle had zero likelihood and weights were reset.
    pub fn degenerate_resets(&self) -> u64 {
        self.degenerate_resets
    }

    pub fn resamples(&self) -> u64 {
        self.resamples
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn refresh_probs(&mut self) -> Result<()> {
        for (q, p) in self.particles.chunks(self.dim).zip(self.probs.chunks_mut(self.dim)) {
            p.copy_from_slice(&softmax_probs(q, self.noise.tau)?);
        }
        Ok(())
    }

    fn reweight(&mut self, observed: usize) -> Result<()> {
        if observed >= self.dim {
            return config(format!("observed action {observed} out of range for {} actions", self.dim));
        }
        let mut total = 0.0;
        for (w, p) in self.weights.iter_mut().zip(self.probs.chunks(self.dim)) {
            *w *= p[observed];
            total += *w;
        }
        let n = self.weights.len() as f64;
        if !(total > 0.0) || !total.is_finite() {
            self.degenerate_resets += 1;
            self.weights.iter_mut().for_each(|w| *w = 1.0 / n);
        } else {
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(())
    }

    /// Systematic resampling.
    fn resample(&mut self, rng: &mut StreamRng) {
        let n = self.weights.len();
        let step = 1.0 / n as f64;
        let mut u = rng.random::<f64>() * step;
        let mut cumulative = self.weights[0];
        let mut src = 0;
        let mut particles = Vec::with_capacity(self.particles.len());
        for _ in 0..n {
            while u > cumulative && src + 1 < n {
                src += 1;
                cumulative += self.weights[src];
            }
            particles.extend_from_slice(&self.particles[src * self.dim..(src + 1) * self.dim]);
            u += step;
        }
        self.particles = particles;
        self.weights.iter_mut().for_each(|w| *w = step);
        self.resamples += 1;
    }

    fn propagate(&mut self, rng: &mut StreamRng) {
        let sd = self.noise.xi_tilde.sqrt();
        if sd == 0.0 {
            return;
        }
        for q in &mut self.particles {
            let z: f64 = StandardNormal.sample(rng);
            *q += sd * z;
        }
    }

    /// Weighted mean and covariance of the particle cloud.
    pub fn moments(&self) -> GaussianBelief {
        let mut mean = vec![0.0; self.dim];
        for (w, q) in self.weights.iter().zip(self.particles.chunks(self.dim)) {
            for (m, x) in mean.iter_mut().zip(q) {
                *m += w * x;
            }
        }
        let mut cov = Matrix::zeros(self.dim, self.dim);
        for (w, q) in self.weights.iter().zip(self.particles.chunks(self.dim)) {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    cov[(r, c)] += w * (q[r] - mean[r]) * (q[c] - mean[c]);
                }
            }
        }
        GaussianBelief { mean, cov }
    }
}

impl OpponentModel for ParticleModel {
    fn advance(&mut self, observed: Option<usize>, rng: &mut StreamRng) -> Result<()> {
        if let Some(action) = observed {
            self.reweight(action)?;
            if self.effective_sample_size() < self.resample_threshold * self.len() as f64 {
                self.resample(rng);
            }
        }
        self.propagate(rng);
        self.refresh_probs()
    }

    fn strategy(&self) -> Result<MixedStrategy> {
        let mut est = vec![0.0; self.dim];
        for (w, p) in self.weights.iter().zip(self.probs.chunks(self.dim)) {
            for (e, x) in est.iter_mut().zip(p) {
                *e += w * x;
            }
        }
        let total: f64 = est.iter().sum();
        est.iter_mut().for_each(|e| *e /= total);
        Ok(MixedStrategy::from_normalized(est))
    }

    fn num_actions(&self) -> usize {
        self.dim
    }
}
