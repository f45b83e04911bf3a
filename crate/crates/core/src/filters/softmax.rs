use crate::error::{Error, Result};
use crate::filters::linalg::Matrix;
use crate::game::MixedStrategy;

/// Boltzmann map from propensities to a mixed strategy at temperature `tau`.
///
/// The maximum is subtracted before exponentiating, so large propensities
/// saturate to a pure strategy instead of overflowing.
pub fn softmax_link(q: &[f64], tau: f64) -> Result<MixedStrategy> {
    Ok(MixedStrategy::from_normalized(softmax_probs(q, tau)?))
}

pub(crate) fn softmax_probs(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Numeric(format!("softmax temperature must be positive, got {tau}")));
    }
    if q.is_empty() {
        return Err(Error::Numeric("softmax of an empty vector".into()));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite propensity in {q:?}")));
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = q.iter().map(|&x| ((x - max) / tau).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Jacobian of [`softmax_link`]: `(1/tau) * (diag(s) - s s^T)`.
pub fn softmax_jacobian(q: &[f64], tau: f64) -> Result<Matrix> {
    let s = softmax_probs(q, tau)?;
    Ok(jacobian_from_probs(&s, tau))
}

pub(crate) fn jacobian_from_probs(s: &[f64], tau: f64) -> Matrix {
    let n = s.len();
    let mut h = Matrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            h[(j, k)] = if j == k { s[j] * (1.0 - s[j]) } else { -s[j] * s[k] } / tau;
        }
    }
    h
}
