//! Single-opponent tracking schedules used to tune the filter noise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::MixedStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingKind {
    /// `sigma_t(1) = (cos(2 pi t / period) + 1) / 2`
    Sinusoid,
    /// Action 1 for `t <= first_switch` and `t > second_switch`, action 2 in between.
    Abrupt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingSpec {
    pub kind: TrackingKind,
    pub horizon: u64,
    pub period: u64,
    pub first_switch: u64,
    pub second_switch: u64,
}

impl TrackingSpec {
    pub fn sinusoid() -> Self {
        Self {
            kind: TrackingKind::Sinusoid,
            horizon: 5000,
            period: 100,
            first_switch: 1250,
            second_switch: 3750,
        }
    }

    pub fn abrupt() -> Self {
        Self {
            kind: TrackingKind::Abrupt,
            ..Self::sinusoid()
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }
}

/// The opponent's true strategy at iteration `t` (1-based).
pub fn tracking_strategy(spec: &TrackingSpec, t: u64) -> Result<MixedStrategy> {
    if t == 0 || t > spec.horizon {
        return config(format!("iteration {t} outside 1..={}", spec.horizon));
    }
    let first = match spec.kind {
        TrackingKind::Sinusoid => {
            if spec.period == 0 {
                return config("sinusoid period must be positive");
            }
            ((2.0 * PI * t as f64 / spec.period as f64).cos() + 1.0) / 2.0
        }
        TrackingKind::Abrupt => {
            if t <= spec.first_switch || t > spec.second_switch {
                1.0
            } else {
                0.0
            }
        }
    };
    let first = first.clamp(0.0, 1.0);
    Ok(MixedStrategy::from_normalized(vec![first, 1.0 - first]))
}
