//! Sensor network scheduling: each sensor picks the time slot in which it is
//! awake. An event is seen by any awake in-range sensor with probability
//! `min(1, 1/d)`, and yields `V_e * (1 - prod (1 - p_ie))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::{Game, JointMixedProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEvent {
    pub position: [f64; 2],
    /// Start time in hours from the beginning of the day.
    pub start: f64,
    /// Duration in hours.
    pub duration: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorNetSpec {
    pub sensors: Vec<[f64; 2]>,
    pub events: Vec<SensorEvent>,
    pub comm_range: f64,
    pub sense_range: f64,
    pub num_slots: usize,
    /// Length of the (circular) day in hours; slots split it evenly.
    pub day_length: f64,
}

impl SensorNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return config("sensor network needs at least one sensor");
        }
        if self.num_slots == 0 {
            return config("num_slots must be positive");
        }
        if !(self.comm_range >= 0.0 && self.sense_range > 0.0 && self.day_length > 0.0) {
            return config("ranges and day length must be positive");
        }
        for (k, e) in self.events.iter().enumerate() {
            if !(e.duration > 0.0 && e.value > 0.0 && e.start.is_finite()) {
                return config(format!("event {k} needs a positive duration and value"));
            }
        }
        Ok(())
    }

    pub fn slot_length(&self) -> f64 {
        self.day_length / self.num_slots as f64
    }

    /// Whether an event overlaps slot `slot` for a positive amount of time,
    /// treating the day as circular.
    pub fn overlaps(&self, event: &SensorEvent, slot: usize) -> bool {
        let day = self.day_length;
        let len = self.slot_length();
        let lo = slot as f64 * len;
        let hi = lo + len;
        if event.duration >= day {
            return true;
        }
        let start = event.start.rem_euclid(day);
        let end = start + event.duration;
        // The event interval may wrap past midnight; test both copies.
        [start, start - day]
            .iter()
            .any(|&s| s < hi && s + (end - start) > lo)
    }

    /// Detection probability of `sensor` for `event`: `min(1, 1/d)` inside
    /// the sensing range, zero outside it.
    pub fn detection_probability(&self, sensor: usize, event: &SensorEvent) -> f64 {
        let d = distance(self.sensors[sensor], event.position);
        if d > self.sense_range {
            0.0
        } else if d <= 1.0 {
            1.0
        } else {
            1.0 / d
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameters for random sensor networks on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorParams {
    #[serde(default = "default_sensors")]
    pub num_sensors: usize,
    #[serde(default = "default_events")]
    pub num_events: usize,
    #[serde(default = "default_comm")]
    pub comm_range: f64,
    #[serde(default = "default_sense")]
    pub sense_range: f64,
    #[serde(default = "default_slots")]
    pub num_slots: usize,
    #[serde(default = "default_day")]
    pub day_length: f64,
    #[serde(default = "default_max_duration")]
    pub max_duration: f64,
    #[serde(default = "default_max_value")]
    pub max_value: f64,
}

fn default_sensors() -> usize {
    40
}
fn default_events() -> usize {
    20
}
fn default_comm() -> f64 {
    0.6
}
fn default_sense() -> f64 {
    0.3
}
fn default_slots() -> usize {
    4
}
fn default_day() -> f64 {
    24.0
}
fn default_max_duration() -> f64 {
    6.0
}
fn default_max_value() -> f64 {
    1.0
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            num_sensors: default_sensors(),
            num_events: default_events(),
            comm_range: default_comm(),
            sense_range: default_sense(),
            num_slots: default_slots(),
            day_length: default_day(),
            max_duration: default_max_duration(),
            max_value: default_max_value(),
        }
    }
}

impl SensorParams {
    /// Uniform positions on the unit square, uniform start times over the
    /// day, durations uniform on `(0, max_duration]` and values uniform on
    /// `(0, max_value]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SensorNetSpec> {
        if !(self.max_duration > 0.0 && self.max_value > 0.0) {
            return config("max_duration and max_value must be positive");
        }
        let sensors = (0..self.num_sensors)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let events = (0..self.num_events)
            .map(|_| SensorEvent {
                position: [rng.random::<f64>(), rng.random::<f64>()],
                start: rng.random_range(0.0..self.day_length),
                duration: self.max_duration * (1.0 - rng.random::<f64>()),
                value: self.max_value * (1.0 - rng.random::<f64>()),
            })
            .collect();
        let spec = SensorNetSpec {
            sensors,
            events,
            comm_range: self.comm_range,
            sense_range: self.sense_range,
            num_slots: self.num_slots,
            day_length: self.day_length,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
struct Coverage {
    event: usize,
    p: f64,
}

/// Sensor scheduling game. Each sensor's reward sums the utility of events in
/// its sensing range, counting only itself and its communication neighbours.
#[derive(Debug, Clone)]
pub struct SensorGame {
    spec: SensorNetSpec,
    action_counts: Vec<usize>,
    /// Events each sensor can sense, with detection probability.
    coverage: Vec<Vec<Coverage>>,
    /// `awake[e][j]`: event `e` overlaps slot `j`.
    awake: Vec<Vec<bool>>,
    /// Sensors that can sense each event.
    watchers: Vec<Vec<(usize, f64)>>,
    neighbours: Vec<Vec<bool>>,
}

pub fn build_sensor_game(spec: SensorNetSpec) -> Result<SensorGame> {
    spec.validate()?;
    let n = spec.sensors.len();
    let coverage: Vec<Vec<Coverage>> = (0..n)
        .map(|i| {
            spec.events
                .iter()
                .enumerate()
                .filter(|(_, e)| distance(spec.sensors[i], e.position) <= spec.sense_range)
                .map(|(event, e)| Coverage {
                    event,
                    p: spec.detection_probability(i, e),
                })
                .collect()
        })
        .collect();
    let mut watchers = vec![Vec::new(); spec.events.len()];
    for (i, cov) in coverage.iter().enumerate() {
        for c in cov {
            watchers[c.event].push((i, c.p));
        }
    }
    let awake = spec
        .events
        .iter()
        .map(|e| (0..spec.num_slots).map(|j| spec.overlaps(e, j)).collect())
        .collect();
    let neighbours = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| k == i || distance(spec.sensors[i], spec.sensors[k]) <= spec.comm_range)
                .collect()
        })
        .collect();
    Ok(SensorGame {
        action_counts: vec![spec.num_slots; n],
        spec,
        coverage,
        awake,
        watchers,
        neighbours,
    })
}

impl SensorGame {
    pub fn spec(&self) -> &SensorNetSpec {
        &self.spec
    }

    /// Utility of event `e` when every sensor accepted by `include` follows `joint`.
    fn event_utility(&self, e: usize, joint: &[usize], include: impl Fn(usize) -> bool) -> f64 {
        let miss: f64 = self.watchers[e]
            .iter()
            .filter(|(k, _)| include(*k) && self.awake[e][joint[*k]])
            .map(|(_, p)| 1.0 - p)
            .product();
        self.spec.events[e].value * (1.0 - miss)
    }

    pub fn global_reward(&self, joint: &[usize]) -> f64 {
        (0..self.spec.events.len()).map(|e| self.event_utility(e, joint, |_| true)).sum()
    }

    /// Reward with every sensor awake all day.
    pub fn max_reward(&self) -> f64 {
        self.watchers
            .iter()
            .zip(&self.spec.events)
            .map(|(w, ev)| ev.value * (1.0 - w.iter().map(|(_, p)| 1.0 - p).product::<f64>()))
            .sum()
    }

    /// Sensor `player`'s local utility.
    pub fn local_reward(&self, player: usize, joint: &[usize]) -> f64 {
        let nb = &self.neighbours[player];
        self.coverage[player]
            .iter()
            .map(|c| self.event_utility(c.event, joint, |k| nb[k]))
            .sum()
    }

    /// Expected local utility of every slot for `player`, others mixing independently.
    pub fn expected_local_rewards(&self, player: usize, profile: &JointMixedProfile) -> Vec<f64> {
        let nb = &self.neighbours[player];
        let mut out = vec![0.0; self.spec.num_slots];
        for c in &self.coverage[player] {
            let e = c.event;
            let awake = &self.awake[e];
            let others_miss: f64 = self.watchers[e]
                .iter()
                .filter(|(k, _)| *k != player && nb[*k])
                .map(|(k, p)| {
                    let p_awake: f64 = profile
                        .strategy(*k)
                        .probs()
                        .iter()
                        .zip(awake)
                        .filter(|(_, a)| **a)
                        .map(|(q, _)| q)
                        .sum();
                    1.0 - p * p_awake
                })
                .product();
            let value = self.spec.events[e].value;
            for (j, o) in out.iter_mut().enumerate() {
                let own = if awake[j] { 1.0 - c.p } else { 1.0 };
                *o += value * (1.0 - own * others_miss);
            }
        }
        out
    }
}

impl Game for SensorGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn reward(&self, player: usize, joint: &[usize]) -> f64 {
        self.local_reward(player, joint)
    }

    fn potential(&self, joint: &[usize]) -> Option<f64> {
        Some(self.global_reward(joint))
    }

    fn expected_reward(&self, player: usize, action: usize, profile: &JointMixedProfile) -> Result<f64> {
        Ok(self.expected_local_rewards(player, profile)[action])
    }

    fn expected_rewards_all(&self, player: usize, profile: &JointMixedProfile) -> Result<Vec<f64>> {
        Ok(self.expected_local_rewards(player, profile))
    }

    fn action_label(&self, _player: usize, action: usize) -> String {
        let len = self.spec.slot_length();
        format!("{:.0}h-{:.0}h", action as f64 * len, (action + 1) as f64 * len)
    }
}

/// Global reward normalised by the all-awake ceiling. A network where no
/// event can be sensed at all scores 1.
pub fn sensor_score(joint: &[usize], game: &SensorGame) -> f64 {
    let ceiling = game.max_reward();
    if ceiling > 0.0 {
        game.global_reward(joint) / ceiling
    } else {
        1.0
    }
}
