//! Warehouse patrol: robots with heterogeneous sensors choose an area and a
//! travel speed. All robots share the global reward
//!
//! `r_g(s) = -sum_i (c1 * T_i + c2 * v_i) + sum_n sum_k V_nk * (1 - prod_{i in n} (1 - E_ink))`
//!
//! where `T_i` is travel time to the chosen area and `E_ink` the robot's
//! efficiency against threat `k` (zero without the matching sensor).

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::{Game, JointMixedProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatCategory {
    Flammable,
    Chemical,
    Radioactive,
    SecuritySensitive,
}

impl ThreatCategory {
    pub const ALL: [ThreatCategory; 4] = [
        ThreatCategory::Flammable,
        ThreatCategory::Chemical,
        ThreatCategory::Radioactive,
        ThreatCategory::SecuritySensitive,
    ];

    /// The sensor able to detect this category.
    pub fn sensor(self) -> Sensor {
        match self {
            ThreatCategory::Flammable => Sensor::Fire,
            ThreatCategory::Chemical => Sensor::Chemical,
            ThreatCategory::Radioactive => Sensor::Geiger,
            ThreatCategory::SecuritySensitive => Sensor::Vision,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensor {
    Fire,
    Chemical,
    Geiger,
    Vision,
}

impl Sensor {
    pub const ALL: [Sensor; 4] = [Sensor::Fire, Sensor::Chemical, Sensor::Geiger, Sensor::Vision];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Battery {
    Short,
    Fair,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorQuality {
    Low,
    Medium,
    High,
}

/// Detection efficiency by sensor quality (rows) and battery capacity (columns).
pub fn efficiency(quality: SensorQuality, battery: Battery) -> f64 {
    const TABLE: [[f64; 3]; 3] = [[0.2, 0.3, 0.5], [0.3, 0.5, 0.7], [0.5, 0.7, 0.9]];
    let q = quality as usize;
    let b = battery as usize;
    TABLE[q][b]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Robot {
    pub position: [f64; 2],
    pub sensors: Vec<Sensor>,
    pub battery: Battery,
    pub quality: SensorQuality,
}

impl Robot {
    pub fn efficiency_against(&self, category: ThreatCategory) -> f64 {
        if self.sensors.contains(&category.sensor()) {
            efficiency(self.quality, self.battery)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threat {
    pub category: ThreatCategory,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub position: [f64; 2],
    pub threats: Vec<Threat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarehouseSpec {
    pub robots: Vec<Robot>,
    pub areas: Vec<Area>,
    /// Numeric speed of each velocity option (slow, medium, fast).
    pub speeds: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// Category combinations that may not share an area.
    pub forbidden: Vec<Vec<ThreatCategory>>,
}

pub const MAX_THREATS_PER_AREA: usize = 2;
pub const MAX_SENSORS_PER_ROBOT: usize = 3;

fn default_forbidden() -> Vec<Vec<ThreatCategory>> {
    vec![vec![ThreatCategory::Flammable, ThreatCategory::Radioactive, ThreatCategory::Chemical]]
}

impl WarehouseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.robots.is_empty() || self.areas.is_empty() {
            return config("warehouse needs at least one robot and one area");
        }
        if self.speeds.is_empty() || self.speeds.iter().any(|s| !(*s > 0.0)) {
            return config("speeds must be positive");
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return config("cost weights must be nonnegative");
        }
        for (i, r) in self.robots.iter().enumerate() {
            if r.sensors.is_empty() || r.sensors.len() > MAX_SENSORS_PER_ROBOT {
                return config(format!("robot {i} must carry 1..={MAX_SENSORS_PER_ROBOT} sensors"));
            }
        }
        for (n, area) in self.areas.iter().enumerate() {
            if area.threats.len() > MAX_THREATS_PER_AREA {
                return config(format!("area {n} has more than {MAX_THREATS_PER_AREA} threat categories"));
            }
            if area.threats.iter().any(|t| !(t.value > 0.0)) {
                return config(format!("area {n} has a non-positive threat value"));
            }
            let cats: Vec<ThreatCategory> = area.threats.iter().map(|t| t.category).collect();
            for (k, c) in cats.iter().enumerate() {
                if cats[k + 1..].contains(c) {
                    return config(format!("area {n} lists {c:?} twice"));
                }
            }
            if let Some(bad) = self.forbidden.iter().find(|f| !f.is_empty() && f.iter().all(|c| cats.contains(c))) {
                return config(format!("area {n} co-locates incompatible categories {bad:?}"));
            }
        }
        Ok(())
    }

    /// Detection ceiling: every threat found with probability 1, no movement cost.
    pub fn max_reward(&self) -> f64 {
        self.areas.iter().flat_map(|a| &a.threats).map(|t| t.value).sum()
    }

    pub fn num_actions(&self) -> usize {
        self.areas.len() * self.speeds.len()
    }

    /// Splits an action into `(area, speed option)`.
    pub fn decode(&self, action: usize) -> (usize, usize) {
        (action / self.speeds.len(), action % self.speeds.len())
    }

    pub fn travel_cost(&self, robot: usize, action: usize) -> f64 {
        let (n, v) = self.decode(action);
        let [rx, ry] = self.robots[robot].position;
        let [ax, ay] = self.areas[n].position;
        let distance = (rx - ax).hypot(ry - ay);
        let speed = self.speeds[v];
        self.c1 * distance / speed + self.c2 * speed
    }
}

/// Parameters for random warehouse instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarehouseParams {
    pub num_robots: usize,
    pub num_areas: usize,
    #[serde(default = "default_grid")]
    pub grid_size: f64,
    #[serde(default = "default_value_range")]
    pub value_range: [f64; 2],
    #[serde(default = "default_threats")]
    pub threats_per_area: usize,
    #[serde(default = "default_speeds")]
    pub speeds: Vec<f64>,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_forbidden")]
    pub forbidden: Vec<Vec<ThreatCategory>>,
}

fn default_grid() -> f64 {
    10.0
}
fn default_value_range() -> [f64; 2] {
    [10.0, 30.0]
}
fn default_threats() -> usize {
    2
}
fn default_speeds() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn default_c1() -> f64 {
    1.0
}
fn default_c2() -> f64 {
    1.0 / 6.0
}

impl WarehouseParams {
    pub fn new(num_robots: usize, num_areas: usize) -> Self {
        Self {
            num_robots,
            num_areas,
            grid_size: default_grid(),
            value_range: default_value_range(),
            threats_per_area: default_threats(),
            speeds: default_speeds(),
            c1: default_c1(),
            c2: default_c2(),
            forbidden: default_forbidden(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_robots == 0 || self.num_areas == 0 {
            return config("num_robots and num_areas must be positive");
        }
        if self.threats_per_area == 0 || self.threats_per_area > MAX_THREATS_PER_AREA {
            return config(format!("threats_per_area must be in 1..={MAX_THREATS_PER_AREA}"));
        }
        let [lo, hi] = self.value_range;
        if !(lo > 0.0 && hi >= lo) {
            return config("value_range must satisfy 0 < low <= high");
        }
        if !(self.grid_size > 0.0) {
            return config("grid_size must be positive");
        }
        Ok(())
    }

    /// Draws a random instance: uniform positions on the grid, uniform
    /// sensor kits, batteries and qualities, distinct threat categories per
    /// area. Robot draws are rejected until every present threat category
    /// has at least one capable robot.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WarehouseSpec> {
        self.validate()?;
        let g = self.grid_size;
        let mut areas = Vec::with_capacity(self.num_areas);
        for _ in 0..self.num_areas {
            let mut attempts = 0;
            let threats = loop {
                attempts += 1;
                if attempts > 10_000 {
                    return config("could not draw threat categories satisfying the co-location constraints");
                }
                let cats: Vec<ThreatCategory> = sample(rng, ThreatCategory::ALL.len(), self.threats_per_area)
                    .into_iter()
                    .map(|k| ThreatCategory::ALL[k])
                    .collect();
                if self.forbidden.iter().any(|f| !f.is_empty() && f.iter().all(|c| cats.contains(c))) {
                    continue;
                }
                let [lo, hi] = self.value_range;
                break cats
                    .into_iter()
                    .map(|category| Threat {
                        category,
                        value: if hi > lo { rng.random_range(lo..hi) } else { lo },
                    })
                    .collect::<Vec<_>>();
            };
            areas.push(Area {
                position: [rng.random_range(0.0..g), rng.random_range(0.0..g)],
                threats,
            });
        }
        let needed: Vec<ThreatCategory> = {
            let mut v: Vec<ThreatCategory> = areas.iter().flat_map(|a| a.threats.iter().map(|t| t.category)).collect();
            v.sort_by_key(|c| *c as usize);
            v.dedup();
            v
        };
        let mut attempts = 0;
        let robots = loop {
            attempts += 1;
            if attempts > 10_000 {
                return config("could not draw a robot team covering every threat category");
            }
            let robots: Vec<Robot> = (0..self.num_robots).map(|_| random_robot(rng, g)).collect();
            let covered = needed
                .iter()
                .all(|c| robots.iter().any(|r| r.sensors.contains(&c.sensor())));
            if covered {
                break robots;
            }
        };
        let spec = WarehouseSpec {
            robots,
            areas,
            speeds: self.speeds.clone(),
            c1: self.c1,
            c2: self.c2,
            forbidden: self.forbidden.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn random_robot<R: Rng + ?Sized>(rng: &mut R, grid: f64) -> Robot {
    let kit = rng.random_range(1..=MAX_SENSORS_PER_ROBOT);
    let mut sensors: Vec<Sensor> = sample(rng, Sensor::ALL.len(), kit).into_iter().map(|k| Sensor::ALL[k]).collect();
    sensors.sort_by_key(|s| *s as usize);
    let battery = [Battery::Short, Battery::Fair, Battery::Long][rng.random_range(0..3)];
    let quality = [SensorQuality::Low, SensorQuality::Medium, SensorQuality::High][rng.random_range(0..3)];
    Robot {
        position: [rng.random_range(0.0..grid), rng.random_range(0.0..grid)],
        sensors,
        battery,
        quality,
    }
}

/// The warehouse game; action `n * speeds + v` sends a robot to area `n` at speed option `v`.
#[derive(Debug, Clone)]
pub struct WarehouseGame {
    spec: WarehouseSpec,
    action_counts: Vec<usize>,
    /// `cost[i * actions + a]`
    cost: Vec<f64>,
    /// `eff[i][n]` holds one efficiency per threat of area `n`.
    eff: Vec<Vec<Vec<f64>>>,
}

pub fn build_warehouse_game(spec: WarehouseSpec) -> Result<WarehouseGame> {
    spec.validate()?;
    let robots = spec.robots.len();
    let actions = spec.num_actions();
    let cost = (0..robots)
        .flat_map(|i| (0..actions).map(move |a| (i, a)))
        .map(|(i, a)| spec.travel_cost(i, a))
        .collect();
    let eff = spec
        .robots
        .iter()
        .map(|r| {
            spec.areas
                .iter()
                .map(|area| area.threats.iter().map(|t| r.efficiency_against(t.category)).collect())
                .collect()
        })
        .collect();
    Ok(WarehouseGame {
        action_counts: vec![actions; robots],
        spec,
        cost,
        eff,
    })
}

impl WarehouseGame {
    pub fn spec(&self) -> &WarehouseSpec {
        &self.spec
    }

    pub fn efficiency(&self, robot: usize, area: usize, threat: usize) -> f64 {
        self.eff[robot][area][threat]
    }

    fn cost(&self, robot: usize, action: usize) -> f64 {
        self.cost[robot * self.spec.num_actions() + action]
    }

    /// Detection part of the global reward.
    pub fn detection_reward(&self, joint: &[usize]) -> f64 {
        let mut miss: Vec<Vec<f64>> = self.spec.areas.iter().map(|a| vec![1.0; a.threats.len()]).collect();
        for (i, &a) in joint.iter().enumerate() {
            let (n, _) = self.spec.decode(a);
            for (m, e) in miss[n].iter_mut().zip(&self.eff[i][n]) {
                *m *= 1.0 - e;
            }
        }
        self.spec
            .areas
            .iter()
            .zip(&miss)
            .flat_map(|(area, m)| area.threats.iter().zip(m).map(|(t, m)| t.value * (1.0 - m)))
            .sum()
    }

    pub fn global_reward(&self, joint: &[usize]) -> f64 {
        let movement: f64 = joint.iter().enumerate().map(|(i, &a)| self.cost(i, a)).sum();
        self.detection_reward(joint) - movement
    }

    /// Expected global reward for every action of `player`, others mixing
    /// independently. Exact: the detection term factorises over robots.
    pub fn expected_global_rewards(&self, player: usize, profile: &JointMixedProfile) -> Vec<f64> {
        let speeds = self.spec.speeds.len();
        let mut others_cost = 0.0;
        let mut miss: Vec<Vec<f64>> = self.spec.areas.iter().map(|a| vec![1.0; a.threats.len()]).collect();
        for (j, strategy) in profile.strategies().iter().enumerate() {
            if j == player {
                continue;
            }
            let probs = strategy.probs();
            others_cost += probs.iter().enumerate().map(|(a, p)| p * self.cost(j, a)).sum::<f64>();
            for (n, m) in miss.iter_mut().enumerate() {
                let p_area: f64 = probs[n * speeds..(n + 1) * speeds].iter().sum();
                if p_area == 0.0 {
                    continue;
                }
                for (mk, e) in m.iter_mut().zip(&self.eff[j][n]) {
                    *mk *= 1.0 - e * p_area;
                }
            }
        }
        let base_detection: Vec<f64> = self
            .spec
            .areas
            .iter()
            .zip(&miss)
            .map(|(area, m)| area.threats.iter().zip(m).map(|(t, m)| t.value * (1.0 - m)).sum())
            .collect();
        let total_base: f64 = base_detection.iter().sum();
        (0..self.spec.num_actions())
            .map(|a| {
                let (n, _) = self.spec.decode(a);
                let with_player: f64 = self.spec.areas[n]
                    .threats
                    .iter()
                    .zip(&miss[n])
                    .zip(&self.eff[player][n])
                    .map(|((t, m), e)| t.value * (1.0 - m * (1.0 - e)))
                    .sum();
                total_base - base_detection[n] + with_player - others_cost - self.cost(player, a)
            })
            .collect()
    }
}

impl Game for WarehouseGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn reward(&self, _player: usize, joint: &[usize]) -> f64 {
        self.global_reward(joint)
    }

    fn rewards(&self, joint: &[usize]) -> Vec<f64> {
        vec![self.global_reward(joint); self.action_counts.len()]
    }

    fn potential(&self, joint: &[usize]) -> Option<f64> {
        Some(self.global_reward(joint))
    }

    fn expected_reward(&self, player: usize, action: usize, profile: &JointMixedProfile) -> Result<f64> {
        Ok(self.expected_global_rewards(player, profile)[action])
    }

    fn expected_rewards_all(&self, player: usize, profile: &JointMixedProfile) -> Result<Vec<f64>> {
        Ok(self.expected_global_rewards(player, profile))
    }

    fn action_label(&self, _player: usize, action: usize) -> String {
        let (n, v) = self.spec.decode(action);
        let speed = match (self.spec.speeds.len(), v) {
            (3, 0) => "slow".to_string(),
            (3, 1) => "medium".to_string(),
            (3, 2) => "fast".to_string(),
            _ => format!("v{}", v + 1),
        };
        format!("area{}/{}", n + 1, speed)
    }
}

/// Normalised score `100 * r_g(s) / r_max`.
pub fn warehouse_score(joint: &[usize], game: &WarehouseGame) -> Result<f64> {
    let r_max = game.spec.max_reward();
    if !(r_max > 0.0) {
        return config("warehouse has no threat value to detect");
    }
    Ok(100.0 * game.global_reward(joint) / r_max)
}
