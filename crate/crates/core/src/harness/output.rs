//! CSV serialisation of traces, metrics and sweeps.
//!
//! Columns:
//! - `traces.csv`: replication, stage, iteration, agent, action, reward
//! - `metrics.csv`: metric, scenario, learner, value
//! - `sweep.csv`: xi, zeta, mse
//!
//! Stages and iterations are 1-based. Floats carry 12 significant digits.

use crate::error::{Error, Result};

use super::{ConvergenceStats, ReplicationTrace, SweepResult};

/// Formats `x` with 12 significant digits, dropping trailing zeros.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let magnitude = rounded.abs();
    if (1e-5..1e15).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn traces_csv(traces: &[ReplicationTrace]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replication", "stage", "iteration", "agent", "action", "reward"])
        .map_err(csv_err)?;
    for t in traces {
        for (s, stage) in t.stages.iter().enumerate() {
            for (k, (joint, rewards)) in stage.joints.iter().zip(&stage.rewards).enumerate() {
                for (i, (a, r)) in joint.iter().zip(rewards).enumerate() {
                    w.write_record([
                        t.replication.to_string(),
                        (s + 1).to_string(),
                        (k + 1).to_string(),
                        i.to_string(),
                        a.to_string(),
                        format_float(*r),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub scenario: String,
    pub learner: String,
    pub value: f64,
}

/// Rows for the headline statistics of one run.
pub fn summary_rows(scenario: &str, learner: &str, stats: &ConvergenceStats) -> Vec<MetricRow> {
    let row = |metric: String, value: f64| MetricRow {
        metric,
        scenario: scenario.to_string(),
        learner: learner.to_string(),
        value,
    };
    let mut rows = vec![
        row("replications".into(), stats.replications as f64),
        row("failures".into(), stats.failures as f64),
        row("percent_converged".into(), stats.percent_converged),
        row("mean_final_score".into(), stats.mean_final_score),
    ];
    if let Some(p) = stats.percent_completed {
        rows.push(row("percent_completed".into(), p));
    }
    let multi = stats.mean_iterations_to_consensus.len() > 1;
    for (s, m) in stats.mean_iterations_to_consensus.iter().enumerate() {
        let name = if multi {
            format!("mean_iterations_to_consensus_stage{}", s + 1)
        } else {
            "mean_iterations_to_consensus".to_string()
        };
        rows.push(row(name, *m));
    }
    if let Some(curve) = stats.mean_reward_curve.first().filter(|_| !multi) {
        for (k, v) in curve.iter().enumerate() {
            rows.push(row(format!("mean_reward_iter{}", k + 1), *v));
        }
    }
    rows
}

pub fn metrics_csv(rows: &[MetricRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "scenario", "learner", "value"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.metric.as_str(), r.scenario.as_str(), r.learner.as_str(), &format_float(r.value)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["xi", "zeta", "mse"]).map_err(csv_err)?;
    for (i, xi) in result.grid.xi.iter().enumerate() {
        for (j, zeta) in result.grid.zeta.iter().enumerate() {
            let z = match zeta {
                crate::filters::ZetaSchedule::Fixed(v) => format_float(*v),
                other => other.to_string(),
            };
            w.write_record([format_float(*xi), z, format_float(result.mse[i][j])])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::ZetaSchedule;
    use crate::harness::{SweepGrid, StageTrace};

    #[test]
    fn float_formatting_keeps_twelve_digits() {
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0 / 3.0 * 1000.0), "666.666666667");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(-1.5), "-1.5");
        assert_eq!(format_float(1.0e-9), "1e-9");
        assert_eq!(format_float(100.0), "100");
    }

    #[test]
    fn traces_layout() {
        let t = ReplicationTrace {
            replication: 4,
            stages: vec![StageTrace {
                joints: vec![vec![0, 1]],
                rewards: vec![vec![0.0, 0.5]],
                global_rewards: vec![0.25],
                scores: vec![0.25],
                converged: false,
                success: None,
            }],
            agent_seconds: vec![0.0, 0.0],
            failure: None,
        };
        let csv = traces_csv(&[t]).unwrap();
        assert_eq!(
            csv,
            "replication,stage,iteration,agent,action,reward\n4,1,1,0,0,0\n4,1,1,1,1,0.5\n"
        );
    }

    #[test]
    fn sweep_layout() {
        let r = SweepResult {
            grid: SweepGrid {
                xi: vec![0.1],
                zeta: vec![ZetaSchedule::Fixed(0.05), ZetaSchedule::InverseT],
            },
            mse: vec![vec![0.2, 0.1]],
            argmin: (0, 1),
        };
        assert_eq!(sweep_csv(&r).unwrap(), "xi,zeta,mse\n0.1,0.05,0.2\n0.1,1/t,0.1\n");
    }

    #[test]
    fn metrics_layout() {
        let rows = vec![MetricRow {
            metric: "percent_converged".into(),
            scenario: "coordination2".into(),
            learner: "ekf_fp".into(),
            value: 100.0,
        }];
        assert_eq!(
            metrics_csv(&rows).unwrap(),
            "metric,scenario,learner,value\npercent_converged,coordination2,ekf_fp,100\n"
        );
    }
}
