//! Aggregate statistics over replication traces.

use crate::error::{Error, Result};

use super::ReplicationTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStats {
    pub replications: usize,
    /// Replications that ended with an error; excluded from every mean below.
    pub failures: usize,
    /// Percentage whose final joint action is a pure Nash equilibrium in every stage.
    pub percent_converged: f64,
    /// Percentage that completed the task, for scenarios that define one.
    pub percent_completed: Option<f64>,
    /// Per stage, mean first round after which the joint action never changes.
    pub mean_iterations_to_consensus: Vec<f64>,
    /// Per stage, mean team reward at every round.
    pub mean_reward_curve: Vec<Vec<f64>>,
    /// Mean score of the final joint action, averaged over stages.
    pub mean_final_score: f64,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Summarises traces produced from one configuration. Percentages are over
/// all replications, failures counting as not converged.
pub fn convergence_stats(traces: &[ReplicationTrace]) -> Result<ConvergenceStats> {
    if traces.is_empty() {
        return Err(Error::Empty("no traces to summarise".into()));
    }
    let ok: Vec<&ReplicationTrace> = traces.iter().filter(|t| !t.failed()).collect();
    let total = traces.len() as f64;
    let percent_converged = 100.0 * traces.iter().filter(|t| t.converged()).count() as f64 / total;
    let percent_completed = if ok.iter().all(|t| t.completed().is_some()) && !ok.is_empty() {
        Some(100.0 * traces.iter().filter(|t| t.completed() == Some(true)).count() as f64 / total)
    } else {
        None
    };
    let stages = ok.iter().map(|t| t.stages.len()).max().unwrap_or(0);
    let mean_iterations_to_consensus = (0..stages)
        .map(|s| mean(ok.iter().filter_map(|t| t.stages.get(s)?.consensus_iteration()).map(|c| c as f64)))
        .collect();
    let mean_reward_curve = (0..stages)
        .map(|s| {
            let rounds = ok.iter().filter_map(|t| t.stages.get(s)).map(|st| st.global_rewards.len()).max().unwrap_or(0);
            (0..rounds)
                .map(|k| mean(ok.iter().filter_map(|t| t.stages.get(s)?.global_rewards.get(k).copied())))
                .collect()
        })
        .collect();
    let mean_final_score = mean(ok.iter().flat_map(|t| t.stages.iter().filter_map(|s| s.final_score())));
    Ok(ConvergenceStats {
        replications: traces.len(),
        failures: traces.len() - ok.len(),
        percent_converged,
        percent_completed,
        mean_iterations_to_consensus,
        mean_reward_curve,
        mean_final_score,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// Mean seconds per replication spent in each agent's learner.
    pub per_agent: Vec<f64>,
    /// Mean over agents of `per_agent`.
    pub mean: f64,
}

/// Mean learner wall time per agent per replication, over non-failed traces.
pub fn timing_report(traces: &[ReplicationTrace]) -> Result<TimingReport> {
    let ok: Vec<&ReplicationTrace> = traces.iter().filter(|t| !t.failed()).collect();
    if ok.is_empty() {
        return Err(Error::Empty("no successful traces to time".into()));
    }
    let agents = ok.iter().map(|t| t.agent_seconds.len()).max().unwrap_or(0);
    if agents == 0 {
        return Err(Error::Empty("traces carry no timing data".into()));
    }
    let per_agent: Vec<f64> = (0..agents)
        .map(|i| mean(ok.iter().filter_map(|t| t.agent_seconds.get(i).copied())))
        .collect();
    let mean_all = mean(per_agent.iter().copied());
    Ok(TimingReport {
        per_agent,
        mean: mean_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::StageTrace;

    fn trace(joints: Vec<Vec<usize>>, converged: bool, rewards: Vec<f64>) -> ReplicationTrace {
        ReplicationTrace {
            replication: 0,
            stages: vec![StageTrace {
                scores: rewards.clone(),
                rewards: rewards.iter().map(|&r| vec![r, r]).collect(),
                global_rewards: rewards,
                joints,
                converged,
                success: None,
            }],
            agent_seconds: vec![0.5, 1.5],
            failure: None,
        }
    }

    #[test]
    fn all_traces_at_equilibrium_give_full_convergence() {
        let ts = vec![
            trace(vec![vec![0, 0], vec![0, 0]], true, vec![1.0, 1.0]),
            trace(vec![vec![0, 1], vec![0, 0]], true, vec![0.0, 1.0]),
        ];
        let s = convergence_stats(&ts).unwrap();
        assert_eq!(s.percent_converged, 100.0);
        assert_eq!(s.mean_iterations_to_consensus, vec![1.5]);
        assert_eq!(s.mean_reward_curve, vec![vec![0.5, 1.0]]);
        assert_eq!(s.mean_final_score, 1.0);
        assert_eq!(s.percent_completed, None);
    }

    #[test]
    fn failures_are_counted_separately() {
        let mut bad = trace(vec![], false, vec![]);
        bad.failure = Some("boom".into());
        let ts = vec![trace(vec![vec![1, 1]], true, vec![1.0]), bad];
        let s = convergence_stats(&ts).unwrap();
        assert_eq!(s.failures, 1);
        assert_eq!(s.percent_converged, 50.0);
        assert_eq!(s.mean_final_score, 1.0);
    }

    #[test]
    fn timing_needs_traces() {
        assert!(timing_report(&[]).is_err());
        let r = timing_report(&[trace(vec![vec![0, 0]], true, vec![1.0])]).unwrap();
        assert_eq!(r.per_agent, vec![0.5, 1.5]);
        assert_eq!(r.mean, 1.0);
        assert!(convergence_stats(&[]).is_err());
    }
}
