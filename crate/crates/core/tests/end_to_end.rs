use ekffp::config::RunConfig;
use ekffp::game::{enumerate_pure_nash, format_joint, verify_exact_potential, FnGame, Game};
use ekffp::harness::output::{metrics_csv, summary_rows, traces_csv};
use ekffp::harness::{convergence_stats, run_replication, run_replications};
use ekffp::learners::{LearnerConfig, LearnerKind};
use ekffp::scenarios::{coordination_game, matching_pennies, three_action_game, ScenarioConfig};

const TOML: &str = r#"
schema_version = 1
iterations = 60
replications = 12
seed = 3

[scenario]
kind = "symmetric3"

[learner]
kind = "ekf_fp"
"#;

#[test]
fn config_file_to_csv() {
    let config = RunConfig::from_toml(TOML).unwrap();
    let traces = run_replications(&config, Some(2)).unwrap();
    assert_eq!(traces.len(), 12);
    assert!(traces.iter().all(|t| !t.failed() && t.stages[0].joints.len() == 60));
    let stats = convergence_stats(&traces).unwrap();
    assert_eq!(stats.percent_converged, 100.0);
    let csv = traces_csv(&traces).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12 * 60 * 2);
    let metrics = metrics_csv(&summary_rows("symmetric3", "ekf_fp", &stats)).unwrap();
    assert!(metrics.contains("percent_converged,symmetric3,ekf_fp,100\n"));
}

#[test]
fn replication_does_not_depend_on_its_neighbours() {
    let mut config = RunConfig::from_toml(TOML).unwrap();
    let all = run_replications(&config, None).unwrap();
    config.replications = 1;
    let alone = run_replication(&config, 7);
    assert_eq!(alone.stages, all[7].stages);
}

#[test]
fn symmetric_game_equilibria() {
    let g = coordination_game();
    let labels: Vec<String> = enumerate_pure_nash(&g, 1000).unwrap().iter().map(|j| format_joint(&g, j)).collect();
    assert_eq!(labels, ["(U,L)", "(D,R)"]);
    assert_eq!(enumerate_pure_nash(&three_action_game(), 1000).unwrap().len(), 3);
    assert!(enumerate_pure_nash(&matching_pennies(), 1000).unwrap().is_empty());
}

#[test]
fn wonderful_life_game_has_the_global_reward_as_potential() {
    // Three players covering two sites; a site is worth its value once covered.
    let global = |j: &[usize]| -> f64 {
        let covered = |s: usize| j.iter().any(|&a| a == s);
        3.0 * covered(1) as u8 as f64 + 2.0 * covered(2) as u8 as f64
    };
    let game = FnGame::wonderful_life(vec![3, 3, 3], global, vec![0, 0, 0]).unwrap();
    assert!(verify_exact_potential(&game, global, 1000).unwrap());
    // Covering a site someone else already covers earns nothing.
    assert_eq!(game.reward(0, &[1, 1, 2]), 0.0);
    assert_eq!(game.reward(2, &[1, 1, 2]), 2.0);
}

#[test]
fn every_learner_runs_every_small_scenario() {
    let scenarios = [ScenarioConfig::Coordination2, ScenarioConfig::Symmetric3, ScenarioConfig::MatchingPennies];
    let kinds = [LearnerKind::ClassicFp, LearnerKind::EkfFp, LearnerKind::PfFp, LearnerKind::Greedy, LearnerKind::Random];
    for scenario in scenarios {
        for kind in kinds {
            let mut learner = LearnerConfig::new(kind);
            learner.particles = 50;
            let mut config = RunConfig::new(scenario.clone(), learner);
            config.replications = 3;
            config.iterations = 20;
            let traces = run_replications(&config, Some(1)).unwrap();
            assert!(traces.iter().all(|t| !t.failed()), "{} {kind}", scenario.name());
        }
    }
}

#[test]
fn matching_pennies_never_settles_on_an_equilibrium() {
    let config = RunConfig::new(ScenarioConfig::MatchingPennies, LearnerConfig::new(LearnerKind::EkfFp));
    let stats = convergence_stats(&run_replications(&config, None).unwrap()).unwrap();
    assert_eq!(stats.percent_converged, 0.0);
}
