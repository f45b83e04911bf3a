//! `ekffp`: run fictitious-play experiments from TOML configuration files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use ekffp::config::{RunConfig, SweepConfig};
use ekffp::filters::{ekf_predict, ekf_update, softmax_jacobian, softmax_link, GaussianBelief, NoiseConfig, ZetaSchedule};
use ekffp::game::{enumerate_pure_nash, format_joint, verify_exact_potential, DEFAULT_ENUMERATION_CAP};
use ekffp::harness::output::{format_float, metrics_csv, summary_rows, sweep_csv, traces_csv};
use ekffp::harness::{convergence_stats, parameter_sweep, run_replications, timing_report, ReplicationTrace, SweepGrid};
use ekffp::learners::{LearnerConfig, LearnerKind};
use ekffp::rng::{stream, SCENARIO_STREAM};
use ekffp::scenarios::{ScenarioConfig, Stage, TrackingKind, TrackingSpec};
use ekffp::Error;

#[derive(Parser, Debug)]
#[command(name = "ekffp", version, about = "Fictitious play with extended Kalman filter beliefs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded replications of a scenario; writes traces.csv and metrics.csv.
    Run(Common),
    /// Sweep the filter noise parameters over tracking scenarios; writes sweep.csv.
    Sweep(Common),
    /// List the pure Nash equilibria of a scenario and check its potential.
    Nash(Common),
    /// Run built-in numerical self-checks, and validate a config if given.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run or sweep configuration file to validate.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug)]
struct Options {
    /// Output directory.
    #[arg(long, env = "EKFFP_OUT", default_value = "out")]
    out: PathBuf,
    /// Master seed, replacing the one in the config. For sweeps, the seed
    /// list becomes this many consecutive seeds starting here.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

/// Failure of a command: usage problems exit with 2, experiment failures with 1.
enum Failure {
    Usage(String),
    Experiment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Experiment(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(c) => with_pool(&c.opts).and_then(|_| cmd_run(&c.config, &c.opts)),
        Command::Sweep(c) => with_pool(&c.opts).and_then(|_| cmd_sweep(&c.config, &c.opts)),
        Command::Nash(c) => cmd_nash(&c.config, &c.opts),
        Command::Verify(v) => with_pool(&v.opts).and_then(|_| cmd_verify(v.config.as_deref(), &v.opts)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Experiment(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn with_pool(opts: &Options) -> CmdResult {
    if let Some(n) = opts.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Failure::Experiment(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Writes every file into `dir` through a temporary file and a rename, so a
/// reader never sees a partially written file.
fn write_outputs(dir: &Path, files: &[(&str, String)]) -> CmdResult {
    let io = |e: std::io::Error| Failure::Experiment(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| io(e.error))?;
    }
    Ok(())
}

fn load_run(path: &Path, opts: &Options) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn count(traces: &[ReplicationTrace], f: impl Fn(&ReplicationTrace) -> bool) -> usize {
    traces.iter().filter(|t| f(t)).count()
}

fn cmd_run(path: &Path, opts: &Options) -> CmdResult {
    let config = load_run(path, opts)?;
    let traces = run_replications(&config, opts.jobs.map(|n| n as usize))?;
    let stats = convergence_stats(&traces)?;
    let scenario = config.scenario.name();
    let learner = config.learner_label();
    let total = traces.len();

    // Timings vary between runs, so they are printed but kept out of the CSVs.
    let rows = summary_rows(scenario, &learner, &stats);
    let timing = timing_report(&traces).ok();
    write_outputs(
        &opts.out,
        &[("traces.csv", traces_csv(&traces)?), ("metrics.csv", metrics_csv(&rows)?)],
    )?;

    let mut table: Vec<(&str, String)> = vec![
        ("scenario", scenario.to_string()),
        ("learner", learner),
        ("converged", format!("{}/{total}", count(&traces, ReplicationTrace::converged))),
    ];
    if stats.percent_completed.is_some() {
        table.push(("completed", format!("{}/{total}", count(&traces, |t| t.completed() == Some(true)))));
    }
    table.push(("failed", stats.failures.to_string()));
    table.push(("mean final score", format_float(stats.mean_final_score)));
    let consensus: Vec<String> = stats.mean_iterations_to_consensus.iter().map(|m| format!("{m:.2}")).collect();
    table.push(("mean consensus iteration", consensus.join(" ")));
    if let Some(t) = &timing {
        table.push(("learner seconds per agent", format!("{:.6}", t.mean)));
    }
    table.push(("output", opts.out.display().to_string()));
    print_table(&table);

    let failed: Vec<&ReplicationTrace> = traces.iter().filter(|t| t.failed()).collect();
    if let Some(first) = failed.first() {
        return Err(Failure::Experiment(format!(
            "{} replication(s) failed; first: replication {}: {}",
            failed.len(),
            first.replication,
            first.failure.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

fn print_table(rows: &[(&str, String)]) {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0) + 1;
    for (k, v) in rows {
        println!("{:<width$} {v}", format!("{k}:"));
    }
}

fn tracking_specs(config: &SweepConfig) -> Vec<TrackingSpec> {
    config
        .tracking
        .iter()
        .map(|kind| match kind {
            TrackingKind::Sinusoid => TrackingSpec::sinusoid(),
            TrackingKind::Abrupt => TrackingSpec::abrupt(),
        })
        .map(|s| s.with_horizon(config.horizon))
        .collect()
}

fn cmd_sweep(path: &Path, opts: &Options) -> CmdResult {
    let mut config = SweepConfig::load(path)?;
    if let Some(seed) = opts.seed {
        config.seeds = (seed..).take(config.seeds.len()).collect();
    }
    let defaults = NoiseConfig::default();
    let base = NoiseConfig {
        psi: config.psi.unwrap_or(defaults.psi),
        tau: config.tau.unwrap_or(defaults.tau),
        ..defaults
    };
    base.validate()?;
    let grid = SweepGrid {
        xi: config.xi.clone(),
        zeta: config.zeta.clone(),
    };
    let result = parameter_sweep(&grid, &tracking_specs(&config), &config.seeds, base, config.learner)?;
    write_outputs(&opts.out, &[("sweep.csv", sweep_csv(&result)?)])?;

    let mut header = format!("{:>10}", "xi \\ zeta");
    for z in &grid.zeta {
        let _ = write!(header, " {:>10}", z.to_string());
    }
    println!("{header}");
    for (xi, row) in grid.xi.iter().zip(&result.mse) {
        let mut line = format!("{xi:>10}");
        for v in row {
            let _ = write!(line, " {v:>10.6}");
        }
        println!("{line}");
    }
    let (xi, zeta) = result.argmin_values();
    let (i, j) = result.argmin;
    println!("argmin: xi={xi} zeta={zeta} mse={}", format_float(result.mse[i][j]));
    Ok(())
}

fn describe_stage(stage: &Stage) -> Result<(String, String), Failure> {
    let game = stage.game();
    let equilibria = enumerate_pure_nash(game, DEFAULT_ENUMERATION_CAP).map_err(|e| match e {
        Error::JointSpaceTooLarge { .. } => Failure::Experiment(format!("refusing to enumerate: {e}")),
        other => other.into(),
    })?;
    let listed = if equilibria.is_empty() {
        "none".to_string()
    } else {
        equilibria.iter().map(|j| format_joint(game, j)).collect::<Vec<_>>().join(", ")
    };
    let zeros = vec![0; game.num_players()];
    let potential = if game.potential(&zeros).is_none() {
        "not declared".to_string()
    } else {
        let ok = verify_exact_potential(game, |j| game.potential(j).unwrap_or(f64::NAN), DEFAULT_ENUMERATION_CAP)?;
        if ok { "verified" } else { "not an exact potential" }.to_string()
    };
    Ok((listed, potential))
}

fn cmd_nash(path: &Path, opts: &Options) -> CmdResult {
    let config = load_run(path, opts)?;
    let instance = config.scenario.instantiate(&mut stream(config.seed, 0, SCENARIO_STREAM))?;
    let multi = instance.stages.len() > 1;
    for (k, stage) in instance.stages.iter().enumerate() {
        let (listed, potential) = describe_stage(stage)?;
        if multi {
            println!("stage {}: pure nash: {listed}; potential: {potential}", k + 1);
        } else {
            println!("pure nash: {listed}");
            println!("potential: {potential}");
        }
    }
    Ok(())
}

fn check_jacobian() -> bool {
    let mut rng = stream(0, 0, 0);
    let h = 1e-5;
    (0..200).all(|_| {
        let n = rng.random_range(2..=6);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let Ok(jac) = softmax_jacobian(&q, 1.0) else { return false };
        (0..n).all(|j| {
            let mut up = q.clone();
            let mut down = q.clone();
            up[j] += h;
            down[j] -= h;
            match (softmax_link(&up, 1.0), softmax_link(&down, 1.0)) {
                (Ok(u), Ok(d)) => (0..n).all(|i| ((u.probs()[i] - d.probs()[i]) / (2.0 * h) - jac.row(i)[j]).abs() <= 1e-6),
                _ => false,
            }
        })
    })
}

fn check_covariance() -> bool {
    let mut rng = stream(0, 1, 0);
    let noise = NoiseConfig {
        zeta: ZetaSchedule::InverseT,
        ..NoiseConfig::default()
    };
    (2..=6).all(|n| {
        let mut belief = GaussianBelief::standard(n);
        (1..=300).all(|t| {
            let predicted = ekf_predict(&belief, &noise, &mut rng);
            match ekf_update(&predicted, rng.random_range(0..n), t, &noise) {
                Ok(b) => {
                    belief = b;
                    belief.cov.is_symmetric_psd()
                }
                Err(_) => false,
            }
        })
    })
}

fn check_potentials() -> bool {
    [ScenarioConfig::Coordination2, ScenarioConfig::Symmetric3].iter().all(|s| {
        s.instantiate(&mut stream(0, 0, SCENARIO_STREAM))
            .ok()
            .and_then(|inst| describe_stage(&inst.stages[0]).ok())
            .is_some_and(|(_, p)| p == "verified")
    })
}

fn check_determinism() -> bool {
    let mut config = RunConfig::new(ScenarioConfig::Symmetric3, LearnerConfig::new(LearnerKind::EkfFp));
    config.replications = 10;
    let csv = || run_replications(&config, None).ok().and_then(|t| traces_csv(&t).ok());
    matches!((csv(), csv()), (Some(a), Some(b)) if a == b)
}

fn cmd_verify(path: Option<&Path>, opts: &Options) -> CmdResult {
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let kind = if text.lines().any(|l| l.trim_start().starts_with("[scenario]")) {
            let mut config = RunConfig::from_toml(&text)?;
            if let Some(seed) = opts.seed {
                config.seed = seed;
            }
            config.scenario.instantiate(&mut stream(config.seed, 0, SCENARIO_STREAM))?;
            "run"
        } else {
            SweepConfig::from_toml(&text)?;
            "sweep"
        };
        println!("config: ok ({kind})");
    }
    let checks: [(&str, fn() -> bool); 4] = [
        ("softmax jacobian", check_jacobian),
        ("covariance stays symmetric psd", check_covariance),
        ("symmetric game potentials", check_potentials),
        ("deterministic replications", check_determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        let ok = check();
        println!("{name}: {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Experiment(format!("failed checks: {}", failed.join(", "))))
    }
}
