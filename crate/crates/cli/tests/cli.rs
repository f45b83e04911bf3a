use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ekffp"));
    c.env_remove("EKFFP_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> PathBuf {
    configs().join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn help_lists_every_flag() {
    for sub in ["run", "sweep", "nash", "verify"] {
        let o = bin().args([sub, "--help"]).output().unwrap();
        assert!(o.status.success());
        let text = stdout(&o);
        for flag in ["--config", "--out", "--seed", "--jobs", "EKFFP_OUT"] {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
}

#[test]
fn unknown_flags_and_zero_jobs_are_usage_errors() {
    let o = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["run", "--jobs", "0", "--config"]).arg(cfg("coordination2_ekf.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_prints_summary_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["run", "--config", cfg("coordination2_ekf.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("converged:                 100/100"), "{}", stdout(&o));
    let traces = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    assert!(traces.starts_with("replication,stage,iteration,agent,action,reward\n"));
    // 100 replications x 50 rounds x 2 agents, plus the header.
    assert_eq!(traces.lines().count(), 10_001);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.contains("percent_converged,coordination2,ekf_fp,100\n"));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = cfg("symmetric3_pf_miscoordinated.toml");
    for dir in [&a, &b] {
        let o = run_in(dir.path(), &["run", "--seed", "7", "--jobs", "2", "--config", config.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for file in ["traces.csv", "metrics.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = bin()
        .env("EKFFP_OUT", &out)
        .args(["run", "--config"])
        .arg(cfg("matching_pennies.toml"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("traces.csv").exists());
}

#[test]
fn missing_config_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = run_in(&out, &["run", "--config", "/no/such/file.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn bad_config_contents_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("kind.toml", "schema_version = 1\n[scenario]\nkind = \"coordination2\"\n[learner]\nkind = \"kalman\"\n"),
        ("typo.toml", "schema_version = 1\n[scenario]\nkind = \"coordination2\"\n[learner]\nkind = \"ekf_fp\"\nxi_tidle = 0.1\n"),
        ("empty_grid.toml", "schema_version = 1\nxi = []\nzeta = [0.1]\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let sub = if name == "empty_grid.toml" { "sweep" } else { "run" };
        let o = run_in(&dir.path().join("out"), &[sub, "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        if name == "typo.toml" {
            assert!(err.contains("xi_tidle"), "{err}");
        }
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn nash_lists_equilibria() {
    let o = bin().args(["nash", "--config"]).arg(cfg("coordination2_ekf.toml")).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o), "pure nash: (U,L), (D,R)\npotential: verified\n");

    let o = bin().args(["nash", "--config"]).arg(cfg("matching_pennies.toml")).output().unwrap();
    assert!(stdout(&o).starts_with("pure nash: none\n"));

    let o = bin().args(["nash", "--config"]).arg(cfg("warehouse_micro.toml")).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("potential: verified"));
}

#[test]
fn nash_refuses_huge_games() {
    let o = bin().args(["nash", "--config"]).arg(cfg("warehouse_ekf.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
}

#[test]
fn one_cell_sweep_reports_that_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.toml");
    std::fs::write(&path, "schema_version = 1\nxi = [0.1]\nzeta = [\"1/t\"]\nseeds = [0]\nhorizon = 200\n").unwrap();
    let o = run_in(&dir.path().join("out"), &["sweep", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("argmin: xi=0.1 zeta=1/t"));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0.1,1/t,"));
}

#[test]
fn verify_checks_config_and_numerics() {
    let o = bin().args(["verify", "--config"]).arg(cfg("sweep.toml")).output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("config: ok (sweep)\n"));
    assert!(!text.contains("FAILED"));
}
