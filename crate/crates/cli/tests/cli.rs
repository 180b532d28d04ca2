use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use covert_dht::config::{ExperimentConfig, SchemeSpec};
use covert_dht::output::{read_csv, SimulateRow, SIMULATE_COLUMNS, SIMULATE_SCHEMA};
use covert_dht_core::KRule;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covert-dht"))
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn partial_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::example();
    c.channel.y_given_x = vec![vec![0.6, 0.4], vec![1.0, 0.0]];
    c.scheme = SchemeSpec::A { x_hat: "1".into(), y_star: "1".into(), k_rule: KRule::Sqrt };
    c
}

#[test]
fn check_channel_reports_connectivity_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.json", &ExperimentConfig::example());
    let o = run(&["check-channel", "--config", ok.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fully connected"));
    assert!(stdout(&o).contains("conditions OK"));

    let partial = write_config(dir.path(), "partial.json", &partial_config());
    let o = run(&["check-channel", "--config", partial.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("partially connected (x_hat = 1, y_star = 1)"));

    let mut same = ExperimentConfig::example();
    same.channel.z_given_x = vec![vec![0.6, 0.4], vec![0.6, 0.4]];
    let bad = write_config(dir.path(), "bad.json", &same);
    let o = run(&["check-channel", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    // simulation refuses the same channel
    let o = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(run(&["exponents", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["exponents", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn exponents_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex.json", &ExperimentConfig::example());
    let o = run(&["exponents", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in ["0.7706", "0.1170", "0.1360", "0.2095", "strict improvement"] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }

    let o = run(&["exponents", "--config", cfg.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["base"], "bits");
    assert!((v["e1"].as_f64().unwrap() - 0.7706).abs() < 1e-3);

    // testing against independence: T_U = P_U
    let mut ind = ExperimentConfig::example();
    ind.sources.v = vec!["0".into(), "1".into()];
    ind.sources.p_uv = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
    ind.sources.q_uv = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
    let path = write_config(dir.path(), "ind.json", &ind);
    let o = run(&["exponents", "--config", path.to_str().unwrap()]);
    assert!(stdout(&o).contains("no improvement over local test"), "{}", stdout(&o));
}

#[test]
fn simulate_is_deterministic_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::example();
    cfg.sweep.n_grid = vec![20, 40];
    cfg.sweep.trials = 2000;
    let path = write_config(dir.path(), "sim.json", &cfg);
    let args = ["simulate", "--config", path.to_str().unwrap(), "--seed", "11"];
    let a = run(&args);
    let b = bin().args(args).env("RAYON_NUM_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let rows: Vec<SimulateRow> = read_csv(&a.stdout[..], SIMULATE_SCHEMA, SIMULATE_COLUMNS).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.method == "exact").count(), 2);
    assert!(rows.iter().filter(|r| r.method == "mc").all(|r| r.seed == Some(11)));

    // exact-only when no trials are requested, written to --out
    let out = dir.path().join("out.csv");
    let o = run(&["simulate", "--config", path.to_str().unwrap(), "--trials", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<SimulateRow> =
        read_csv(std::fs::File::open(&out).map(std::io::BufReader::new).unwrap(), SIMULATE_SCHEMA, SIMULATE_COLUMNS)
            .unwrap();
    assert!(rows.iter().all(|r| r.method == "exact"));

    let o = run(&["simulate", "--config", path.to_str().unwrap(), "--trials", "0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_covertness_reports_decay() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "ex.json", &ExperimentConfig::example());
    let o = run(&["verify-covertness", "--config", path.to_str().unwrap(), "--n", "20,60,100,140,200"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("bound_violations=0"));
    let slope: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# log2_d_n_slope="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope < -0.01);

    let path = write_config(dir.path(), "a.json", &partial_config());
    let o = run(&["verify-covertness", "--config", path.to_str().unwrap(), "--n", "100,1000,10000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn example_command_reports_pass_lines() {
    let o = run(&["example"]);
    let text = stdout(&o);
    assert!(text.contains("0.8836"));
    assert!(text.contains("0.2095"));
    assert!(text.matches("[PASS]").count() >= 4, "{text}");
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [ExperimentConfig::example(), partial_config()] {
        let path = write_config(dir.path(), "c.json", &cfg);
        let back = ExperimentConfig::load(&path).unwrap();
        assert_eq!(back, cfg);
    }
}
