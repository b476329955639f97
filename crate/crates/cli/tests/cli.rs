use std::path::PathBuf;
use std::process::{Command, Output};

fn pi3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pi3"))
        .args(args)
        .env_remove("PI3_SEED")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn bound_reference_points() {
    let o = pi3(&["bound", "--m", "10", "--k", "1", "--lambda", "6.37", "--w", "2"]);
    assert!(o.status.success());
    let p = json(&o)["p_k_lambda"].as_f64().unwrap();
    assert!((p - 0.003745).abs() < 1e-6, "{p}");

    let p = json(&pi3(&["bound", "--m", "2", "--lambda", "6.37"]))["p_k_lambda"].as_f64().unwrap();
    assert!((p - 0.488522).abs() < 1e-6, "{p}");

    let p = json(&pi3(&["bound", "--lambda", "0.000001"]))["p_k_lambda"].as_f64().unwrap();
    assert!(p < 1e-9);
}

#[test]
fn bad_flags_exit_nonzero() {
    assert_eq!(pi3(&["bound", "--m", "0", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(pi3(&["bound", "--lambda", "1", "--q", "1.5"]).status.code(), Some(2));
    assert!(!pi3(&["run", "/nonexistent.toml"]).status.success());
}

#[test]
fn overhead_for_ten_leaders() {
    let v = json(&pi3(&["overhead", "--leaders", "10"]));
    assert_eq!(v["total_bits"], 7240);
    assert_eq!(v["per_leader_bits"], 724);
}

#[test]
fn casestudy_fixture_summary() {
    let o = pi3(&["casestudy"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["records"], 10000);
    assert!((v["p99_97_eth"].as_f64().unwrap() - 6.37).abs() < 0.01);
    assert!((v["max_eth"].as_f64().unwrap() - 109.0).abs() < 0.5);
}

#[test]
fn casestudy_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "12.5\nnot-a-number\n").unwrap();
    let o = pi3(&["casestudy", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:2"));
}

#[test]
fn grid_csv_shape() {
    let o = pi3(&["grid", "--lambda", "6.37,109", "--k", "1,2", "--m-max", "40"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,k,lambda_eth,w_eth,p_bound,p_empirical,ci95"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 40);
    for r in &rows {
        let p: f64 = r[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    let at = |m: &str, k: &str, l: &str| -> f64 {
        rows.iter().find(|r| r[0] == m && r[1] == k && r[2] == l).unwrap()[4].parse().unwrap()
    };
    assert!((at("10", "1", "6.37") - 0.003745).abs() < 1e-6);
    assert!((at("33", "1", "109") - 0.50705).abs() < 1e-4);
}

#[test]
fn montecarlo_stays_under_bound() {
    let o = pi3(&["montecarlo", "--m", "5", "--k", "1", "--lambda", "6", "--trials", "3000", "--seed", "4"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["estimate"]["trials"], 3000);
    assert_eq!(v["within_bound"], true);
}

#[test]
fn run_honest_report_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("events.ndjson");
    let dl = dir.path().join("deliveries.ndjson");
    let o = pi3(&[
        "run",
        &config("honest.toml"),
        "--events",
        ev.to_str().unwrap(),
        "--deliveries",
        dl.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["rewards"]["burned"], "0");
    assert_eq!(v["adversary"]["revenue"], "0");
    for line in std::fs::read_to_string(&ev).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert!(std::fs::read_to_string(&dl).unwrap().lines().count() > 0);
}

#[test]
fn run_is_deterministic_and_seed_overridable() {
    let a = pi3(&["run", &config("honest.toml")]);
    let b = pi3(&["run", &config("honest.toml")]);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_pi3"))
        .args(["run", &config("honest.toml")])
        .env("PI3_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&c)["master_seed"], 77);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn run_replicas_summary() {
    let o = pi3(&["run", &config("biased.toml"), "--replicas", "4"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["replicas"], 4);
    assert_eq!(v["all_passed"], true);
}

#[test]
fn invalid_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("honest.toml"))
        .unwrap()
        .replace("power = [0.25, 0.25, 0.25, 0.25]", "power = [0.5, 0.5, 0.5, 0.5]");
    std::fs::write(&p, text).unwrap();
    let o = pi3(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(config("biased.toml")).unwrap()
        + "\n[assertions]\nfairness_min_honest = 0.99\nfairness_window = 20\n";
    std::fs::write(&p, text).unwrap();
    let o = pi3(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fairness"));
}
