use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kyle_eq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kyle-eq")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn few_round_trippers_leave_it_pure() {
    let out = kyle_eq(&["solve", "--j2", "1", "--theta-1plus", "1", "--theta-eps", "0", "--theta-2", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["regime"], "pure");
    assert_eq!(v["profile"]["theta_z"], 0.0);
}

#[test]
fn two_back_runners_limit() {
    let out = kyle_eq(&["limit", "--small-it", "--j", "2", "--theta-eps", "0", "--theta-2", "1", "--regime", "mixed"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!((v["a1"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!((v["theta_z"].as_f64().unwrap() - 0.14).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(kyle_eq(&["simulate"]).status.code(), Some(2));
    assert_eq!(kyle_eq(&["solve", "--theta-7", "1"]).status.code(), Some(2));
    assert_eq!(kyle_eq(&["solve", "--theta-2", "-1"]).status.code(), Some(2));
    assert_eq!(kyle_eq(&["solve", "--j1", "1", "--gamma", "0.5"]).status.code(), Some(2));
}

#[test]
fn missing_equilibrium_exits_3_with_diagnostics() {
    let out = kyle_eq(&["solve", "--j1", "1", "--j2", "9", "--theta-1plus", "0.001"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["regime"], "none");
    assert!(v["diagnostics"]["starts_tried"].as_u64().unwrap() > 0);
}

#[test]
fn unwritable_output_exits_4() {
    let out = kyle_eq(&["solve", "--j1", "1", "--out", "/nonexistent/dir/sol.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_is_ordered_and_reproducible() {
    let args = ["sweep", "--j1", "1", "--axis1", "theta_eps:0:1:3", "--axis2", "theta_1plus:0.5:1:3:log"];
    let one = Command::new(env!("CARGO_BIN_EXE_kyle-eq")).args(args).env("KYLE_EQ_THREADS", "1").output().unwrap();
    let two = Command::new(env!("CARGO_BIN_EXE_kyle-eq")).args(args).env("KYLE_EQ_THREADS", "3").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("theta_1plus,theta_2,theta_eps,j1,j2,gamma,a1,theta_z,"));
    assert!(header.ends_with("regime,it_profit,hft_profit_small,hft_profit_rt,residual_norm,multiplicity_flag"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_kyle-eq"))
        .args(["sweep", "--j1", "1"])
        .env("KYLE_EQ_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rows_without_equilibrium_are_blank() {
    let out = kyle_eq(&["sweep", "--j1", "1", "--j2", "9", "--axis1", "theta_1plus:0.001:1:2:log", "--cold"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[19], "none");
    assert!(row[6..19].iter().chain(&row[20..]).all(|c| c.is_empty()), "{row:?}");
    assert!(text.lines().nth(2).unwrap().contains(",mixed,") || text.lines().nth(2).unwrap().contains(",pure,"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[population]\nj1 = 2\n[fixed]\ntheta_1plus = 0.5\n[axis1]\nparam = \"theta_eps\"\nfrom = 0.0\nto = 1.0\npoints = 2\nscale = \"sqrt\"\n[output]\noutputs = [\"regime\"]\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = kyle_eq(&["sweep", "--config", path(&cfg), "--theta-1plus", "2", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta_1plus,theta_2,theta_eps,j1,j2,gamma,regime,residual_norm,multiplicity_flag");
    assert!(lines[1].starts_with("2,1,0,2,0,,"));
    assert!(lines[2].starts_with("2,1,1,2,0,,"));
}

#[test]
fn verify_accepts_a_solution_and_rejects_a_tampered_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let out = kyle_eq(&["solve", "--j1", "1", "--j2", "1", "--theta-eps", "0.5", "--out", path(&good)]);
    assert_eq!(out.status.code(), Some(0));
    let out = kyle_eq(&["verify", "--input", path(&good), "--n", "10000000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_of(&out)["n"], 10_000_000);

    let mut sol: Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    sol["profile"]["a1"] = Value::from(sol["profile"]["a1"].as_f64().unwrap() * 1.05);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, sol.to_string()).unwrap();
    let out = kyle_eq(&["verify", "--input", path(&bad), "--n", "100000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corpus_solutions_verify() {
    let corpus: Vec<Value> = serde_json::from_str(include_str!("../../kyle-hft/tests/data/corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (i, sol) in corpus.iter().enumerate().step_by(7) {
        let file = dir.path().join(format!("{i}.json"));
        std::fs::write(&file, sol.to_string()).unwrap();
        let out = kyle_eq(&["verify", "--input", path(&file), "--n", "1000000", "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "corpus entry {i}");
    }
}

#[test]
fn threshold_json() {
    let out = kyle_eq(&["thresholds", "gamma-bar", "--theta-1plus", "1"]);
    let v = json_of(&out);
    assert_eq!(v["kind"], "gamma_bar");
    assert!((v["value"].as_f64().unwrap() - 0.24089).abs() < 1e-4);
    assert_eq!(kyle_eq(&["thresholds", "profit"]).status.code(), Some(2));
}

#[test]
fn theta_bar_figure_lists_each_population() {
    let out = kyle_eq(&["figure", "fig11"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "j,theta_bar_1plus");
    assert_eq!(lines.len(), 11);
    for (j, l) in (1..=10).zip(&lines[1..]) {
        let (jj, v) = l.split_once(',').unwrap();
        assert_eq!(jj, j.to_string());
        let v: f64 = v.parse().unwrap();
        assert_eq!(v < 1.0, j <= 3, "J = {j}: {v}");
    }
}

#[test]
fn plot_handles_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "theta_eps,theta_z\r\n").unwrap();
    let svg = dir.path().join("empty.svg");
    let out = kyle_eq(&["plot", "--input", path(&csv), "--x", "theta_eps", "--y", "theta_z", "--out", path(&svg)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<svg") && !text.contains("<path"));
    let out = kyle_eq(&["plot", "--input", path(&csv), "--x", "theta_eps", "--y", "a1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_it_figure_has_two_series_per_panel() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1.csv");
    let svg = dir.path().join("fig1.svg");
    let out = kyle_eq(&["figure", "fig1", "--out", path(&csv), "--svg", path(&svg)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<path").count(), 2);
    assert!(text.contains("\u{221a}theta_eps"));
    let again = kyle_eq(&["plot", "--input", path(&csv), "--x", "theta_eps", "--sqrt-x", "--y", "theta_z", "--group", "series", "--where", "panel_theta_1plus=0.1"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(String::from_utf8(again.stdout).unwrap().matches("<path").count(), 2);
}
