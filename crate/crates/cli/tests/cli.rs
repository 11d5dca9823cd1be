use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn excursion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excursion")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn theory_reports_the_level_schedule() {
    let v = json(&excursion(&["theory", "--d", "2", "--k", "0", "--n", "10", "--nu", "0"]));
    assert!((v["u"].as_f64().unwrap() - 2.829_164_584_557_876).abs() < 1e-12);
    assert_eq!(v["manifest"]["tool"], "excursion");
    assert_eq!(v["manifest"]["command"], "theory");
    assert_eq!(v["manifest"]["config_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn matrix_eigenvalues_and_kind_spelling() {
    for kind in ["Wm", "wm", "WM"] {
        let v = json(&excursion(&["matrix", "--kind", kind, "--m", "3", "--rho", "0.5", "--op", "eig"]));
        let mut vals: Vec<f64> =
            v["result"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        vals.sort_by(f64::total_cmp);
        for (got, want) in vals.iter().zip([0.5, 0.5, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{vals:?}");
        }
    }
    let det = json(&excursion(&["matrix", "--kind", "Wm", "--m", "3", "--rho", "0.5", "--op", "det"]));
    assert!((det["result"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn matrix_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"kind":"Wm1m2","m1":1,"m2":3,"rho":0.4,"mu":0.3}"#).unwrap();
    let v = json(&excursion(&["matrix", "--spec-file", arg(&spec), "--op", "pd"]));
    assert_eq!(v["result"]["pd"], true);
    assert_eq!(v["result"]["rule"], "two_block_definite");
}

#[test]
fn validation_errors_name_the_key() {
    let out = excursion(&["matrix", "--kind", "Wm", "--m", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho"));
    let out = excursion(&["theory", "--d", "2", "--k", "0", "--rho1", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho1"));
    let out = excursion(&["sample", "--model", "matern", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}

#[test]
fn tailbound_brackets_monte_carlo() {
    let v = json(&excursion(&[
        "tailbound",
        "--matrix",
        "[[1,0.5],[0.5,1]]",
        "--u",
        "3,3",
        "--samples",
        "200000",
        "--seed",
        "1",
    ]));
    let lo = v["bracket"]["lower"].as_f64().unwrap();
    let hi = v["bracket"]["upper"].as_f64().unwrap();
    let mc = v["monte_carlo"]["estimate"].as_f64().unwrap();
    let se = v["monte_carlo"]["std_error"].as_f64().unwrap();
    assert!(lo - 4.0 * se <= mc && mc <= hi + 4.0 * se, "{lo} {mc} {hi}");
}

#[test]
fn sample_and_betti() {
    let dir = tempfile::tempdir().unwrap();
    let out = excursion(&["--out", arg(dir.path()), "sample", "--d", "2", "--n", "2", "--seed", "9"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 7);
    assert!(dir.path().join("manifest.json").exists());
    let v = json(&excursion(&["betti", "--d", "2", "--n", "3", "--seed", "9", "--u", "10"]));
    assert_eq!(v["betti"], serde_json::json!([0, 0]));
}

#[test]
fn counts_hold_the_sandwich() {
    let v = json(&excursion(&["counts", "--d", "2", "--model", "geometric", "--n", "4", "--seed", "3", "--u", "1.5"]));
    assert_eq!(v["all_hold"], true);
    assert_eq!(v["ledgers"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_writes_reports_and_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = excursion(&[
        "--out",
        arg(dir.path()),
        "--workers",
        "2",
        "verify",
        "--suite",
        "sandwich",
        "--d",
        "2",
        "--model",
        "geometric",
        "--n",
        "3",
        "--u",
        "1.5",
        "--R",
        "10",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("sandwich/u1.5/rows.csv").exists());
    let verdicts: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(verdicts["passed"], true);

    // a search cap of zero leaves replicates unevaluated, which fails the verdict
    let out = excursion(&[
        "verify",
        "--suite",
        "sandwich",
        "--d",
        "2",
        "--model",
        "geometric",
        "--n",
        "3",
        "--u",
        "1",
        "--R",
        "5",
        "--seed",
        "4",
        "--weight-cap",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

fn sweep_rows(workers: &str) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = excursion(&[
        "--out",
        arg(dir.path()),
        "--workers",
        workers,
        "sweep",
        "--d",
        "2",
        "--model",
        "geometric",
        "--k",
        "0,1",
        "--n",
        "3,5",
        "--schedules",
        "plus:0.25",
        "--R",
        "30",
        "--seed",
        "12",
        "--approximators",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (
        fs::read_to_string(dir.path().join("run-0/rows.csv")).unwrap(),
        fs::read_to_string(dir.path().join("sweep.csv")).unwrap(),
    )
}

#[test]
fn rows_do_not_depend_on_workers() {
    let (rows1, sweep1) = sweep_rows("1");
    let (rows8, sweep8) = sweep_rows("8");
    assert_eq!(rows1, rows8);
    assert_eq!(sweep1, sweep8);
    assert_eq!(rows1.lines().count(), 1 + 2 * 2 * 30);
}

#[test]
fn report_recomputes_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"version":1,"model":{"kind":"iid","d":2},"ks":[0],"ns":[4],
            "level":{"mode":"schedule","schedule":{"kind":"plus_log","c":0.5}},
            "replicates":40,"seed":3,"approximators":false,"override_assumptions":true,"bootstrap_resamples":100}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = excursion(&["--out", arg(&out_dir), "sweep", "--config", arg(&config)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = out_dir.join("run-0");
    let before = fs::read_to_string(run.join("summary.json")).unwrap();
    fs::remove_file(run.join("summary.json")).unwrap();
    let v = json(&excursion(&["report", "--dir", arg(&run)]));
    assert_eq!(v["summaries"].as_array().unwrap().len(), 1);
    assert_eq!(fs::read_to_string(run.join("summary.json")).unwrap(), before);
}

#[test]
fn catalog_honours_the_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_excursion"))
        .args(["catalog", "--d", "2", "--k", "0"])
        .env("EXCURSION_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["catalogs"][1]["patterns"], 20);
    assert!(fs::read_dir(dir.path()).unwrap().count() > 0);
}
