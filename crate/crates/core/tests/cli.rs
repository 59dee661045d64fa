use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn dynexplore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynexplore"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// The door fixture with loss bounds attached, so it can be tuned.
fn bounded_door(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(scenarios().join("door_block.scn")).unwrap();
    let path = dir.join("door.scn");
    fs::write(&path, format!("{text}\n[bounds]\nlength = 9\ntime = 35\n")).unwrap();
    path
}

#[test]
fn run_writes_metrics_path_and_map() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenarios().join("static/two_rooms.scn");
    let o = dynexplore(&[
        "run",
        "--scenario",
        p(&scn),
        "--strategy",
        "cf",
        "--seed",
        "3",
        "--render",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("cf_seed3.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "complete");
    assert_eq!(summary["divergence"], 0.0);
    assert_eq!(summary["loss"], serde_json::Value::Null);
    assert_eq!(
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap(),
        summary
    );

    let csv = fs::read_to_string(dir.path().join("cf_seed3_path.csv")).unwrap();
    assert!(csv.starts_with("t,x,y\n0.000,"));
    for name in ["cf_seed3_map.pgm", "ground_truth.pgm", "cf_seed3_trace.pgm"] {
        assert!(
            fs::read(dir.path().join(name))
                .unwrap()
                .starts_with(b"P5\n"),
            "{name}"
        );
    }
}

#[test]
fn unfinished_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("door_block.scn")).unwrap();
    let scn = dir.path().join("short.scn");
    fs::write(&scn, text.replace("time_limit = 300", "time_limit = 5")).unwrap();
    let o = dynexplore(&["run", "--scenario", p(&scn), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["termination"], "time_limit");
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenarios().join("static/two_rooms.scn");
    let out = dir.path().join("o");
    let cases: Vec<Vec<&str>> = vec![
        vec!["batch", "--scenario", p(&scn), "--n", "0", "--out", p(&out)],
        vec![
            "batch",
            "--scenario",
            p(&scn),
            "--n",
            "-2",
            "--out",
            p(&out),
        ],
        vec![
            "tune",
            "--scenario",
            p(&scn),
            "--budget",
            "-1",
            "--out",
            p(&out),
        ],
        vec![
            "tune",
            "--scenario",
            p(&scn),
            "--budget",
            "0",
            "--out",
            p(&out),
        ],
        vec!["run", "--scenario", "/no/such/file.scn", "--out", p(&out)],
        vec![
            "run",
            "--scenario",
            p(&scn),
            "--strategy",
            "random",
            "--out",
            p(&out),
        ],
        vec!["run", "--bogus"],
        vec![],
    ];
    for args in cases {
        let o = dynexplore(&args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?} printed no error");
    }
    // a scenario without bounds cannot be tuned
    let o = dynexplore(&[
        "tune",
        "--scenario",
        p(&scn),
        "--budget",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bounds"));
    assert_eq!(code(&dynexplore(&["--help"])), 0);
}

#[test]
fn coefficients_come_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let scn = scenarios().join("static/pillars.scn");
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"{"alpha":1.0,"gamma":0.2,"zeta":-0.8,"eta":1.5,"theta":-0.2,"c1":5,"c2":7,"c3":60,"c4":60,"thresh":20}"#,
    )
    .unwrap();
    let o = dynexplore(&[
        "run",
        "--scenario",
        p(&scn),
        "--coeffs",
        p(&good),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0);

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"alpha":-1.0,"gamma":0.2,"zeta":-0.8,"eta":1.5,"theta":-0.2,"c1":5,"c2":7,"c3":60,"c4":60,"thresh":20}"#,
    )
    .unwrap();
    let o = dynexplore(&[
        "run",
        "--scenario",
        p(&scn),
        "--coeffs",
        p(&bad),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn batch_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scn = bounded_door(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = dynexplore(&["batch", "--scenario", p(&scn), "--n", "3", "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["summary.json", "losses.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let csv = fs::read_to_string(a.join("losses.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "strategy,seed,loss,duration_s,length_m,ineffective_ratio,divergence,termination"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("cbd,0,") && lines[4].starts_with("cf,0,"));
}

#[test]
fn single_evaluation_tune_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let scn = bounded_door(dir.path());
    let out = dir.path().join("t");
    let o = dynexplore(&[
        "tune",
        "--scenario",
        p(&scn),
        "--budget",
        "1",
        "--seeds-per-eval",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("tune_report.json")).unwrap()).unwrap();
    assert_eq!(report["trace"].as_array().unwrap().len(), 1);
    assert_eq!(report["best_coeffs"]["alpha"], 3.0);

    let trace = out.join("tune_trace.json");
    assert!(trace.exists());
    let again = dir.path().join("t2");
    let o = dynexplore(&[
        "tune",
        "--scenario",
        p(&scn),
        "--budget",
        "1",
        "--seeds-per-eval",
        "1",
        "--resume",
        p(&trace),
        "--out",
        p(&again),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(out.join("tune_report.json")).unwrap(),
        fs::read(again.join("tune_report.json")).unwrap()
    );
}

#[test]
fn calibrate_prints_a_bounds_section() {
    let scn = scenarios().join("static/two_rooms.scn");
    let o = dynexplore(&["calibrate", "--scenario", p(&scn), "--n", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("[bounds]\nlength = "));
    assert!(text.contains("\ntime = "));
}
