use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rotwave_cli::trajectory_csv::read_rows;
use serde_json::Value;

fn rotwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn simulate_case1_emits_sphere_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotwave(&[
        "simulate",
        "--scenario",
        "case1",
        "--lambda",
        "0.01",
        "--horizon",
        "5",
        "--samples-per-period",
        "100",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("case1_lambda_0.01.csv");
    let rows = read_rows(fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 501);
    for r in &rows {
        assert!((r.tip_norm() - 3.0).abs() < 1e-9 * 3.0, "{r:?}");
        assert!(r.orthogonality_defect() < 1e-8, "{r:?}");
    }
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,a11,a12,a13,a21,a22,a23,a31,a32,a33,tipx,tipy,tipz\n"));
}

#[test]
fn simulate_writes_one_file_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotwave(&[
        "simulate",
        "--scenario",
        "case2",
        "--lambda-grid",
        "0.05,0.1",
        "--horizon",
        "1",
        "--samples-per-period",
        "10",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["case2_lambda_0.05.csv", "case2_lambda_0.1.csv"]);
}

#[test]
fn bad_scenario_exits_2_listing_names() {
    let o = rotwave(&["simulate", "--scenario", "case7"]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    for name in rotwave::scenarios::SCENARIO_NAMES {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["frequency", "--lambda-grid", "0.1,0.05"][..],
        &["frequency", "--lambda", "-0.1"],
        &["frequency", "--horizon", "0.5"],
        &["frequency", "--rtol", "abc"],
        &["frequency", "--no-such-flag"],
        &["frequency", "--lambda", "0.1", "--lambda-grid", "0.1"],
        &["frequency", "--mu", "0,0.3"],
        &["frequency", "--config", "/nonexistent/rotwave.json"],
        &["bch", "1", "2", "3"],
        &["bch", "1", "2", "3", "4", "5", "x"],
    ] {
        let o = rotwave(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

fn frequency_report(scenario: &str, lambdas: &str) -> Vec<Value> {
    let dir = tempfile::tempdir().unwrap();
    let o = rotwave(&[
        "frequency",
        "--scenario",
        scenario,
        "--lambda-grid",
        lambdas,
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = fs::read_to_string(dir.path().join(format!("{scenario}_frequency.json"))).unwrap();
    assert_eq!(file.as_bytes(), o.stdout.as_slice());
    serde_json::from_str::<Value>(&file)
        .unwrap()
        .as_array()
        .unwrap()
        .clone()
}

#[test]
fn frequency_report_keys_and_classes() {
    let case2 = frequency_report("case2", "0.05");
    let e = &case2[0];
    let keys: Vec<&str> = e.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expect = [
        "lambda",
        "X",
        "Xf",
        "norm_X",
        "norm_Xf",
        "resonance",
        "ortho_defect",
        "motion",
        "circle_fit",
    ];
    expect.sort();
    let mut got = keys.clone();
    got.sort();
    assert_eq!(got, expect);
    assert_eq!(e["motion"], "OrthogonalDrift");
    assert!(e["ortho_defect"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(e["resonance"]["kind"], "Resonant");
    assert_eq!(e["resonance"]["k"], 1);
    assert!(e["circle_fit"]["rms"].as_f64().unwrap() < 3e-6);

    let case3 = frequency_report("case3", "0.05");
    assert_eq!(case3[0]["motion"], "SlowMeanderAboutX0");
}

#[test]
fn frequency_case1_rigid_rotation_at_zero() {
    let r = frequency_report("case1", "0");
    let e = &r[0];
    assert_eq!(e["motion"], "RigidRotation");
    assert_eq!(e["resonance"]["kind"], "NonResonant");
    assert!(e["resonance"]["k"].is_null());
    let x: Vec<f64> = e["X"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let xf: Vec<f64> = e["Xf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let x0 = [0.0, 0.0, 2.0];
    for i in 0..3 {
        assert!((x[i] - x0[i]).abs() < 1e-9, "{x:?}");
        assert!((xf[i] - x0[i]).abs() < 1e-9, "{xf:?}");
    }
}

#[test]
fn drift_example4() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotwave(&[
        "drift",
        "--scenario",
        "example4",
        "--lambda-grid",
        "0,0.01",
        "--mu",
        "0,0.3",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["mu_star"].as_f64(), Some(0.0));
    assert!((v[1]["mu_star"].as_f64().unwrap() - 0.1).abs() < 1e-6);
    assert!(dir.path().join("example4_drift.json").exists());
}

#[test]
fn drift_without_sign_change_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotwave(&[
        "drift",
        "--scenario",
        "example4",
        "--lambda",
        "0.01",
        "--mu",
        "0.2,0.3",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("no sign change"));
}

#[allow(clippy::approx_constant)]
#[test]
fn bch_quarter_turns() {
    let o = rotwave(&[
        "bch",
        "0",
        "0",
        "1.5707963",
        "1.5707963",
        "0",
        "0",
        "--check",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let angle: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("angle = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((angle - 2.0943951).abs() < 1e-6);
    assert!(text.contains("\ncheck = "));

    let o = rotwave(&["bch", "-0.3,1,2", "0.3,-1,-2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("branch = IdentityProduct"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(
        &path,
        r#"{"scenario": "case3", "lambda_grid": [0.05], "horizon": 2}"#,
    )
    .unwrap();
    let o = rotwave(&[
        "frequency",
        "--config",
        path.to_str().unwrap(),
        "--lambda",
        "0.1",
        "--dump-config",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scenario"], "case3");
    assert_eq!(v["lambda_grid"][0].as_f64(), Some(0.1));
    assert_eq!(v["horizon"].as_f64(), Some(2.0));
    assert_eq!(v["integrator"]["rtol"].as_f64(), Some(1e-10));
    assert!(!Path::new("out").join("case3_frequency.json").exists());
}

#[test]
fn verify_passes_for_example4() {
    let o = rotwave(&[
        "verify",
        "--scenario",
        "example4",
        "--lambda",
        "0.01",
        "--mu",
        "0.1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["closed_form"][0]["max_deviation"].as_f64().unwrap() < 1e-7);
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = rotwave(&["simulate", "--horizon", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for cmd in ["simulate", "frequency"] {
            let o = rotwave(&[
                cmd,
                "--scenario",
                "case3",
                "--lambda-grid",
                "0.05",
                "--out",
                &out_arg(dir.path()),
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
        }
    }
    for name in ["case3_lambda_0.05.csv", "case3_frequency.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
