use std::path::Path;
use std::process::{Command, Output};

use conegate::hamiltonians::FieldParams;
use conegate::propagation::adiabatic_error;

fn conegate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conegate"))
        .args(args)
        .env_remove("CONEGATE_STEPS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key} = ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const LOOP_SCHEDULE: &str = r#"{
  "frame": "single",
  "omega0": 1.0,
  "initial": { "kind": "loop_eigenstate", "branch": "upper" },
  "steps": [
    { "op": "loop", "loop": { "omega0": 1.0, "omega1": 0.5, "gamma": GAMMA, "revolutions": 1.0, "compensated": COMP } }
  ]
}"#;

#[test]
fn scurve_reference_row_and_determinism() {
    let args = ["scurve", "--delta-over-j", "1.058", "--omega1-range", "0.5:2:0.5"];
    let a = conegate(&args);
    let b = conegate(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.lines().any(|l| l == "omega1_over_J,delta_over_J,J_tc,phi_prime_rad"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1], vec![1.0, 1.058, 5.30275060261e-1, 5.88210153884e-1]);
}

#[test]
fn scurve_grid_mode() {
    let o = conegate(&["scurve", "--delta-range", "0.5:1.5:0.5", "--omega1-range", "1:3:1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][1], 0.5);
    assert_eq!(rows[8][1], 1.5);
}

#[test]
fn json_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = conegate(&[
        "scurve",
        "--delta-over-j",
        "1.058",
        "--omega1-range",
        "1:2:1",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["columns"]["omega1_over_J"], serde_json::json!([1.0, 2.0]));
    assert_eq!(v["config"]["command"], "scurve");
}

#[test]
fn configuration_errors_exit_2() {
    let empty = conegate(&["scurve", "--delta-over-j", "1", "--omega1-range", "2:1:0.1"]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(stderr(&empty).contains("empty range"));
    assert_eq!(conegate(&["scurve", "--delta-over-j", "1"]).status.code(), Some(2));
    assert_eq!(conegate(&["gate", "toffoli"]).status.code(), Some(2));
    assert_eq!(conegate(&["gate", "phase"]).status.code(), Some(2));
    assert_eq!(conegate(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(conegate(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_schedule_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{\n  \"frame\": \"single\",\n  \"steps\": [ oops ]\n}\n");
    let o = conegate(&["evolve", "--schedule", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn empty_schedule_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.json", r#"{"frame": "single", "omega0": 1.0, "steps": []}"#);
    let o = conegate(&["evolve", "--schedule", &path]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(data_rows(&text).is_empty());
    assert!(text.lines().any(|l| l.starts_with("t,re_0,im_0,re_1,im_1,bloch_x")));
}

#[test]
fn compensated_loop_returns_without_warning() {
    let dir = tempfile::tempdir().unwrap();
    let body = LOOP_SCHEDULE.replace("GAMMA", "-1.25").replace("COMP", "true");
    let path = write(dir.path(), "loop.json", &body);
    let o = conegate(&["evolve", "--schedule", &path]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stderr(&o).contains("warning"));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 10_001);
    let (first, last) = (&rows[0], rows.last().unwrap());
    for k in 5..8 {
        assert!((first[k] - last[k]).abs() < 1e-8, "bloch component {k}");
    }
    assert!(last[8].abs() < 1e-7);
    let infid: f64 = header_value(&text, "return_infidelity").unwrap().parse().unwrap();
    assert!(infid < 1e-10);
}

#[test]
fn uncompensated_loop_warns_and_matches_adiabatic_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = LOOP_SCHEDULE.replace("GAMMA", "0.5").replace("COMP", "false");
    let path = write(dir.path(), "fast.json", &body);
    let o = conegate(&["evolve", "--schedule", &path, "--steps", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: non-cyclic"));
    let text = stdout(&o);
    let infid: f64 = header_value(&text, "return_infidelity").unwrap().parse().unwrap();
    let want = adiabatic_error(&FieldParams::new(1.0, 0.5, 0.5).unwrap()).unwrap();
    assert!(want > 1e-2);
    assert!((infid - want).abs() < 1e-6 * want.max(1.0), "{infid} vs {want}");
}

#[test]
fn steps_precedence_flag_config_env_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"steps": 300, "delta_over_j": 1.058, "omega1_range": "1:1:1"}"#);
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_conegate"));
        c.args(extra);
        match env {
            Some(v) => c.env("CONEGATE_STEPS", v),
            None => c.env_remove("CONEGATE_STEPS"),
        };
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        header_value(&stdout(&o), "steps").unwrap().to_string()
    };
    let base = ["scurve", "--delta-over-j", "1.058", "--omega1-range", "1:1:1"];
    assert_eq!(run(&base, None), "10000");
    assert_eq!(run(&base, Some("400")), "400");
    assert_eq!(run(&["scurve", "--config", &cfg], Some("400")), "300");
    assert_eq!(run(&["scurve", "--config", &cfg, "--steps", "200"], Some("400")), "200");
}

#[test]
fn gate_verification_exit_codes() {
    let ok = conegate(&["gate", "cnot"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert!(text.contains("status: PASS"));
    assert!(text.contains("fidelity_simulated"));
    let coarse = conegate(&["gate", "hadamard", "--steps", "2"]);
    assert_eq!(coarse.status.code(), Some(3));
    assert!(stdout(&coarse).contains("status: FAIL"));
    let phase = conegate(&["gate", "phase", "--theta", "1.0471975511965976", "--format", "json"]);
    assert_eq!(phase.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&phase)).unwrap();
    assert_eq!(v["gate"]["pass"], true);
}

#[test]
fn compare_adiabatic_columns() {
    let o = conegate(&["compare-adiabatic", "--gamma-range", "0.01:0.5:0.49"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("gamma_over_omega0,infidelity_uncompensated,infidelity_compensated"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows[0][1] < 1e-3);
    assert!(rows[1][1] > rows[0][1]);
    assert!(rows.iter().all(|r| r[2] < 1e-10));
}

#[test]
fn cyclic_is_seeded() {
    let a = conegate(&["cyclic", "--draws", "4", "--seed", "11"]);
    let b = conegate(&["cyclic", "--draws", "4", "--seed", "11"]);
    let c = conegate(&["cyclic", "--draws", "4", "--seed", "12"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(data_rows(&stdout(&a)).len(), 4);
}
