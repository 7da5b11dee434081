use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const REPORT_KEYS: [&str; 9] = [
    "version",
    "command",
    "problem",
    "warnings",
    "solve",
    "criteria",
    "epsilon_scan",
    "residuals",
    "growth",
];

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn problem(&self, name: &str, body: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap-radial"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(command: &str, problem: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--problem",
        problem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(out: &Path) -> Value {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn profiles(out: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(out.join("profiles.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn scalar(a: &str, f: &str, r_max: f64, points: usize) -> String {
    format!(
        r#"{{"m": 1, "p": 2, "N": 3, "coefficients": ["{a}"], "nonlinearities": ["{f}"],
            "grid": {{"r_max": {r_max}, "points": {points}, "grading": "uniform"}}}}"#
    )
}

fn assert_documented_keys(v: &Value) {
    let allowed: BTreeSet<&str> = REPORT_KEYS.iter().copied().collect();
    for key in v.as_object().unwrap().keys() {
        assert!(allowed.contains(key.as_str()), "undocumented key {key}");
    }
    for key in ["version", "command", "problem", "warnings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn solve_linear_oracle() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 10.0, 2001));
    let out = ws.out("out");
    let o = run_on("solve", &problem, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("solve: converged"));

    let (header, rows) = profiles(&out);
    assert_eq!(header, ["r", "u1"]);
    assert_eq!(rows.len(), 2001);
    for row in &rows {
        let exact = if row[0] == 0.0 {
            1.0
        } else {
            row[0].sinh() / row[0]
        };
        assert!(((row[1] - exact) / exact).abs() < 1e-4, "r = {}", row[0]);
    }

    let v = report(&out);
    assert_documented_keys(&v);
    assert_eq!(v["command"], "solve");
    assert_eq!(v["problem"]["beta"], 1.0);
    assert_eq!(v["problem"]["epsilon"], 0.5);
    assert_eq!(v["problem"]["iteration"]["max_iterations"], 500);
    assert_eq!(v["solve"]["converged"], true);
    assert!(v["residuals"]["sup_fixed_point_residual"].as_f64().unwrap() < 1e-6);
    assert!(v.get("criteria").is_none());
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 1.0, 101));
    let out = ws.out("out");
    assert_eq!(code(&run_on("solve", &problem, &out, &[])), 0);
    let csv = std::fs::read_to_string(out.join("profiles.csv")).unwrap();
    let second = csv.lines().nth(2).unwrap();
    for field in second.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(
            mantissa.chars().filter(char::is_ascii_digit).count(),
            17,
            "{field}"
        );
    }
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("\"r_max\": 1.0000000000000000e0"));
}

#[test]
fn zero_coefficients_give_a_constant_profile() {
    let ws = Workspace::new();
    let problem = ws.problem(
        "p.json",
        r#"{"m": 2, "p": 2, "N": 3, "beta": 0.25, "coefficients": ["0", "0"],
            "nonlinearities": ["u1 + u2", "u2"], "grid": {"r_max": 4, "points": 65}}"#,
    );
    let out = ws.out("out");
    assert_eq!(code(&run_on("solve", &problem, &out, &[])), 0);
    let (header, rows) = profiles(&out);
    assert_eq!(header, ["r", "u1", "u2"]);
    assert!(rows.iter().all(|r| r[1] == 0.25 && r[2] == 0.25));
}

#[test]
fn saturating_nonlinearity_grows_quadratically() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "min(u1, 1)", 40.0, 4001));
    let out = ws.out("out");
    let o = run_on("solve", &problem, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = profiles(&out);
    let last = rows.last().unwrap();
    let ratio = last[1] / (last[0] * last[0] / 6.0);
    assert!((ratio - 1.0).abs() < 0.02, "u(40) / (40^2/6) = {ratio}");
}

#[test]
fn schema_violations_exit_2() {
    let ws = Workspace::new();
    let out = ws.out("out");
    let cases = [
        (
            scalar("1", "u1", 10.0, 101).replace("\"N\": 3", "\"N\": 2"),
            "N",
        ),
        (
            scalar("1", "u1", 10.0, 101).replace("\"m\": 1", "\"m\": 2"),
            "coefficients",
        ),
        (
            scalar("1", "u1", 10.0, 101).replace("\"p\": 2,", "\"p\": 2, \"extra\": 1,"),
            "extra",
        ),
        (
            scalar("1", "u1", 10.0, 101).replace("\"r_max\": 10", "\"r_max\": \"ten\""),
            "grid.r_max",
        ),
        ("[1, 2".to_string(), ""),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let problem = ws.problem(&format!("p{i}.json"), body);
        let o = run_on("solve", &problem, &out, &[]);
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "case {i}: {}", stderr(&o));
    }
    let o = run_on("solve", &ws.out("missing.json"), &out, &[]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("report.json").exists());
}

#[test]
fn syntax_errors_exit_3_with_offset() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1 *", 10.0, 101));
    let o = run_on("solve", &problem, &ws.out("out"), &[]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(
        err.contains("nonlinearities[0]") && err.contains("byte 4"),
        "{err}"
    );

    let problem = ws.problem("q.json", &scalar("1", "u2", 10.0, 101));
    assert_eq!(code(&run_on("predict", &problem, &ws.out("out"), &[])), 3);
}

#[test]
fn non_convergence_exits_4_and_still_writes() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 10.0, 101));
    let out = ws.out("out");
    let o = run_on("solve", &problem, &out, &["--max-iter", "2"]);
    assert_eq!(code(&o), 4);
    let v = report(&out);
    assert_eq!(v["solve"]["converged"], false);
    assert_eq!(v["solve"]["iterations_used"], 2);
    assert_eq!(profiles(&out).1.len(), 101);
}

#[test]
fn domain_errors_exit_5() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1 * sqrt(20 - u1)", 10.0, 201));
    let o = run_on("solve", &problem, &ws.out("out"), &[]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(stderr(&o).contains("sqrt"));
}

#[test]
fn shifted_nonlinearity_loads_with_a_warning() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("0", "u1 - 1", 5.0, 101));
    let out = ws.out("out");
    let o = run_on("solve", &problem, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert!(!report(&out)["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn overrides_change_the_grid() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 10.0, 101));
    let out = ws.out("out");
    let o = run_on(
        "solve",
        &problem,
        &out,
        &["--grid-points", "33", "--r-max", "2", "--tol", "1e-12"],
    );
    assert_eq!(code(&o), 0);
    let (_, rows) = profiles(&out);
    assert_eq!(rows.len(), 33);
    assert_eq!(rows.last().unwrap()[0], 2.0);
    assert_eq!(report(&out)["problem"]["iteration"]["abs_tol"], 1e-12);
}

fn prediction(ws: &Workspace, body: &str, extra: &[&str]) -> Value {
    let problem = ws.problem("p.json", body);
    let out = ws.out("predict");
    let o = run_on("predict", &problem, &out, extra);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = report(&out);
    assert_documented_keys(&v);
    v
}

#[test]
fn predict_examples() {
    let ws = Workspace::new();
    let v = prediction(&ws, &scalar("(1+r)^(-4)", "u1^0.5", 20.0, 2001), &[]);
    assert_eq!(v["criteria"]["prediction"]["kind"], "BoundedExists");
    for key in [
        "c3",
        "cond5",
        "cond5b",
        "cond12",
        "cond13",
        "weight_monotone",
    ] {
        assert!(v["criteria"].get(key).is_some(), "missing {key}");
    }

    let v = prediction(&ws, &scalar("1", "u1^0.5", 20.0, 2001), &[]);
    assert_eq!(v["criteria"]["prediction"]["kind"], "AllSolutionsLarge");

    let v = prediction(&ws, &scalar("0", "u1^0.5", 20.0, 201), &[]);
    assert_eq!(v["criteria"]["prediction"]["kind"], "Inconclusive");
    assert_eq!(v["criteria"]["degenerate_coefficients"], true);
}

#[test]
fn epsilon_scan_reports_every_epsilon() {
    let ws = Workspace::new();
    let v = prediction(
        &ws,
        &scalar("(1+r)^(-4)", "u1^0.5", 5.0, 201),
        &["--epsilon-scan", "--epsilon", "0.1"],
    );
    assert_eq!(v["criteria"]["cond5"]["epsilon"], 0.1);
    let scan = v["epsilon_scan"].as_array().unwrap();
    let eps: Vec<f64> = scan
        .iter()
        .map(|e| e["epsilon"].as_f64().unwrap())
        .collect();
    assert_eq!(eps, [0.01, 0.1, 0.5, 1.0]);
    assert!(scan
        .iter()
        .all(|e| e["cond5"]["verdict"]["kind"] == "ConvergesFinite"));
}

fn sweep(ws: &Workspace, body: &str, extra: &[&str]) -> Value {
    let problem = ws.problem("s.json", body);
    let out = ws.out("sweep");
    let o = run_on("sweep", &problem, &out, extra);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = report(&out);
    assert_documented_keys(&v);
    v["growth"].clone()
}

#[test]
fn sweep_examples() {
    let ws = Workspace::new();
    let g = sweep(
        &ws,
        &scalar("1", "u1^0.5", 5.0, 501),
        &["--base-r", "5", "--doublings", "4"],
    );
    assert_eq!(g["classification"]["kind"], "Growing");
    let exponent = g["classification"]["exponent"].as_f64().unwrap();
    assert!((3.7..=4.3).contains(&exponent), "{exponent}");
    assert_eq!(g["domain_radii"].as_array().unwrap().len(), 5);

    let g = sweep(
        &ws,
        &scalar("(1+r)^(-4)", "u1^0.5", 20.0, 401),
        &["--doublings", "6"],
    );
    assert_eq!(g["classification"]["kind"], "Saturating");

    let g = sweep(&ws, &scalar("0", "u1", 5.0, 101), &[]);
    assert_eq!(g["classification"]["kind"], "Saturating");
}

#[test]
fn verify_a_stored_profile() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 10.0, 2001));
    let solved = ws.out("solved");
    assert_eq!(code(&run_on("solve", &problem, &solved, &[])), 0);
    let checked = ws.out("checked");
    let csv = solved.join("profiles.csv");
    let o = run_on(
        "verify",
        &problem,
        &checked,
        &["--profile", csv.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = report(&checked);
    assert_documented_keys(&v);
    assert!(v["residuals"]["sup_fixed_point_residual"].as_f64().unwrap() < 1e-6);

    // A profile from a different problem has a visible residual.
    let other = ws.problem("q.json", &scalar("2", "u1", 10.0, 2001));
    let o = run_on(
        "verify",
        &other,
        &checked,
        &["--profile", csv.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    assert!(
        report(&checked)["residuals"]["sup_fixed_point_residual"]
            .as_f64()
            .unwrap()
            > 1.0
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let ws = Workspace::new();
    let problem = ws.problem("p.json", &scalar("1", "u1", 10.0, 4001));
    let (a, b) = (ws.out("a"), ws.out("b"));
    assert_eq!(code(&run_on("solve", &problem, &a, &[])), 0);
    assert_eq!(code(&run_on("solve", &problem, &b, &[])), 0);
    for file in ["profiles.csv", "report.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap()
        );
    }
}

#[test]
fn usage_errors_are_reported_by_clap() {
    let o = run(&["solve"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--problem"));
    let o = run(&["--version"]);
    assert_eq!(code(&o), 0);
}
