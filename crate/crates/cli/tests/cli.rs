use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bandlfd::{gaussian_density, make_uniform_grid};
use tempfile::TempDir;

fn bandlfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandlfd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const CENSORING: &str = r#"
[grid]
lo = -10.0
hi = 10.0
n = 2001

[[bands]]
kind = "scaled_nominal"
nominal = { gaussian = { mean = -1.0, sd = 2.0 } }
lo_factor = 0.8
hi_factor = 1.5

[[bands]]
kind = "scaled_nominal"
nominal = { gaussian = { mean = 1.0, sd = 2.0 } }
lo_factor = 0.8
hi_factor = 1.5
"#;

#[test]
fn solve_censoring_spec() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "spec.toml", CENSORING);
    let out = tmp.path().join("run");
    let o = bandlfd(&[
        "solve",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = report(&out);
    assert_eq!(r["kind"], "censored");
    assert_eq!(r["all_pass"], true);
    for f in ["lfd.csv", "solution.json", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("lfd.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "omega,p0_lower,p0_upper,p1_lower,p1_upper,q0,q1,log_ratio"
    );
    assert_eq!(csv.lines().count(), 2002);
}

#[test]
fn singleton_spec_returns_nominals() {
    let g = make_uniform_grid(-5.0, 5.0, 101).unwrap();
    let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
    let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
    let arr = |v: &[f64]| {
        format!(
            "[{}]",
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        )
    };
    let body = format!(
        "[grid]\nlo = -5.0\nhi = 5.0\nn = 101\n\n\
         [[bands]]\nkind = \"explicit\"\nlower = {a}\nupper = {a}\n\n\
         [[bands]]\nkind = \"explicit\"\nlower = {b}\nupper = {b}\n",
        a = arr(p0.values()),
        b = arr(p1.values())
    );
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "spec.toml", &body);
    let out = tmp.path().join("run");
    let o = bandlfd(&[
        "solve",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let sol: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert!(sol["iterations"].as_u64().unwrap() <= 1);
    let q0: Vec<f64> = serde_json::from_value(sol["q0"].clone()).unwrap();
    for (a, b) in q0.iter().zip(p0.values()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

const DISJOINT: &str = r#"
[grid]
lo = -60.0
hi = 60.0
n = 1201

[[bands]]
kind = "scaled_nominal"
nominal = { gaussian = { mean = -50.0, sd = 1.0 } }
lo_factor = 0.8
hi_factor = 1.2

[[bands]]
kind = "scaled_nominal"
nominal = { gaussian = { mean = 50.0, sd = 1.0 } }
lo_factor = 0.8
hi_factor = 1.2
"#;

#[test]
fn disjoint_bands_without_auto_alpha_fail_with_guidance() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "spec.toml", DISJOINT);
    let out = tmp.path().join("run");
    let s = spec.to_str().unwrap();
    let o = bandlfd(&[
        "solve",
        s,
        "--alpha",
        "0",
        "--no-auto-alpha",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("alpha > 0"), "{}", text(&o));

    // default settings escalate instead
    let o = bandlfd(&[
        "solve",
        s,
        "--samples",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(report(&out)["solution"]["alpha_escalated"], true);
}

#[test]
fn check_round_trip_and_tampering() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("demo");
    let o = bandlfd(&["demo", "censoring", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let sol = out.join("solution.json");
    let spec = out.join("spec.toml");

    let o = bandlfd(&["check", sol.to_str().unwrap(), spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    let o = bandlfd(&[
        "check",
        sol.to_str().unwrap(),
        spec.to_str().unwrap(),
        "--samples",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("skipped"), "{}", text(&o));

    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    v["c0"] = serde_json::json!(2.0 * v["c0"].as_f64().unwrap());
    let bad = write(tmp.path(), "tampered.json", &v.to_string());
    let rep = tmp.path().join("rep");
    let o = bandlfd(&[
        "check",
        bad.to_str().unwrap(),
        spec.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let r = report(&rep);
    assert_eq!(r["checks"]["residual"]["pass"], false);
    assert_eq!(r["all_pass"], false);
}

#[test]
fn custom_grids_are_used() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("demo");
    let o = bandlfd(&[
        "demo",
        "compress-tight",
        "--samples",
        "5",
        "--lambda-grid",
        "0.5:2:3",
        "--eta-grid",
        "0.5:2:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = report(&out);
    assert_eq!(r["checks"]["l_dominance"]["lambda_points"], 3);
    assert_eq!(r["checks"]["stochastic_dominance"]["eta_points"], 4);
    assert_eq!(r["kind"], "compressed");
}

#[test]
fn csv_output_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "spec.toml", CENSORING);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = bandlfd(&[
            "solve",
            spec.to_str().unwrap(),
            "--samples",
            "3",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        (
            std::fs::read(out.join("lfd.csv")).unwrap(),
            std::fs::read(out.join("solution.json")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn demos_write_their_extras() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("huber");
    let o = bandlfd(&[
        "demo",
        "huber",
        "--samples",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = report(&out);
    assert_eq!(r["extras"][0]["type"], "huber_levels");
    assert_eq!(r["extras"][0]["other_points"], 0);
    let csv = std::fs::read_to_string(out.join("lfd.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",inf,"));

    let out = tmp.path().join("spectrum");
    let o = bandlfd(&[
        "demo",
        "spectrum",
        "--samples",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let reference = std::fs::read_to_string(out.join("reference.csv")).unwrap();
    assert_eq!(reference.lines().next().unwrap(), "omega,q0_ref,q1_ref");
    assert_eq!(reference.lines().count(), 3001);
    assert!(report(&out)["solution"]["iterations"].as_u64().unwrap() <= 10);
}

#[test]
fn malformed_input_exits_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let o_ = out.to_str().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["demo".into(), "nope".into()],
        vec![
            "solve".into(),
            tmp.path().join("missing.toml").display().to_string(),
        ],
        vec![
            "solve".into(),
            write(tmp.path(), "garbage.toml", "[grid\nlo = ")
                .display()
                .to_string(),
        ],
        vec![
            "solve".into(),
            write(
                tmp.path(),
                "neg.toml",
                &CENSORING.replace("lo_factor = 0.8", "lo_factor = -0.8"),
            )
            .display()
            .to_string(),
        ],
        vec![
            "solve".into(),
            write(
                tmp.path(),
                "short.toml",
                &CENSORING.replace("n = 2001", "n = 1"),
            )
            .display()
            .to_string(),
        ],
        vec![
            "demo".into(),
            "censoring".into(),
            "--lambda-grid".into(),
            "1:2".into(),
        ],
        vec![
            "demo".into(),
            "censoring".into(),
            "--lambda-grid".into(),
            "0:2:3".into(),
        ],
        vec![
            "demo".into(),
            "censoring".into(),
            "--tol".into(),
            "-1".into(),
        ],
        vec![
            "demo".into(),
            "censoring".into(),
            "--max-iter".into(),
            "0".into(),
        ],
        vec!["check".into(), "a.json".into(), "b.toml".into()],
    ];
    for args in cases {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", o_]);
        let o = bandlfd(&a);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", text(&o));
        assert!(!text(&o).contains("panicked"), "{args:?}");
    }
}

#[test]
fn check_rejects_mismatched_solution() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("demo");
    let o = bandlfd(&[
        "demo",
        "compress-loose",
        "--samples",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let other = write(
        tmp.path(),
        "small.toml",
        &CENSORING.replace("n = 2001", "n = 1001"),
    );
    let o = bandlfd(&[
        "check",
        out.join("solution.json").to_str().unwrap(),
        other.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
}

#[test]
fn non_convergence_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let o = bandlfd(&[
        "demo",
        "huber",
        "--max-iter",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("converge"), "{}", text(&o));
}
