use std::path::Path;
use std::process::{Command, Output};

fn bsc(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bsc"));
    cmd.args(args).env_remove("BSC_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_schema() {
    let o = bsc(&["constants", "--n", "5", "--p", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["S", "E", "T_E", "T_0", "iso_B", "diagnostics", "tolerances"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let s = v["S"].as_f64().unwrap();
    assert!((s - 3.84862465304).abs() < 1e-9);
}

#[test]
fn curve_csv_schema_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = bsc(
        &[
            "curve",
            "phih",
            "--n",
            "5",
            "--p",
            "2",
            "--t-min",
            "0.02",
            "--t-max",
            "5",
            "--samples",
            "64",
            "--scale",
            "log",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,phi,regime,offset,c,lambda,sigma"));
    let mut prev = 0.0;
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        let t: f64 = cols[0].parse().unwrap();
        assert!(t > prev);
        prev = t;
        // 17 significant digits
        let mantissa = cols[1].split('e').next().unwrap();
        assert_eq!(mantissa.replace(['.', '-'], "").len(), 17, "{}", cols[1]);
        assert!(["sobolev", "escobar", "beyond"].contains(&cols[2]));
        rows += 1;
    }
    assert_eq!(rows, 64);
}

#[test]
fn ball_curve_defaults() {
    let o = bsc(&["curve", "phib", "--n", "4", "--p", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 33);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"n": 5, "p": 2.0, "t_min": 0.5, "t_max": 3.0, "samples": 5, "scale": "linear"}"#,
    );
    let a = bsc(&["--config", &cfg, "curve", "phih"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a).lines().count(), 6);
    assert!(stdout(&a)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("5.0000000000000000e-1,"));
    let b = bsc(&["--config", &cfg, "curve", "phih", "--samples", "3"], &[]);
    assert_eq!(stdout(&b).lines().count(), 4);
    let bad = write(dir.path(), "bad.json", r#"{"n": 5, "unknown": 1}"#);
    assert_eq!(
        bsc(&["--config", &bad, "constants"], &[]).status.code(),
        Some(3)
    );
}

#[test]
fn byte_identical_reruns_across_thread_counts() {
    let args = [
        "verify",
        "compare",
        "--n",
        "4",
        "--p",
        "2",
        "--t-min",
        "0.5",
        "--t-max",
        "4",
        "--samples",
        "9",
    ];
    let a = bsc(&args, &[("BSC_THREADS", "1")]);
    let b = bsc(&args, &[("BSC_THREADS", "4")]);
    let c = bsc(&args, &[]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(bsc(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(bsc(&["curve"], &[]).status.code(), Some(2));
    assert_eq!(bsc(&["constants", "--n", "5"], &[]).status.code(), Some(3));
    assert_eq!(
        bsc(&["constants", "--n", "3", "--p", "4"], &[])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        bsc(&["verify", "key", "--n", "3", "--p", "2"], &[])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        bsc(
            &[
                "verify",
                "expansion",
                "--n",
                "5",
                "--p",
                "2",
                "--beta",
                "0.9"
            ],
            &[]
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        bsc(
            &["curve", "phib", "--n", "5", "--p", "2", "--t-min", "1", "--t-max", "9"],
            &[]
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        bsc(
            &["constants", "--n", "5", "--p", "2"],
            &[("BSC_THREADS", "x")]
        )
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn key_default_grid_passes() {
    let o = bsc(&["verify", "key", "--n", "5", "--p", "2"], &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["claims"].as_array().unwrap().len(), 3);
    assert!(v["report"]["claims"][0]["tolerances"]["strictness_factor"].is_number());
}

#[test]
fn failing_checks_report_on_stderr() {
    // the lowest level is outside the solver range, so every half-space claim is inconclusive there
    let o = bsc(
        &[
            "verify",
            "compare",
            "--n",
            "5",
            "--p",
            "2",
            "--t-min",
            "1e-6",
            "--t-max",
            "2",
            "--samples",
            "3",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["status"], "fail");
    let failed: Vec<&str> = v["failed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap())
        .collect();
    assert!(failed.contains(&"divergence_bound"));
}
