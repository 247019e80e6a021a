use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ns-lab");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn ns_lab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("NS_LAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn csv(o: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn row_at(rows: &[Vec<f64>], state: [f64; 4]) -> &[f64] {
    rows.iter()
        .find(|r| {
            r[..4]
                .iter()
                .zip(&state)
                .all(|(a, b)| (a - b).abs() < 1e-12)
        })
        .unwrap_or_else(|| panic!("no row for {state:?}"))
}

// Forces from a brute-force evaluation of the shift force with W = 1/u² − n².
const FORCE_TOL: f64 = 1e-7;

#[test]
fn derive_force_matches_reference_values() {
    let grid = "x1=0:0.5:2,x2=0:0.3:2,u1=0.6:1:2,u2=0:0.8:2";
    let (header, rows) = csv(&ns_lab(
        &[
            "derive-force",
            "--config",
            config("linear_medium_w.json").to_str().unwrap(),
            "--grid",
            grid,
        ],
        &[],
    ));
    assert_eq!(
        header,
        [
            "x1",
            "x2",
            "u1",
            "u2",
            "W",
            "F_wavefront1",
            "F_wavefront2",
            "F_shift1",
            "F_shift2"
        ]
    );
    assert_eq!(rows.len(), 16);

    let r = row_at(&rows, [0.0, 0.0, 1.0, 0.0]);
    assert!(r[4].abs() < 1e-12);
    for (got, want) in r[5..7].iter().zip([-0.2, 0.0]) {
        assert!((got - want).abs() < FORCE_TOL, "{got} vs {want}");
    }
    let r = row_at(&rows, [0.5, 0.3, 0.6, 0.8]);
    for (got, want) in r[5..7].iter().zip([0.0616, -0.2112]) {
        assert!((got - want).abs() < FORCE_TOL, "{got} vs {want}");
    }
    // h = 0 gives the wavefront force exactly.
    for r in &rows {
        assert_eq!(r[5..7], r[7..9]);
    }

    let tmp = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(config("linear_medium_w.json")).unwrap()).unwrap();
    v["h"] = serde_json::json!({"kind": "linear", "slope": 0.0, "intercept": 1.0});
    let path = tmp.path().join("h_one.json");
    fs::write(&path, v.to_string()).unwrap();
    let (_, rows) = csv(&ns_lab(
        &[
            "derive-force",
            "--config",
            path.to_str().unwrap(),
            "--grid",
            grid,
        ],
        &[],
    ));
    let r = row_at(&rows, [0.5, 0.3, 0.6, 0.8]);
    for (got, want) in r[7..9].iter().zip([-0.2384, -0.6112]) {
        assert!((got - want).abs() < FORCE_TOL, "{got} vs {want}");
    }
}

#[test]
fn nu_reports_the_index_on_a_straight_front() {
    let (header, rows) = csv(&ns_lab(
        &[
            "nu",
            "--config",
            config("linear_medium.json").to_str().unwrap(),
        ],
        &[],
    ));
    assert_eq!(header, ["sample_index", "q1", "x1", "x2", "N1", "N2", "nu"]);
    assert_eq!(rows.len(), 64);
    for r in &rows {
        assert_eq!([r[4], r[5]], [0.0, 1.0]);
        assert!((r[6] - (1.0 + 0.2 * r[2])).abs() < 1e-14, "{r:?}");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sphere_latitude.json");
    type Run<'a> = (&'a str, &'a [&'a str], &'a [(&'a str, &'a str)]);
    let runs: [Run; 3] = [
        ("default", &[], &[]),
        ("one", &[], &[("NS_LAB_THREADS", "1")]),
        ("seq", &["--exec", "sequential"], &[("NS_LAB_THREADS", "3")]),
    ];
    for (name, extra, env) in runs {
        let out = tmp.path().join(name);
        let mut args = vec![
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = ns_lab(&args, env);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    for file in ["fronts.csv", "report.json"] {
        let base = fs::read(tmp.path().join("default").join(file)).unwrap();
        for name in ["one", "seq"] {
            assert_eq!(
                base,
                fs::read(tmp.path().join(name).join(file)).unwrap(),
                "{name}/{file}"
            );
        }
    }
}

#[test]
fn bad_thread_counts_and_suites_are_config_errors() {
    for bad in ["0", "many"] {
        let o = ns_lab(&["check", "--suite", "order"], &[("NS_LAB_THREADS", bad)]);
        assert_eq!(o.status.code(), Some(1), "NS_LAB_THREADS={bad}");
    }
    let o = ns_lab(&["check", "--suite", "nonsense"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = ns_lab(&["nu", "--config", "/nonexistent/config.json"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn single_suite_check_passes() {
    let o = ns_lab(&["check", "--suite", "order"], &[]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("PASS: criterion 9 (order)"), "{out}");
}
