//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nslab::checks::{run_all, SuiteReport};
use nslab::config::SimConfig;
use nslab::front::Exec;

const BIN: &str = env!("CARGO_BIN_EXE_ns-lab");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bundled_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn ns_lab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn summary(r: &SuiteReport) -> String {
    if let Some(e) = &r.error {
        return format!("error: {e}");
    }
    r.measurements
        .iter()
        .map(|m| format!("{}{}", if m.pass { "" } else { "!! " }, m.describe()))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Number of significant digits in a `{:.16e}` field, or `None` if the
/// field is not in that form.
fn sig_digits(field: &str) -> Option<usize> {
    let (mantissa, exp) = field.split_once('e')?;
    exp.parse::<i32>().ok()?;
    let m = mantissa.strip_prefix('-').unwrap_or(mantissa);
    let (int, frac) = m.split_once('.')?;
    (int.len() == 1 && int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()))
        .then_some(1 + frac.len())
}

fn write_config(dir: &Path, name: &str, v: &serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

/// Determinism of bundled runs, export format, config echo and exit codes.
fn criterion_10(suites: &[SuiteReport]) -> Result<String, String> {
    let tmp = tempfile::tempdir().unwrap();
    let mut files_compared = 0;
    for cfg_path in bundled_configs() {
        let name = cfg_path.file_stem().unwrap().to_string_lossy().to_string();
        let mut outs = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{name}_{run}"));
            let o = ns_lab(&[
                "simulate",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            if !o.status.success() {
                return Err(format!(
                    "{name}: simulate failed: {}",
                    String::from_utf8_lossy(&o.stderr)
                ));
            }
            outs.push(out);
        }
        let mut names: Vec<_> = fs::read_dir(&outs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for f in &names {
            let a = fs::read(outs[0].join(f)).unwrap();
            let b = fs::read(outs[1].join(f))
                .map_err(|e| format!("{name}: {f:?} missing on rerun: {e}"))?;
            if a != b {
                return Err(format!("{name}: {f:?} differs between runs"));
            }
            files_compared += 1;
        }

        let cfg = SimConfig::from_json(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
        let fronts = fs::read_to_string(outs[0].join("fronts.csv")).unwrap();
        let mut lines = fronts.lines();
        let header = lines.next().unwrap();
        let expected_header = {
            let mut h = vec!["t".to_string(), "sample_index".to_string()];
            h.extend((1..=cfg.front.grid.len()).map(|a| format!("q{a}")));
            h.extend((1..=cfg.dim).map(|i| format!("x{i}")));
            h.extend((1..=cfg.dim).map(|i| format!("N{i}")));
            h.extend(["nu".to_string(), "phase".to_string()]);
            h.join(",")
        };
        if header != expected_header {
            return Err(format!("{name}: fronts.csv header {header:?}"));
        }
        let samples: usize = cfg.front.grid.iter().map(|a| a.samples).product();
        let rows: Vec<&str> = lines.collect();
        let snapshots = 1 + cfg.flow.snapshot_times.iter().filter(|t| **t > 0.0).count();
        if rows.len() != samples * snapshots {
            return Err(format!(
                "{name}: {} rows, expected {}",
                rows.len(),
                samples * snapshots
            ));
        }
        let mut last_key = (f64::MIN, 0usize);
        for row in &rows {
            let cols: Vec<&str> = row.split(',').collect();
            for (k, c) in cols.iter().enumerate() {
                if k != 1 && sig_digits(c) != Some(17) {
                    return Err(format!(
                        "{name}: field {c:?} is not printed with 17 significant digits"
                    ));
                }
            }
            let key = (
                cols[0].parse::<f64>().unwrap(),
                cols[1].parse::<usize>().unwrap(),
            );
            if rows[0] != *row && key <= last_key {
                return Err(format!("{name}: rows not ordered by t then sample_index"));
            }
            last_key = key;
        }

        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(outs[0].join("report.json")).unwrap())
                .map_err(|e| e.to_string())?;
        if serde_json::to_string_pretty(&report["config"]).unwrap() != cfg.canonical_json() {
            return Err(format!(
                "{name}: report.json does not echo the canonical config"
            ));
        }
    }

    // `check --suite all` lists criteria 1-9 and its status reflects them.
    let o = ns_lab(&["check", "--suite", "all"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let mut seen = BTreeMap::new();
    for line in stdout.lines() {
        for (verdict, pass) in [("PASS: criterion ", true), ("FAIL: criterion ", false)] {
            if let Some(rest) = line.strip_prefix(verdict) {
                let c: u8 = rest.split_whitespace().next().unwrap().parse().unwrap();
                seen.insert(c, pass);
            }
        }
    }
    if seen.keys().copied().collect::<Vec<_>>() != (1..=9).collect::<Vec<u8>>() {
        return Err(format!(
            "check --suite all reported criteria {:?}",
            seen.keys().collect::<Vec<_>>()
        ));
    }
    for r in suites {
        let c = r.criterion.unwrap();
        if seen[&c] != r.passed() {
            return Err(format!(
                "check --suite all disagrees with the library on criterion {c}"
            ));
        }
    }
    let any_failed = seen.values().any(|p| !p);
    let code = o.status.code();
    if any_failed != (code == Some(2)) || (!any_failed && code != Some(0)) {
        return Err(format!(
            "check --suite all exited with {code:?} (violations present: {any_failed})"
        ));
    }

    // Exit codes: schema error 1, numeric failure 2 with stage, I/O error 3.
    let base: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(configs_dir().join("flat_circle.json")).unwrap())
            .unwrap();
    let mut both = base.clone();
    both["w"] = serde_json::json!({"W": "1/u^2 - 1"});
    let o = ns_lab(&[
        "simulate",
        "--config",
        write_config(tmp.path(), "both.json", &both)
            .to_str()
            .unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    if o.status.code() != Some(1) || tmp.path().join("x").exists() {
        return Err(format!("two dynamics sources: exit {:?}", o.status.code()));
    }
    let mut no_nu = base.clone();
    no_nu["symbol"] = serde_json::json!({"kind": "isotropic", "c0": "1", "c2": "1"});
    let o = ns_lab(&[
        "simulate",
        "--config",
        write_config(tmp.path(), "no_nu.json", &no_nu)
            .to_str()
            .unwrap(),
        "--out",
        tmp.path().join("y").to_str().unwrap(),
    ]);
    let err = String::from_utf8_lossy(&o.stderr);
    if o.status.code() != Some(2) || !err.contains("solve_nu") || !err.contains("no admissible ν")
    {
        return Err(format!(
            "H = |p|^2 + 1: exit {:?}, stderr {err:?}",
            o.status.code()
        ));
    }
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = ns_lab(&[
        "simulate",
        "--config",
        configs_dir().join("flat_circle.json").to_str().unwrap(),
        "--out",
        blocker.join("out").to_str().unwrap(),
    ]);
    if o.status.code() != Some(3) {
        return Err(format!("unwritable output: exit {:?}", o.status.code()));
    }

    Ok(format!(
        "{} configs, {files_compared} files byte-identical across reruns; check --suite all exit {:?}",
        bundled_configs().len(),
        code
    ))
}

#[test]
fn acceptance() {
    let suites = run_all(Exec::Parallel);
    let titles = [
        "front coincidence",
        "normality preservation",
        "form equivalence",
        "first integrals",
        "h = 0 coincidence",
        "Legendre suite",
        "transport operator",
        "gradient checks",
        "integrator order",
    ];
    let mut failed = Vec::new();
    for (r, title) in suites.iter().zip(titles) {
        let c = r.criterion.unwrap();
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!("criterion {c:>2} [{verdict}] {title}: {}", summary(r));
        if !r.passed() {
            failed.push(c);
        }
    }
    let c10 = criterion_10(&suites);
    match &c10 {
        Ok(s) => println!("criterion 10 [PASS] CLI determinism and format: {s}"),
        Err(e) => {
            println!("criterion 10 [FAIL] CLI determinism and format: {e}");
            failed.push(10);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
