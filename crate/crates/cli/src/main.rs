use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nslab::checks::{check_config, run_all, run_suite, SuiteReport, SUITES};
use nslab::config::SimConfig;
use nslab::export::{num, write_all};
use nslab::flow::Form;
use nslab::forces::force_wavefront;
use nslab::front::Exec;
use nslab::legendre::StateU;
use nslab::run::{prepare, run_with, ErrorClass, RunError, Stage};

const THREADS_ENV: &str = "NS_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "ns-lab",
    version,
    about = "Wavefront propagation and normal-shift dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

impl From<ExecArg> for Exec {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Sequential => Exec::Sequential,
            ExecArg::Parallel => Exec::Parallel,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Shift the configured front and write CSV, gnuplot and JSON outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's execution mode.
        #[arg(long, value_enum)]
        exec: Option<ExecArg>,
    },
    /// Run verification suites; exits with status 2 if any check fails.
    Check {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Also check a config's run (phase spread, normality, drifts).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the front with solved ν as CSV.
    Nu {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate the wavefront and normal-shift forces on a state grid.
    DeriveForce {
        #[arg(long)]
        config: PathBuf,
        /// e.g. `x1=-1:1:5,x2=0:0:1,u1=0.5:1.5:3,u2=0:0:1`
        #[arg(long)]
        grid: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Simulate { config, out, exec } => simulate(&config, &out, exec.map(Exec::from)),
        Command::Check { suite, config } => check(&suite, config.as_deref()),
        Command::Nu { config } => nu(&config),
        Command::DeriveForce { config, grid } => derive_force(&config, &grid),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        RunError::new(
            Stage::Config,
            ErrorClass::Config,
            format!("{THREADS_ENV} must be a positive integer, got {raw:?}"),
        )
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| RunError::new(Stage::Config, ErrorClass::Config, e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn io_error(stage: Stage, path: &Path, e: io::Error) -> RunError {
    RunError::new(stage, ErrorClass::Io, format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<SimConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(Stage::Config, path, e))?;
    SimConfig::from_json(&text)
        .map_err(|e| RunError::new(Stage::Config, ErrorClass::Config, e.to_string()))
}

fn stdout_error(e: io::Error) -> RunError {
    RunError::new(Stage::Export, ErrorClass::Io, format!("stdout: {e}"))
}

fn simulate(config: &Path, out: &Path, exec: Option<Exec>) -> Result<ExitCode, RunError> {
    let cfg = load(config)?;
    let result = run_with(&cfg, exec.unwrap_or(cfg.flow.exec))?;
    let files = write_all(&result, out).map_err(|e| io_error(Stage::Export, out, e))?;
    let mut stdout = io::stdout().lock();
    for d in &result.result.diagnostics {
        writeln!(
            stdout,
            "t = {:<8} phase spread {:.3e}  normality deviation {:.3e}",
            d.t, d.phase_spread, d.normality_deviation
        )
        .map_err(stdout_error)?;
    }
    for f in files {
        writeln!(stdout, "wrote {}", f.display()).map_err(stdout_error)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(out: &mut impl Write, r: &SuiteReport) -> io::Result<()> {
    let label = match r.criterion {
        Some(c) => format!("criterion {c} ({})", r.suite),
        None => r.suite.clone(),
    };
    writeln!(out, "{}: {label}", if r.passed() { "PASS" } else { "FAIL" })?;
    if let Some(e) = &r.error {
        writeln!(out, "    error: {e}")?;
    }
    for m in &r.measurements {
        writeln!(
            out,
            "    [{}] {}",
            if m.pass { "ok" } else { "!!" },
            m.describe()
        )?;
    }
    Ok(())
}

fn check(suite: &str, config: Option<&Path>) -> Result<ExitCode, RunError> {
    let exec = Exec::Parallel;
    let mut reports = if suite == "all" {
        run_all(exec)
    } else {
        vec![run_suite(suite, exec).ok_or_else(|| {
            let names: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
            RunError::new(
                Stage::Config,
                ErrorClass::Config,
                format!(
                    "unknown suite {suite:?}; expected all or one of {}",
                    names.join(", ")
                ),
            )
        })?]
    };
    if let Some(path) = config {
        reports.push(check_config(&load(path)?, exec));
    }
    let mut stdout = io::stdout().lock();
    for r in &reports {
        print_report(&mut stdout, r).map_err(stdout_error)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    writeln!(
        stdout,
        "{} of {} suites passed",
        reports.len() - failed,
        reports.len()
    )
    .map_err(stdout_error)?;
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(ErrorClass::Numeric.exit_code() as u8)
    })
}

fn nu(config: &Path) -> Result<ExitCode, RunError> {
    let cfg = load(config)?;
    let p = prepare(&cfg)?;
    let mesh = &p.mesh;
    let n = p.setup.chart.dim();
    let mut header = vec!["sample_index".to_string()];
    header.extend((1..=mesh.grid.axes.len()).map(|a| format!("q{a}")));
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("N{i}")));
    header.push("nu".into());
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", header.join(",")).map_err(stdout_error)?;
    for i in 0..mesh.len() {
        let mut row = vec![i.to_string()];
        row.extend(mesh.grid.params(i).into_iter().map(num));
        row.extend(mesh.points[i].iter().copied().map(num));
        row.extend(mesh.normals[i].iter().copied().map(num));
        row.push(num(mesh.nu[i]));
        writeln!(stdout, "{}", row.join(",")).map_err(stdout_error)?;
    }
    Ok(ExitCode::SUCCESS)
}

/// One `name=start:end:count` axis of a state grid.
#[derive(Debug, PartialEq)]
struct GridAxis {
    name: String,
    values: Vec<f64>,
}

fn parse_grid(spec: &str, dim: usize) -> Result<Vec<GridAxis>, String> {
    let mut axes = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part
            .split_once('=')
            .ok_or_else(|| format!("expected name=start:end:count, got {part:?}"))?;
        let fields: Vec<&str> = range.split(':').collect();
        let [a, b, c] = fields[..] else {
            return Err(format!(
                "expected start:end:count for {name}, got {range:?}"
            ));
        };
        let start: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad start {a:?} for {name}"))?;
        let end: f64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad end {b:?} for {name}"))?;
        let count: usize = c
            .trim()
            .parse()
            .map_err(|_| format!("bad count {c:?} for {name}"))?;
        if count == 0 || !start.is_finite() || !end.is_finite() {
            return Err(format!(
                "axis {name} needs finite bounds and a positive count"
            ));
        }
        let values = if count == 1 {
            vec![start]
        } else {
            (0..count)
                .map(|k| {
                    if k + 1 == count {
                        end
                    } else {
                        start + (end - start) * k as f64 / (count - 1) as f64
                    }
                })
                .collect()
        };
        axes.push(GridAxis {
            name: name.trim().to_string(),
            values,
        });
    }
    let expected: Vec<String> = (1..=dim)
        .map(|i| format!("x{i}"))
        .chain((1..=dim).map(|i| format!("u{i}")))
        .collect();
    let mut ordered = Vec::with_capacity(expected.len());
    for name in &expected {
        let pos = axes
            .iter()
            .position(|a| &a.name == name)
            .ok_or_else(|| format!("grid is missing axis {name}"))?;
        ordered.push(axes.remove(pos));
    }
    if let Some(extra) = axes.first() {
        return Err(format!(
            "unknown grid axis {:?}; expected x1..x{dim}, u1..u{dim}",
            extra.name
        ));
    }
    Ok(ordered)
}

fn derive_force(config: &Path, grid: &str) -> Result<ExitCode, RunError> {
    let mut cfg = load(config)?;
    // Forces live in the Newtonian form whatever the configured flow.
    cfg.flow.form = Form::Newtonian;
    let p = prepare(&cfg)?;
    let n = p.setup.chart.dim();
    let axes =
        parse_grid(grid, n).map_err(|e| RunError::new(Stage::Config, ErrorClass::Config, e))?;
    let force = p.source.force.as_ref().ok_or_else(|| {
        RunError::new(
            Stage::Force,
            ErrorClass::Config,
            "config provides no force field",
        )
    })?;

    let mut header: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    header.push("W".into());
    header.extend((1..=n).map(|k| format!("F_wavefront{k}")));
    header.extend((1..=n).map(|k| format!("F_shift{k}")));
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", header.join(",")).map_err(stdout_error)?;

    let total: usize = axes.iter().map(|a| a.values.len()).product();
    for flat in 0..total {
        let mut rem = flat;
        let mut state = vec![0.0; 2 * n];
        for (slot, axis) in state.iter_mut().zip(&axes).rev() {
            *slot = axis.values[rem % axis.values.len()];
            rem /= axis.values.len();
        }
        let st = StateU::new(state[..n].to_vec(), state[n..].to_vec());
        let numeric = |e: String| RunError {
            stage: Stage::Force,
            sample: Some(flat),
            message: e,
            class: ErrorClass::Numeric,
        };
        let speed = p
            .setup
            .chart
            .norm(&st.x, &st.u)
            .map_err(|e| numeric(e.to_string()))?;
        let w = force
            .w
            .value(&st.x, speed)
            .map_err(|e| numeric(e.to_string()))?;
        let fw =
            force_wavefront(&force.w, &p.setup.chart, &st).map_err(|e| numeric(e.to_string()))?;
        let fs = force
            .eval(&p.setup.chart, &st)
            .map_err(|e| numeric(e.to_string()))?;
        let mut row: Vec<String> = state.iter().copied().map(num).collect();
        row.push(num(w));
        row.extend(fw.iter().copied().map(num));
        row.extend(fs.iter().copied().map(num));
        writeln!(stdout, "{}", row.join(",")).map_err(stdout_error)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_axes_are_reordered_and_expanded() {
        let g = parse_grid("u2=0:0:1, x2=0:1:3, x1=-1:1:2, u1=1:2:2", 2).unwrap();
        let names: Vec<&str> = g.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["x1", "x2", "u1", "u2"]);
        assert_eq!(g[1].values, vec![0.0, 0.5, 1.0]);
        assert_eq!(g[3].values, vec![0.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(parse_grid("x1=0:1:2,u1=0:1:2", 2)
            .unwrap_err()
            .contains("missing axis x2"));
        assert!(parse_grid("x1=0:1", 1)
            .unwrap_err()
            .contains("start:end:count"));
        assert!(parse_grid("x1=0:1:0,u1=1:1:1", 1).is_err());
        assert!(parse_grid("x1=0:1:2,u1=1:1:1,y=0:0:1", 1)
            .unwrap_err()
            .contains("unknown grid axis"));
    }
}
