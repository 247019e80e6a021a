//! End-to-end simulation driven by a validated config.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, DynamicsSource, Setup, SimConfig};
use crate::flow::{conservation_report, Form};
use crate::forces::ForceField;
use crate::front::{
    build_front, shell_speed, shift_front, solve_nu, Exec, FrontError, FrontMesh, ShiftResult,
    ShiftSource,
};
use crate::legendre::{build_w, spherical_from_symbol, LegendreError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Front,
    SolveNu,
    Force,
    Shift,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Front => "front",
            Stage::SolveNu => "solve_nu",
            Stage::Force => "force",
            Stage::Shift => "shift",
            Stage::Export => "export",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Config,
    Numeric,
    Io,
}

impl ErrorClass {
    /// Process exit status for this class.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Numeric => 2,
            ErrorClass::Io => 3,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{stage}{}: {message}", .sample.map(|s| format!(" (sample {s})")).unwrap_or_default())]
pub struct RunError {
    pub stage: Stage,
    pub sample: Option<usize>,
    pub message: String,
    pub class: ErrorClass,
}

impl RunError {
    pub fn new(stage: Stage, class: ErrorClass, message: impl Into<String>) -> Self {
        Self {
            stage,
            sample: None,
            message: message.into(),
            class,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }

    fn config(e: ConfigError) -> Self {
        Self::new(Stage::Config, ErrorClass::Config, e.to_string())
    }

    fn front(stage: Stage, e: FrontError) -> Self {
        let sample = match &e {
            FrontError::SingularParametrization { sample }
            | FrontError::OrientationAmbiguous { sample, .. }
            | FrontError::NoAdmissibleNu { sample }
            | FrontError::IrregularBoundary { sample, .. }
            | FrontError::NoInitialSpeed { sample } => Some(*sample),
            FrontError::Shift { failures, .. } => failures.first().map(|f| f.0),
            _ => None,
        };
        let class = match e {
            FrontError::Grid(_) | FrontError::MissingSource(_) => ErrorClass::Config,
            _ => ErrorClass::Numeric,
        };
        Self {
            stage,
            sample,
            message: e.to_string(),
            class,
        }
    }

    fn legendre(e: LegendreError) -> Self {
        Self::new(Stage::Force, ErrorClass::Numeric, e.to_string())
    }
}

/// Worst conservation figures over all trajectories; `None` where the
/// quantity is not monitored by the form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConservationSummary {
    pub h_drift: Option<f64>,
    pub w_drift: Option<f64>,
    pub min_abs_omega: Option<f64>,
}

/// Front with initial data plus whatever drives the shift.
pub struct Prepared {
    pub setup: Setup,
    pub mesh: FrontMesh,
    pub source: ShiftSource,
    /// ε of the W field, when one is in play.
    pub epsilon: Option<f64>,
}

pub struct RunOutput {
    pub config: SimConfig,
    pub prepared: Prepared,
    pub result: ShiftResult,
    pub conservation: ConservationSummary,
}

/// Builds the front, solves for ν and assembles the shift source.
pub fn prepare(cfg: &SimConfig) -> Result<Prepared, RunError> {
    cfg.validate().map_err(RunError::config)?;
    let setup = cfg.build().map_err(RunError::config)?;
    let chart = &setup.chart;
    let mut mesh = build_front(
        chart,
        setup.embed.clone(),
        setup.grid.clone(),
        &cfg.front.orient_seed,
    )
    .map_err(|e| RunError::front(Stage::Front, e))?;
    mesh.phase.iter_mut().for_each(|s| *s = cfg.front.s0);

    let newtonian = cfg.flow.form == Form::Newtonian;
    let (mesh, source, epsilon) = match &setup.source {
        DynamicsSource::Symbol(sym) => {
            let mesh = solve_nu(sym, chart, &mesh, cfg.front.branch)
                .map_err(|e| RunError::front(Stage::SolveNu, e))?;
            let (force, eps) = if newtonian {
                let lag = spherical_from_symbol(sym, chart).map_err(RunError::legendre)?;
                let x0 = &mesh.points[0];
                let p0 = chart
                    .lower(x0, &mesh.normals[0])
                    .map_err(|e| RunError::new(Stage::Force, ErrorClass::Numeric, e.to_string()))?
                    .scaled(mesh.nu[0]);
                let v0 = sym
                    .grad_p(x0, &p0)
                    .and_then(|v| Ok(chart.norm(x0, &v)?))
                    .map_err(|e| RunError::new(Stage::Force, ErrorClass::Numeric, e.to_string()))?;
                let w = build_w(&lag, x0, v0).map_err(RunError::legendre)?;
                let eps = w.epsilon();
                (Some(ForceField::new(w, setup.h.clone())), Some(eps))
            } else {
                (None, None)
            };
            (
                mesh,
                ShiftSource {
                    symbol: Some(sym.clone()),
                    force,
                },
                eps,
            )
        }
        DynamicsSource::Lagrangian(lag) => {
            let w = build_w(lag, &mesh.points[0], 1.0).map_err(RunError::legendre)?;
            force_only(mesh, ForceField::new(w, setup.h.clone()))?
        }
        DynamicsSource::W(w) => force_only(mesh, ForceField::new(w.clone(), setup.h.clone()))?,
    };
    Ok(Prepared {
        setup,
        mesh,
        source,
        epsilon,
    })
}

/// ν = ε/u₀ with u₀ the speed on the W = 0 shell, so that |p| = L′ = ε/u.
fn force_only(
    mut mesh: FrontMesh,
    force: ForceField,
) -> Result<(FrontMesh, ShiftSource, Option<f64>), RunError> {
    let eps = force.w.epsilon();
    for i in 0..mesh.len() {
        let u0 = shell_speed(&force, &mesh.points[i], i)
            .map_err(|e| RunError::front(Stage::SolveNu, e))?;
        mesh.nu[i] = eps / u0;
    }
    Ok((
        mesh,
        ShiftSource {
            symbol: None,
            force: Some(force),
        },
        Some(eps),
    ))
}

pub fn run(cfg: &SimConfig) -> Result<RunOutput, RunError> {
    run_with(cfg, cfg.flow.exec)
}

/// As [`run`] with the execution mode overridden.
pub fn run_with(cfg: &SimConfig, exec: Exec) -> Result<RunOutput, RunError> {
    let prepared = prepare(cfg)?;
    let mut stepper = prepared.setup.stepper;
    stepper.record_every = cfg.flow.record_every;
    let result = shift_front(
        &prepared.source,
        &prepared.setup.chart,
        &prepared.mesh,
        cfg.flow.form,
        &stepper,
        &cfg.flow.snapshot_times,
        exec,
    )
    .map_err(|e| RunError::front(Stage::Shift, e))?;
    let conservation = summarize(&result);
    Ok(RunOutput {
        config: cfg.clone(),
        prepared,
        result,
        conservation,
    })
}

pub fn summarize(result: &ShiftResult) -> ConservationSummary {
    let max = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, None) => a,
        (None, b) => b,
    };
    let mut out = ConservationSummary::default();
    for t in &result.trajectories {
        let r = conservation_report(t);
        out.h_drift = max(out.h_drift, r.h_drift);
        out.w_drift = max(out.w_drift, r.w_drift);
        out.min_abs_omega = match (out.min_abs_omega, r.min_abs_omega) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(form: &str, source: serde_json::Value) -> SimConfig {
        let mut v = serde_json::json!({
            "dim": 2,
            "chart": {"family": "euclidean"},
            "front": {
                "embedding": {"kind": "circle", "center": [0.0, 0.0], "radius": 1.0},
                "grid": [{"start": 0.0, "end": std::f64::consts::TAU, "samples": 16, "periodic": true}],
                "orient_seed": [1.0, 0.0]
            },
            "flow": {"form": form, "stepper": {"method": "rk4", "dt": 0.01}, "t_end": 0.5,
                     "snapshot_times": [0.5]}
        });
        let obj = v.as_object_mut().unwrap();
        for (k, val) in source.as_object().unwrap() {
            obj.insert(k.clone(), val.clone());
        }
        SimConfig::from_json(&v.to_string()).unwrap()
    }

    #[test]
    fn modified_circle_grows_at_unit_speed() {
        let cfg = circle(
            "modified",
            serde_json::json!({"symbol": {"kind": "eikonal", "index": "1"}}),
        );
        let out = run(&cfg).unwrap();
        let (t, f) = out.result.fronts.last().unwrap();
        assert_eq!(*t, 0.5);
        for p in &f.points {
            assert!((p.0[0].hypot(p.0[1]) - 1.5).abs() < 1e-12);
        }
        assert!(out.conservation.h_drift.unwrap() < 1e-12);
    }

    #[test]
    fn w_source_gives_unit_nu_on_the_shell() {
        let cfg = circle("newtonian", serde_json::json!({"w": {"W": "1/u^2 - 1"}}));
        let p = prepare(&cfg).unwrap();
        for nu in &p.mesh.nu {
            assert!((nu - 1.0).abs() < 1e-12);
        }
        let out = run(&cfg).unwrap();
        let (_, f) = out.result.fronts.last().unwrap();
        for p in &f.points {
            assert!((p.0[0].hypot(p.0[1]) - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn symbol_drives_newtonian_form() {
        let cfg = circle(
            "newtonian",
            serde_json::json!({"symbol": {"kind": "eikonal", "index": "1"}}),
        );
        let out = run(&cfg).unwrap();
        assert!(out.prepared.epsilon.is_some());
        let (_, f) = out.result.fronts.last().unwrap();
        for p in &f.points {
            assert!((p.0[0].hypot(p.0[1]) - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn errors_carry_stage_and_class() {
        let mut cfg = circle(
            "modified",
            serde_json::json!({"symbol": {"kind": "eikonal", "index": "1"}}),
        );
        cfg.front.orient_seed = vec![0.0, 0.0];
        let Err(err) = run(&cfg) else {
            panic!("expected failure")
        };
        assert_eq!(err.stage, Stage::Front);
        assert_eq!(err.exit_code(), 2);
        assert!(err.sample.is_some());
        assert!(err.to_string().starts_with("front (sample"));
    }
}
