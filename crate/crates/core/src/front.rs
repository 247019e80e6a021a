//! Sampled hypersurfaces: construction, unit normals, eikonal initial data
//! and whole-front shifting.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{
    integrate_with_stops, FlowError, FlowRhs, Form, HamiltonRhs, ModifiedRhs, NewtonianRhs,
    StepperConfig, Trajectory,
};
use crate::forces::ForceField;
use crate::geometry::{quad_form, GeometryError, MetricChart, Point, Vector};
use crate::legendre::{LegendreError, StateP, StateU};
use crate::roots::{cauchy_bound, geometric_bracket, illinois, poly_eval, poly_real_roots};
use crate::symbol::{full_contraction, PolySymbol, SymbolError};

/// Lower bound on |ν| for regular initial data.
pub const NU_FLOOR: f64 = 1e-8;
/// Lower bound on |Ω| for regular initial data.
pub const OMEGA_FLOOR: f64 = 1e-10;
/// Minimum alignment with the orientation reference.
pub const ORIENT_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("invalid parameter grid: {0}")]
    Grid(String),
    #[error("singular parametrization at sample {sample}")]
    SingularParametrization { sample: usize },
    #[error("orientation ambiguous: normal orthogonal to the orientation reference (alignment {alignment:e}) at sample {sample}")]
    OrientationAmbiguous { sample: usize, alignment: f64 },
    #[error("no admissible ν at sample {sample}")]
    NoAdmissibleNu { sample: usize },
    #[error("irregular boundary data at sample {sample}: {condition} (value {value:e})")]
    IrregularBoundary {
        sample: usize,
        condition: Regularity,
        value: f64,
    },
    #[error("no initial speed with W = 0 along the normal at sample {sample}")]
    NoInitialSpeed { sample: usize },
    #[error("missing dynamics source: {0}")]
    MissingSource(&'static str),
    #[error("{} of {} samples failed; first: sample {}: {}", .failures.len(), .partial.len(), .failures[0].0, .failures[0].1)]
    Shift {
        failures: Vec<(usize, FrontError)>,
        partial: Vec<Option<Trajectory>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    /// ν ≠ 0
    NuFloor,
    /// Ω ≠ 0, transversality
    OmegaFloor,
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::NuFloor => write!(f, "|nu| below floor {NU_FLOOR:e}"),
            Regularity::OmegaFloor => {
                write!(f, "|Omega| below floor {OMEGA_FLOOR:e} (transversality)")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    /// Periodic axes exclude the endpoint and wrap around.
    #[serde(default)]
    pub periodic: bool,
}

impl ParamAxis {
    pub fn closed(start: f64, end: f64, samples: usize) -> Self {
        Self {
            start,
            end,
            samples,
            periodic: false,
        }
    }

    pub fn periodic(start: f64, end: f64, samples: usize) -> Self {
        Self {
            start,
            end,
            samples,
            periodic: true,
        }
    }

    pub fn spacing(&self) -> f64 {
        let intervals = if self.periodic {
            self.samples
        } else {
            self.samples - 1
        };
        (self.end - self.start) / intervals as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if !self.periodic && i + 1 == self.samples {
            self.end
        } else {
            self.start + i as f64 * self.spacing()
        }
    }
}

/// Rectangular lattice, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub axes: Vec<ParamAxis>,
}

impl ParamGrid {
    pub fn new(axes: Vec<ParamAxis>) -> Result<Self, FrontError> {
        if axes.is_empty() {
            return Err(FrontError::Grid("at least one axis required".into()));
        }
        for a in &axes {
            let min = if a.periodic { 3 } else { 2 };
            if a.samples < min {
                return Err(FrontError::Grid(format!(
                    "axis needs at least {min} samples"
                )));
            }
            if !(a.end - a.start).is_finite() || a.end == a.start {
                return Err(FrontError::Grid(
                    "axis range must be finite and non-empty".into(),
                ));
            }
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.samples).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            idx[a] = flat % axis.samples;
            flat /= axis.samples;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (i, a)| acc * a.samples + i)
    }

    pub fn params(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(i, a)| a.value(*i))
            .collect()
    }

    /// Lattice neighbours of a sample, used for orientation propagation.
    fn neighbours(&self, flat: usize) -> Vec<usize> {
        let idx = self.multi_index(flat);
        let mut out = Vec::new();
        for (a, axis) in self.axes.iter().enumerate() {
            for step in [-1i64, 1] {
                let j = idx[a] as i64 + step;
                let j = if axis.periodic {
                    j.rem_euclid(axis.samples as i64)
                } else if j < 0 || j >= axis.samples as i64 {
                    continue;
                } else {
                    j
                };
                let mut nb = idx.clone();
                nb[a] = j as usize;
                out.push(self.flat_index(&nb));
            }
        }
        out
    }
}

pub type EmbedFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A sampled parametric hypersurface.
#[derive(Clone)]
pub struct FrontMesh {
    pub grid: ParamGrid,
    pub embed: Option<EmbedFn>,
    /// Chart-coordinate jump across the seam of each periodic axis, e.g.
    /// 2π in the longitude of a latitude circle.
    pub seam: Vec<Vec<f64>>,
    pub points: Vec<Point>,
    pub normals: Vec<Vector>,
    pub nu: Vec<f64>,
    pub phase: Vec<f64>,
}

impl fmt::Debug for FrontMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrontMesh")
            .field("grid", &self.grid)
            .field("samples", &self.points.len())
            .finish()
    }
}

impl FrontMesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Discrete tangents ∂x/∂param_a at every sample: second-order central
    /// differences, one-sided second-order stencils at open boundaries.
    pub fn tangents(&self) -> Vec<Vec<Vec<f64>>> {
        lattice_tangents(&self.grid, &self.seam, &self.points)
    }
}

fn lattice_tangents(grid: &ParamGrid, seam: &[Vec<f64>], points: &[Point]) -> Vec<Vec<Vec<f64>>> {
    let n = points.first().map(|p| p.len()).unwrap_or(0);
    (0..points.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            grid.axes
                .iter()
                .enumerate()
                .map(|(a, axis)| {
                    let h = axis.spacing();
                    let m = axis.samples;
                    let i = idx[a];
                    let at = |j: i64| -> Vec<f64> {
                        let mut k = idx.clone();
                        let wrapped = j.rem_euclid(m as i64) as usize;
                        k[a] = wrapped;
                        let mut p = points[grid.flat_index(&k)].0.clone();
                        let laps = j.div_euclid(m as i64) as f64;
                        if laps != 0.0 {
                            for (c, s) in p.iter_mut().zip(&seam[a]) {
                                *c += laps * s;
                            }
                        }
                        p
                    };
                    let i = i as i64;
                    let comb = |terms: &[(i64, f64)], denom: f64| -> Vec<f64> {
                        let mut out = vec![0.0; n];
                        for &(j, w) in terms {
                            for (o, c) in out.iter_mut().zip(at(j)) {
                                *o += w * c;
                            }
                        }
                        out.into_iter().map(|v| v / denom).collect()
                    };
                    if axis.periodic || (i > 0 && i + 1 < m as i64) {
                        comb(&[(i + 1, 1.0), (i - 1, -1.0)], 2.0 * h)
                    } else if m == 2 {
                        comb(&[(1, 1.0), (0, -1.0)], h)
                    } else if i == 0 {
                        comb(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0 * h)
                    } else {
                        comb(&[(i, 3.0), (i - 1, -4.0), (i - 2, 1.0)], 2.0 * h)
                    }
                })
                .collect()
        })
        .collect()
}

/// Unit vector g-orthogonal to all `tangents`, up to sign.
fn normal_from_tangents(
    chart: &MetricChart,
    x: &[f64],
    tangents: &[Vec<f64>],
    sample: usize,
) -> Result<Vec<f64>, FrontError> {
    let g = chart.metric_at(x)?;
    let n = x.len();
    if tangents.len() + 1 != n {
        return Err(FrontError::Grid(format!(
            "a hypersurface in dimension {n} needs {} parameters, got {}",
            n - 1,
            tangents.len()
        )));
    }
    let ip = |a: &[f64], b: &[f64]| quad_form(&g, a, b);
    let project_out = |w: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = ip(w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for t in tangents {
        let scale = ip(t, t).sqrt();
        let mut w = t.clone();
        project_out(&mut w, &basis);
        let norm = ip(&w, &w).sqrt();
        if !(norm > 1e-10 * scale) {
            return Err(FrontError::SingularParametrization { sample });
        }
        basis.push(w.into_iter().map(|v| v / norm).collect());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut w = vec![0.0; n];
        w[k] = 1.0 / g[(k, k)].sqrt();
        project_out(&mut w, &basis);
        let norm = ip(&w, &w).sqrt();
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, w));
        }
    }
    let (norm, w) = best.expect("dimension at least one");
    if !(norm > 1e-8) {
        return Err(FrontError::SingularParametrization { sample });
    }
    Ok(w.into_iter().map(|v| v / norm).collect())
}

fn raw_normals(
    chart: &MetricChart,
    grid: &ParamGrid,
    seam: &[Vec<f64>],
    points: &[Point],
) -> Result<Vec<Vec<f64>>, FrontError> {
    let tangents = lattice_tangents(grid, seam, points);
    points
        .iter()
        .zip(&tangents)
        .enumerate()
        .map(|(i, (p, t))| normal_from_tangents(chart, p, t, i))
        .collect()
}

/// Orients normals consistently: the sample best aligned with `seed` is
/// made positive, then signs propagate across lattice neighbours.
fn orient_from_seed(
    chart: &MetricChart,
    grid: &ParamGrid,
    points: &[Point],
    normals: &mut [Vec<f64>],
    seed: &[f64],
) -> Result<(), FrontError> {
    let mut anchor = (0, 0.0_f64);
    for (i, (p, nrm)) in points.iter().zip(normals.iter()).enumerate() {
        let s = chart.norm(p, seed)?;
        let a = if s > 0.0 {
            chart.inner(p, nrm, seed)? / s
        } else {
            0.0
        };
        if a.abs() > anchor.1.abs() {
            anchor = (i, a);
        }
    }
    if !(anchor.1.abs() >= ORIENT_FLOOR) {
        return Err(FrontError::OrientationAmbiguous {
            sample: anchor.0,
            alignment: anchor.1,
        });
    }
    if anchor.1 < 0.0 {
        normals[anchor.0].iter_mut().for_each(|v| *v = -*v);
    }
    let mut done = vec![false; points.len()];
    done[anchor.0] = true;
    let mut queue = VecDeque::from([anchor.0]);
    while let Some(i) = queue.pop_front() {
        for j in grid.neighbours(i) {
            if done[j] {
                continue;
            }
            let a = chart.inner(&points[j], &normals[j], &normals[i])?;
            if a.abs() < ORIENT_FLOOR {
                return Err(FrontError::OrientationAmbiguous {
                    sample: j,
                    alignment: a,
                });
            }
            if a < 0.0 {
                normals[j].iter_mut().for_each(|v| *v = -*v);
            }
            done[j] = true;
            queue.push_back(j);
        }
    }
    Ok(())
}

/// Samples `embed` on `grid` and computes oriented unit normals.
pub fn build_front(
    chart: &MetricChart,
    embed: EmbedFn,
    grid: ParamGrid,
    orient_seed: &[f64],
) -> Result<FrontMesh, FrontError> {
    let mut points = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = embed(&grid.params(i));
        chart.check_point(&x)?;
        points.push(Point(x));
    }
    let seam: Vec<Vec<f64>> = grid
        .axes
        .iter()
        .enumerate()
        .map(|(a, axis)| {
            if !axis.periodic {
                return vec![0.0; chart.dim()];
            }
            let mut q = grid.params(0);
            let base = embed(&q);
            q[a] += axis.end - axis.start;
            embed(&q).iter().zip(&base).map(|(x, y)| x - y).collect()
        })
        .collect();
    if orient_seed.len() != chart.dim() {
        return Err(GeometryError::Shape {
            expected: chart.dim(),
            got: orient_seed.len(),
        }
        .into());
    }
    let mut normals = raw_normals(chart, &grid, &seam, &points)?;
    orient_from_seed(chart, &grid, &points, &mut normals, orient_seed)?;
    let n = points.len();
    Ok(FrontMesh {
        grid,
        embed: Some(embed),
        seam,
        points,
        normals: normals.into_iter().map(Vector).collect(),
        nu: vec![0.0; n],
        phase: vec![0.0; n],
    })
}

/// Which root of H(x, ν n) = 0 to take.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "lowercase")]
pub enum Branch {
    /// Smallest positive root.
    Positive,
    /// Negative root closest to zero.
    Negative,
    /// Root closest to `guess`.
    Nearest { guess: f64 },
}

/// Coefficients of ν ↦ H(x, ν n) as a polynomial.
pub fn nu_polynomial(sym: &PolySymbol, x: &[f64], n_low: &[f64]) -> Result<Vec<f64>, FrontError> {
    let coeffs = sym.coefficients_at(x)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(r, a)| full_contraction(a, sym.dim(), r, n_low))
        .collect())
}

/// ν at a single sample.
pub fn solve_nu_at(
    sym: &PolySymbol,
    chart: &MetricChart,
    x: &[f64],
    normal: &[f64],
    branch: Branch,
    sample: usize,
) -> Result<f64, FrontError> {
    let n_low = chart.lower(x, normal)?;
    let c = nu_polynomial(sym, x, &n_low)?;
    let bound = cauchy_bound(&c);
    let roots: Vec<f64> = poly_real_roots(&c, -bound, bound)
        .into_iter()
        .map(|r| polish(&c, r))
        .collect();
    let pick = match branch {
        Branch::Positive => roots.iter().copied().filter(|r| *r > 0.0).reduce(f64::min),
        Branch::Negative => roots.iter().copied().filter(|r| *r < 0.0).reduce(f64::max),
        Branch::Nearest { guess } => roots
            .iter()
            .copied()
            .min_by(|a, b| (a - guess).abs().partial_cmp(&(b - guess).abs()).unwrap()),
    };
    let nu = pick.ok_or(FrontError::NoAdmissibleNu { sample })?;
    if nu.abs() < NU_FLOOR {
        return Err(FrontError::IrregularBoundary {
            sample,
            condition: Regularity::NuFloor,
            value: nu,
        });
    }
    let p = n_low.scaled(nu);
    let omega = sym.omega(x, &p)?;
    if !(omega.abs() >= OMEGA_FLOOR) {
        return Err(FrontError::IrregularBoundary {
            sample,
            condition: Regularity::OmegaFloor,
            value: omega,
        });
    }
    Ok(nu)
}

/// Newton polish of a bracketed polynomial root; keeps the input if a
/// step would increase the residual.
fn polish(c: &[f64], mut r: f64) -> f64 {
    let d: Vec<f64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| k as f64 * a)
        .collect();
    for _ in 0..3 {
        let f = poly_eval(c, r);
        let df = poly_eval(&d, r);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = r - f / df;
        if poly_eval(c, next).abs() < f.abs() {
            r = next;
        } else {
            break;
        }
    }
    r
}

/// Fills `mesh.nu` from H(x, ν·n) = 0 at every sample.
pub fn solve_nu(
    sym: &PolySymbol,
    chart: &MetricChart,
    mesh: &FrontMesh,
    branch: Branch,
) -> Result<FrontMesh, FrontError> {
    let mut out = mesh.clone();
    for (i, (x, n)) in mesh.points.iter().zip(&mesh.normals).enumerate() {
        out.nu[i] = solve_nu_at(sym, chart, x, n, branch, i)?;
    }
    Ok(out)
}

/// Sequential or data-parallel fan-out over samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

pub(crate) fn map_samples<T, F>(count: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// What drives the shift: a symbol for the momentum forms, a force field
/// for the Newtonian form (optionally with a symbol for initial speeds).
#[derive(Clone, Debug, Default)]
pub struct ShiftSource {
    pub symbol: Option<PolySymbol>,
    pub force: Option<ForceField>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDiagnostics {
    pub t: f64,
    pub phase_spread: f64,
    pub normality_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct ShiftResult {
    pub form: Form,
    pub fronts: Vec<(f64, FrontMesh)>,
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
}

/// Positive u with W(x, u) = 0, scanning up from small speeds.
pub fn shell_speed(force: &ForceField, x: &[f64], sample: usize) -> Result<f64, FrontError> {
    let f = |u: f64| force.w.value(x, u).unwrap_or(f64::NAN);
    geometric_bracket(f, 1e-6, 1.5, 120)
        .and_then(|(a, b)| illinois(f, a, b, 1e-15))
        .ok_or(FrontError::NoInitialSpeed { sample })
}

/// Velocity of the packed state `[x, m, s]` for the given form.
fn velocity_of(
    source: &ShiftSource,
    form: Form,
    y: &[f64],
    n: usize,
) -> Result<Vec<f64>, FrontError> {
    match form {
        Form::Newtonian => Ok(y[n..2 * n].to_vec()),
        _ => {
            let sym = source
                .symbol
                .as_ref()
                .ok_or(FrontError::MissingSource("symbol"))?;
            Ok(sym.grad_p(&y[..n], &y[n..2 * n])?.0)
        }
    }
}

/// Integrates every sample of `mesh` and assembles the shifted fronts at
/// t = 0 and each snapshot time.
pub fn shift_front(
    source: &ShiftSource,
    chart: &MetricChart,
    mesh: &FrontMesh,
    form: Form,
    cfg: &StepperConfig,
    snapshot_times: &[f64],
    exec: Exec,
) -> Result<ShiftResult, FrontError> {
    let n = chart.dim();
    let mut times: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > 0.0)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut cfg = *cfg;
    if let Some(&last) = times.last() {
        cfg.t_end = cfg.t_end.max(last);
    }

    // The modified form builds its rhs per sample: the Ω floor depends on
    // the initial state.
    let rhs: Option<Box<dyn FlowRhs>> = match form {
        Form::Hamilton => Some(Box::new(HamiltonRhs {
            sym: source
                .symbol
                .clone()
                .ok_or(FrontError::MissingSource("symbol"))?,
            chart: chart.clone(),
        })),
        Form::Modified => {
            source
                .symbol
                .as_ref()
                .ok_or(FrontError::MissingSource("symbol"))?;
            None
        }
        Form::Newtonian => Some(Box::new(NewtonianRhs {
            force: source
                .force
                .clone()
                .ok_or(FrontError::MissingSource("force field"))?,
            chart: chart.clone(),
        })),
    };

    let run_sample = |i: usize| -> Result<(Trajectory, Vec<Vec<f64>>), FrontError> {
        let x = &mesh.points[i];
        let normal = &mesh.normals[i];
        let s = mesh.phase[i];
        match form {
            Form::Hamilton | Form::Modified => {
                let sym = source.symbol.as_ref().expect("checked above");
                let p = chart.lower(x, normal)?.scaled(mesh.nu[i]);
                let st = StateP { x: x.clone(), p, s };
                let out = if form == Form::Modified {
                    let local = ModifiedRhs::new(sym.clone(), chart.clone(), &st)?;
                    integrate_with_stops(&local, st, &cfg, &times)?
                } else {
                    integrate_with_stops(rhs.as_deref().expect("hamilton rhs"), st, &cfg, &times)?
                };
                Ok(out)
            }
            Form::Newtonian => {
                let u = match &source.symbol {
                    Some(sym) => {
                        let p = chart.lower(x, normal)?.scaled(mesh.nu[i]);
                        let v = sym.grad_p(x, &p)?;
                        let omega = sym.omega(x, &p)?;
                        if !(omega.abs() >= OMEGA_FLOOR) {
                            return Err(FrontError::IrregularBoundary {
                                sample: i,
                                condition: Regularity::OmegaFloor,
                                value: omega,
                            });
                        }
                        v.scaled(1.0 / omega)
                    }
                    None => {
                        let force = source.force.as_ref().expect("checked above");
                        normal.scaled(shell_speed(force, x, i)?)
                    }
                };
                let st = StateU { x: x.clone(), u, s };
                Ok(integrate_with_stops(
                    rhs.as_deref().expect("newtonian rhs"),
                    st,
                    &cfg,
                    &times,
                )?)
            }
        }
    };

    let results = map_samples(mesh.len(), exec, run_sample);
    let mut failures = Vec::new();
    let mut partial = Vec::with_capacity(results.len());
    let mut states: Vec<Vec<Vec<f64>>> = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((traj, at)) => {
                partial.push(Some(traj));
                states.push(at);
            }
            Err(e) => {
                failures.push((i, e));
                partial.push(None);
                states.push(Vec::new());
            }
        }
    }
    if !failures.is_empty() {
        return Err(FrontError::Shift { failures, partial });
    }
    let trajectories: Vec<Trajectory> = partial
        .into_iter()
        .map(|t| t.expect("no failures"))
        .collect();

    let initial_velocities = (0..mesh.len())
        .map(|i| {
            let mut y = mesh.points[i].0.clone();
            match form {
                Form::Newtonian => y.extend(trajectories[i].samples[0].m.iter()),
                _ => y.extend(
                    chart
                        .lower(&mesh.points[i], &mesh.normals[i])?
                        .scaled(mesh.nu[i])
                        .0,
                ),
            }
            velocity_of(source, form, &y, n)
        })
        .collect::<Result<Vec<_>, FrontError>>()?;
    let mut fronts = vec![(0.0, mesh.clone())];
    let mut diagnostics = vec![SnapshotDiagnostics {
        t: 0.0,
        phase_spread: phase_spread(mesh),
        normality_deviation: normality_deviation(chart, mesh, &initial_velocities)?,
    }];

    for (k, &t) in times.iter().enumerate() {
        let prev = &fronts.last().expect("initial front").1;
        let ys: Vec<&Vec<f64>> = states.iter().map(|s| &s[k]).collect();
        let points: Vec<Point> = ys.iter().map(|y| Point(y[..n].to_vec())).collect();
        let mut normals = raw_normals(chart, &mesh.grid, &mesh.seam, &points)?;
        for (i, nrm) in normals.iter_mut().enumerate() {
            let a = chart.inner(&points[i], nrm, &prev.normals[i])?;
            if a.abs() < ORIENT_FLOOR {
                return Err(FrontError::OrientationAmbiguous {
                    sample: i,
                    alignment: a,
                });
            }
            if a < 0.0 {
                nrm.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let nu: Vec<f64> = match form {
            Form::Newtonian => mesh.nu.clone(),
            _ => ys
                .iter()
                .zip(&normals)
                .map(|(y, nrm)| y[n..2 * n].iter().zip(nrm).map(|(p, v)| p * v).sum())
                .collect(),
        };
        let front = FrontMesh {
            grid: mesh.grid.clone(),
            embed: None,
            seam: mesh.seam.clone(),
            points,
            normals: normals.into_iter().map(Vector).collect(),
            nu,
            phase: ys.iter().map(|y| y[2 * n]).collect(),
        };
        let velocities = ys
            .iter()
            .map(|y| velocity_of(source, form, y, n))
            .collect::<Result<Vec<_>, FrontError>>()?;
        diagnostics.push(SnapshotDiagnostics {
            t,
            phase_spread: phase_spread(&front),
            normality_deviation: normality_deviation(chart, &front, &velocities)?,
        });
        fronts.push((t, front));
    }
    Ok(ShiftResult {
        form,
        fronts,
        trajectories,
        diagnostics,
    })
}

/// Worst cosine between a sample velocity and the front's discrete
/// tangent directions.
pub fn normality_deviation(
    chart: &MetricChart,
    front: &FrontMesh,
    velocities: &[Vec<f64>],
) -> Result<f64, FrontError> {
    let tangents = front.tangents();
    let mut worst = 0.0_f64;
    for (i, (x, ts)) in front.points.iter().zip(&tangents).enumerate() {
        let u = &velocities[i];
        let un = chart.norm(x, u)?;
        for t in ts {
            let tn = chart.norm(x, t)?;
            if !(tn > 0.0) {
                return Err(FrontError::SingularParametrization { sample: i });
            }
            if un == 0.0 {
                continue;
            }
            worst = worst.max((chart.inner(x, u, t)? / (un * tn)).abs());
        }
    }
    Ok(worst)
}

/// max(phase) − min(phase).
pub fn phase_spread(front: &FrontMesh) -> f64 {
    let hi = front.phase.iter().copied().fold(f64::MIN, f64::max);
    let lo = front.phase.iter().copied().fold(f64::MAX, f64::min);
    if front.phase.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Circle of `radius` about `center` in the first two coordinates.
pub fn circle_embedding(center: [f64; 2], radius: f64) -> EmbedFn {
    Arc::new(move |q: &[f64]| {
        vec![
            center[0] + radius * q[0].cos(),
            center[1] + radius * q[0].sin(),
        ]
    })
}

/// `origin + Σ q_a directions[a]`.
pub fn plane_embedding(origin: Vec<f64>, directions: Vec<Vec<f64>>) -> EmbedFn {
    Arc::new(move |q: &[f64]| {
        let mut x = origin.clone();
        for (qa, d) in q.iter().zip(&directions) {
            for (xi, di) in x.iter_mut().zip(d) {
                *xi += qa * di;
            }
        }
        x
    })
}

/// Latitude circle θ = `theta` on the sphere chart, parametrized by φ.
pub fn latitude_embedding(theta: f64) -> EmbedFn {
    Arc::new(move |q: &[f64]| vec![theta, q[0]])
}
