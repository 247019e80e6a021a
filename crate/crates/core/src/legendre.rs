//! Legendre maps between momentum and velocity representations,
//! spherically symmetric Lagrangians, and the first-integral field W.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{
    central_diff, central_gradient, fd_step, richardson_diff, ScalarField, FD_REL_STEP,
};
use crate::geometry::{dot, Covector, GeometryError, MetricChart, Point, Vector};
use crate::roots::{bracket_increasing, geometric_bracket, illinois};
use crate::symbol::{PolySymbol, SymbolError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LegendreError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Legendre map not invertible here (singular momentum Hessian at x = {x:?})")]
    NotInvertible { x: Vec<f64> },
    #[error(
        "Legendre inversion did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("symbol not fiberwise spherically symmetric (directional spread {spread:e})")]
    Anisotropic { spread: f64 },
    #[error("velocity out of range for requested u = {u}")]
    VelocityOutOfRange { u: f64 },
    #[error("degenerate Lagrangian: {0}")]
    Degenerate(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateP {
    pub x: Point,
    pub p: Covector,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateV {
    pub x: Point,
    pub v: Vector,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateU {
    pub x: Point,
    pub u: Vector,
    pub s: f64,
}

impl StateP {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        Self {
            x: Point(x),
            p: Covector(p),
            s: 0.0,
        }
    }
}

impl StateV {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self {
            x: Point(x),
            v: Vector(v),
            s: 0.0,
        }
    }
}

impl StateU {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Self {
        Self {
            x: Point(x),
            u: Vector(u),
            s: 0.0,
        }
    }
}

/// Inverse Legendre map: v = ∂H/∂p.
pub fn to_velocity(sym: &PolySymbol, st: &StateP) -> Result<StateV, LegendreError> {
    Ok(StateV {
        x: st.x.clone(),
        v: sym.grad_p(&st.x, &st.p)?,
        s: st.s,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rel_tol: 1e-12,
        }
    }
}

/// Direct Legendre map: solves ∂H/∂p = v for p by damped Newton
/// iteration from `guess`.
pub fn to_momentum(
    sym: &PolySymbol,
    st: &StateV,
    guess: &Covector,
) -> Result<StateP, LegendreError> {
    to_momentum_with(sym, st, guess, NewtonOptions::default()).map(|(s, _)| s)
}

/// As [`to_momentum`], also returning the number of Newton steps taken.
pub fn to_momentum_with(
    sym: &PolySymbol,
    st: &StateV,
    guess: &Covector,
    opts: NewtonOptions,
) -> Result<(StateP, usize), LegendreError> {
    let x = &st.x;
    let v = &st.v;
    let n = sym.dim();
    let vmax = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let tol = opts.rel_tol * (1.0 + vmax);
    let residual = |p: &[f64]| -> Result<(Vec<f64>, f64, Vec<f64>), LegendreError> {
        let jet = sym.jet(x, p)?;
        let r: Vec<f64> = jet
            .grad_p
            .iter()
            .zip(v.iter())
            .map(|(a, b)| a - b)
            .collect();
        let norm = r.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        Ok((r, norm, jet.hess_p))
    };
    let mut p = guess.0.clone();
    let (mut r, mut rnorm, mut hess) = residual(&p)?;
    for iter in 0..=opts.max_iter {
        if !rnorm.is_finite() {
            return Err(LegendreError::NonFinite("Legendre residual"));
        }
        if rnorm <= tol {
            return Ok((
                StateP {
                    x: x.clone(),
                    p: Covector(p),
                    s: st.s,
                },
                iter,
            ));
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = DMatrix::from_row_slice(n, n, &hess);
        let scale = jac.amax();
        let lu = jac.lu();
        let det = lu.determinant();
        if scale == 0.0 || det.abs() <= 1e-13 * scale.powi(n as i32) {
            return Err(LegendreError::NotInvertible { x: x.0.clone() });
        }
        let step = lu
            .solve(&DVector::from_vec(r.iter().map(|a| -a).collect()))
            .ok_or_else(|| LegendreError::NotInvertible { x: x.0.clone() })?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = p
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + damping * d)
                .collect();
            let (tr, tn, th) = residual(&trial)?;
            if tn < rnorm || damping < 1e-6 {
                p = trial;
                r = tr;
                rnorm = tn;
                hess = th;
                break;
            }
            damping *= 0.5;
        }
    }
    Err(LegendreError::NoConvergence {
        iterations: opts.max_iter,
        residual: rnorm,
    })
}

/// Starting covector for [`to_momentum`]: `t d` with `d` the unit covector
/// dual to `v`, and `t` solving ⟨d, ∂H/∂p(t d)⟩ = |v|. Exact for
/// metric-isotropic symbols.
pub fn radial_guess(
    sym: &PolySymbol,
    chart: &MetricChart,
    x: &[f64],
    v: &[f64],
) -> Result<Covector, LegendreError> {
    let speed = chart.norm(x, v)?;
    if speed == 0.0 {
        return Ok(Covector::zeros(v.len()));
    }
    let d = chart.lower(x, v)?.scaled(1.0 / speed);
    let f = |t: f64| -> f64 {
        let p = d.scaled(t);
        match sym.grad_p(x, &p) {
            Ok(g) => dot(&d, &g) - speed,
            Err(_) => f64::NAN,
        }
    };
    let t = bracket_increasing(f, speed, 120)
        .or_else(|| geometric_bracket(f, 1e-8 * (1.0 + speed), 2.0, 120))
        .and_then(|(a, b)| illinois(f, a, b, 1e-15))
        .unwrap_or(speed);
    Ok(d.scaled(t))
}

/// Lagrange function l = Σ p_i ∂H/∂p_i − H in the momentum representation.
pub fn lagrange_value(sym: &PolySymbol, x: &[f64], p: &[f64]) -> Result<f64, LegendreError> {
    let jet = sym.jet(x, p)?;
    Ok(dot(p, &jet.grad_p) - jet.h)
}

/// L(x, v) = p·v − H(x, p) with p = λ(x, v). Stationary in p, so the
/// Newton residual enters only at second order.
pub fn lagrangian_at(
    sym: &PolySymbol,
    x: &[f64],
    v: &[f64],
    guess: &Covector,
) -> Result<(f64, Covector), LegendreError> {
    let st = StateV::new(x.to_vec(), v.to_vec());
    let sp = to_momentum(sym, &st, guess)?;
    let h = sym.eval_h(x, &sp.p)?;
    Ok((dot(&sp.p, v) - h, sp.p))
}

pub type RadialFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type RadialGradFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// L(x, v) depending on the velocity only through v = |v|_g.
///
/// Spatial gradients are taken at fixed speed; for such fields that equals
/// the covariant spatial gradient.
#[derive(Clone)]
pub struct SphericalLagrangian {
    l: RadialFn,
    l1: RadialFn,
    l2: RadialFn,
    gradx_l: RadialGradFn,
    gradx_l1: RadialGradFn,
}

impl fmt::Debug for SphericalLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SphericalLagrangian")
    }
}

impl SphericalLagrangian {
    pub fn new(
        l: RadialFn,
        l1: RadialFn,
        l2: RadialFn,
        gradx_l: RadialGradFn,
        gradx_l1: RadialGradFn,
    ) -> Self {
        Self {
            l,
            l1,
            l2,
            gradx_l,
            gradx_l1,
        }
    }

    /// Derivatives of `l` by finite differences (speed: 4th-order
    /// Richardson, position: central).
    pub fn from_value(l: RadialFn) -> Self {
        let radial_step = |v: f64| (1e-3 * (1.0 + v)).min(0.25 * v.abs().max(1e-12));
        let la = l.clone();
        let l1: RadialFn =
            Arc::new(move |x: &[f64], v| richardson_diff(|s| la(x, s), v, radial_step(v)));
        let lb = l.clone();
        let l2: RadialFn = Arc::new(move |x: &[f64], v| {
            let h = radial_step(v);
            let d2 = |h: f64| (lb(x, v + h) - 2.0 * lb(x, v) + lb(x, v - h)) / (h * h);
            (4.0 * d2(0.5 * h) - d2(h)) / 3.0
        });
        let lc = l.clone();
        let gradx_l: RadialGradFn = Arc::new(move |x: &[f64], v| {
            central_gradient(|y| lc(y, v), x, fd_step(x, FD_REL_STEP))
        });
        let l1c = l1.clone();
        let gradx_l1: RadialGradFn =
            Arc::new(move |x: &[f64], v| central_gradient(|y| l1c(y, v), x, fd_step(x, 1e-4)));
        Self::new(l, l1, l2, gradx_l, gradx_l1)
    }

    /// L = v²/(4 c2) − c0, the Legendre dual of `c2 |p|² + c0`.
    pub fn quadratic(c2: ScalarField, c0: ScalarField) -> Self {
        let (a, b) = (c2.clone(), c0.clone());
        let l: RadialFn = Arc::new(move |x: &[f64], v| v * v / (4.0 * a.value(x)) - b.value(x));
        let a = c2.clone();
        let l1: RadialFn = Arc::new(move |x: &[f64], v| v / (2.0 * a.value(x)));
        let a = c2.clone();
        let l2: RadialFn = Arc::new(move |x: &[f64], _v| 1.0 / (2.0 * a.value(x)));
        let (a, b) = (c2.clone(), c0.clone());
        let gradx_l: RadialGradFn = Arc::new(move |x: &[f64], v| {
            let c = a.value(x);
            a.gradient(x)
                .into_iter()
                .zip(b.gradient(x))
                .map(|(dc2, dc0)| -v * v * dc2 / (4.0 * c * c) - dc0)
                .collect()
        });
        let a = c2;
        let gradx_l1: RadialGradFn = Arc::new(move |x: &[f64], v| {
            let c = a.value(x);
            a.gradient(x)
                .into_iter()
                .map(|dc2| -v * dc2 / (2.0 * c * c))
                .collect()
        });
        Self::new(l, l1, l2, gradx_l, gradx_l1)
    }

    pub fn value(&self, x: &[f64], v: f64) -> f64 {
        (self.l)(x, v)
    }

    /// L′ = ∂L/∂v.
    pub fn d1(&self, x: &[f64], v: f64) -> f64 {
        (self.l1)(x, v)
    }

    /// L″.
    pub fn d2(&self, x: &[f64], v: f64) -> f64 {
        (self.l2)(x, v)
    }

    pub fn gradx(&self, x: &[f64], v: f64) -> Vec<f64> {
        (self.gradx_l)(x, v)
    }

    pub fn gradx_d1(&self, x: &[f64], v: f64) -> Vec<f64> {
        (self.gradx_l1)(x, v)
    }
}

/// Unit vector along the first coordinate axis, normalized with g.
fn reference_direction(chart: &MetricChart, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let mut e = vec![0.0; chart.dim()];
    e[0] = 1.0;
    let n = chart.norm(x, &e)?;
    e[0] = 1.0 / n;
    Ok(e)
}

/// g-orthonormal pair spanning the first two coordinate directions.
fn probe_plane(chart: &MetricChart, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let e1 = reference_direction(chart, x)?;
    let mut e2 = vec![0.0; chart.dim()];
    e2[1] = 1.0;
    let c = chart.inner(x, &e1, &e2)?;
    for (a, b) in e2.iter_mut().zip(&e1) {
        *a -= c * b;
    }
    let n = chart.norm(x, &e2)?;
    Ok((e1, e2.into_iter().map(|a| a / n).collect()))
}

/// Probe points for isotropy sampling, pulled into the chart domain.
fn probe_points(chart: &MetricChart) -> Vec<Vec<f64>> {
    [0.7, -0.3]
        .iter()
        .map(|&c| {
            chart
                .domain()
                .iter()
                .map(|&(lo, hi)| {
                    if c >= lo && c <= hi {
                        c
                    } else {
                        0.5 * (lo + hi.min(lo.abs().max(1.0) * 4.0 + lo))
                    }
                })
                .collect()
        })
        .collect()
}

/// Spherical Lagrangian of a symbol.
///
/// Quadratic metric-isotropic symbols get the closed form; anything else is
/// sampled through the Legendre map, after checking that L is independent
/// of direction at probe states.
pub fn spherical_from_symbol(
    sym: &PolySymbol,
    chart: &MetricChart,
) -> Result<SphericalLagrangian, LegendreError> {
    for x in probe_points(chart) {
        let (e1, e2) = probe_plane(chart, &x)?;
        for speed in [0.5, 1.0, 2.0] {
            let mut values = Vec::with_capacity(8);
            for k in 0..8 {
                let ang = std::f64::consts::PI * k as f64 / 8.0;
                let v: Vec<f64> = e1
                    .iter()
                    .zip(&e2)
                    .map(|(a, b)| speed * (ang.cos() * a + ang.sin() * b))
                    .collect();
                let guess = radial_guess(sym, chart, &x, &v)?;
                values.push(lagrangian_at(sym, &x, &v, &guess)?.0);
            }
            let hi = values.iter().copied().fold(f64::MIN, f64::max);
            let lo = values.iter().copied().fold(f64::MAX, f64::min);
            if hi - lo > 1e-8 * (1.0 + hi.abs()) {
                return Err(LegendreError::Anisotropic { spread: hi - lo });
            }
        }
    }

    if let Some(fam) = sym.isotropic_family() {
        if fam.c4.is_none() {
            return Ok(SphericalLagrangian::quadratic(
                fam.c2.clone(),
                fam.c0.clone(),
            ));
        }
    }

    let sym = sym.clone();
    let chart = chart.clone();
    let l: RadialFn = Arc::new(move |x: &[f64], speed| {
        let eval = || -> Result<f64, LegendreError> {
            let e = reference_direction(&chart, x)?;
            let v: Vec<f64> = e.iter().map(|a| a * speed).collect();
            let guess = radial_guess(&sym, &chart, x, &v)?;
            Ok(lagrangian_at(&sym, x, &v, &guess)?.0)
        };
        eval().unwrap_or(f64::NAN)
    });
    Ok(SphericalLagrangian::from_value(l))
}

/// W, W′ = ∂W/∂u and ∇W at one (x, u).
#[derive(Clone, Debug, PartialEq)]
pub struct WJet {
    pub w: f64,
    pub w1: f64,
    pub grad: Vec<f64>,
}

type WJetFn = Arc<dyn Fn(&[f64], f64) -> Result<WJet, LegendreError> + Send + Sync>;

/// Fiberwise spherically symmetric field W(x, u) in the actual-velocity
/// representation.
#[derive(Clone)]
pub struct WField {
    jet: WJetFn,
    epsilon: f64,
}

impl fmt::Debug for WField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WField")
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl WField {
    /// W with analytic derivatives.
    pub fn analytic<W, W1, G>(w: W, w1: W1, grad: G) -> Self
    where
        W: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        W1: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            jet: Arc::new(move |x: &[f64], u| {
                Ok(WJet {
                    w: w(x, u),
                    w1: w1(x, u),
                    grad: grad(x, u),
                })
            }),
            epsilon: 1.0,
        }
    }

    /// W alone; derivatives by central differences.
    pub fn from_value<W>(w: W) -> Self
    where
        W: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            jet: Arc::new(move |x: &[f64], u| {
                let hu = (1e-5 * (1.0 + u)).min(0.25 * u);
                Ok(WJet {
                    w: w(x, u),
                    w1: central_diff(|s| w(x, s), u, hu),
                    grad: central_gradient(|y| w(y, u), x, fd_step(x, FD_REL_STEP)),
                })
            }),
            epsilon: 1.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn jet(&self, x: &[f64], u: f64) -> Result<WJet, LegendreError> {
        let j = (self.jet)(x, u)?;
        if !(j.w.is_finite() && j.w1.is_finite() && j.grad.iter().all(|g| g.is_finite())) {
            return Err(LegendreError::NonFinite("W field"));
        }
        Ok(j)
    }

    pub fn value(&self, x: &[f64], u: f64) -> Result<f64, LegendreError> {
        Ok(self.jet(x, u)?.w)
    }
}

/// Speed v > 0 with L′(x, v) = ε/u.
pub fn matched_speed(
    lag: &SphericalLagrangian,
    epsilon: f64,
    x: &[f64],
    u: f64,
) -> Result<f64, LegendreError> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(LegendreError::VelocityOutOfRange { u });
    }
    let target = epsilon / u;
    let f = |v: f64| lag.d1(x, v) - target;
    let (a, b) = bracket_increasing(f, target.abs(), 120)
        .or_else(|| geometric_bracket(f, 1e-9, 2.0, 120))
        .ok_or(LegendreError::VelocityOutOfRange { u })?;
    illinois(f, a, b, 4e-16).ok_or(LegendreError::VelocityOutOfRange { u })
}

/// u-representation of h = v L′ − L, with ε = sign L′ at the reference
/// state (x_ref, v_ref).
///
/// W′ and ∇W follow the chain rule through u = ε/L′(x, v).
pub fn build_w(
    lag: &SphericalLagrangian,
    x_ref: &[f64],
    v_ref: f64,
) -> Result<WField, LegendreError> {
    let l1 = lag.d1(x_ref, v_ref);
    let l2 = lag.d2(x_ref, v_ref);
    if l1 == 0.0 || !l1.is_finite() {
        return Err(LegendreError::Degenerate(
            "L' vanishes at the reference state",
        ));
    }
    if l2 == 0.0 || !l2.is_finite() {
        return Err(LegendreError::Degenerate(
            "L'' vanishes at the reference state",
        ));
    }
    let epsilon = l1.signum();
    let lag = lag.clone();
    Ok(WField {
        jet: Arc::new(move |x: &[f64], u| {
            let v = matched_speed(&lag, epsilon, x, u)?;
            let l = lag.value(x, v);
            let l1 = lag.d1(x, v);
            let l2 = lag.d2(x, v);
            if l1.signum() != epsilon {
                return Err(LegendreError::Degenerate(
                    "sign of L' changes on the domain",
                ));
            }
            if l2 == 0.0 {
                return Err(LegendreError::Degenerate("L'' vanishes"));
            }
            let grad_l = lag.gradx(x, v);
            let grad_l1 = lag.gradx_d1(x, v);
            let h1 = v * l2;
            let du_dv = -epsilon * l2 / (l1 * l1);
            let grad: Vec<f64> = grad_l
                .iter()
                .zip(&grad_l1)
                .map(|(gl, gl1)| {
                    let grad_h = v * gl1 - gl;
                    let du_dx = -epsilon * gl1 / (l1 * l1);
                    grad_h - h1 * du_dx / du_dv
                })
                .collect();
            Ok(WJet {
                w: v * l1 - l,
                w1: h1 / du_dv,
                grad,
            })
        }),
        epsilon,
    })
}

/// Residuals of W′ = −ε v L′² and ∇W = −∇L at speed v.
#[derive(Clone, Debug)]
pub struct WIdentityResidual {
    pub slope: f64,
    pub gradient: f64,
}

pub fn w_identity_residual(
    lag: &SphericalLagrangian,
    w: &WField,
    x: &[f64],
    v: f64,
) -> Result<WIdentityResidual, LegendreError> {
    let eps = w.epsilon();
    let l1 = lag.d1(x, v);
    let u = eps / l1;
    let jet = w.jet(x, u)?;
    let slope = (jet.w1 + eps * v * l1 * l1).abs();
    let gradient = jet
        .grad
        .iter()
        .zip(lag.gradx(x, v))
        .fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()));
    Ok(WIdentityResidual { slope, gradient })
}

/// Max-over-samples residual of ∇_k L = −∇_k H.
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    pub max_residual: f64,
    pub samples: usize,
    pub failures: Vec<(usize, String)>,
}

/// Spatial gradient ∇_q L in the velocity representation at (x, v):
/// ∂L/∂x^q at fixed components minus Σ v^a Γ^b_qa ∂L/∂v^b, with ∂L/∂v = p.
pub fn lagrangian_spatial_gradient(
    sym: &PolySymbol,
    chart: &MetricChart,
    x: &[f64],
    v: &[f64],
    p: &Covector,
) -> Result<Vec<f64>, LegendreError> {
    let h = chart.fd_step(x);
    let mut probe = x.to_vec();
    let mut partial = Vec::with_capacity(x.len());
    for q in 0..x.len() {
        probe[q] = x[q] + h;
        let lp = lagrangian_at(sym, &probe, v, p)?.0;
        probe[q] = x[q] - h;
        let lm = lagrangian_at(sym, &probe, v, p)?.0;
        probe[q] = x[q];
        partial.push((lp - lm) / (2.0 * h));
    }
    let gamma = chart.christoffel_at(x)?;
    let n = x.len();
    Ok((0..n)
        .map(|q| {
            let mut corr = 0.0;
            for a in 0..n {
                for b in 0..n {
                    corr += v[a] * gamma.get(b, q, a) * p[b];
                }
            }
            partial[q] - corr
        })
        .collect())
}

/// Checks ∇L = −∇H ∘ λ at each momentum-space sample.
pub fn check_gradient_identity(
    sym: &PolySymbol,
    chart: &MetricChart,
    samples: &[StateP],
) -> IdentityReport {
    let mut report = IdentityReport {
        samples: samples.len(),
        ..Default::default()
    };
    for (i, st) in samples.iter().enumerate() {
        let res = (|| -> Result<f64, LegendreError> {
            let v = sym.grad_p(&st.x, &st.p)?;
            let grad_h = sym.grad_x(chart, &st.x, &st.p)?;
            let grad_l = lagrangian_spatial_gradient(sym, chart, &st.x, &v, &st.p)?;
            Ok(grad_l
                .iter()
                .zip(grad_h.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a + b).abs())))
        })();
        match res {
            Ok(r) => report.max_residual = report.max_residual.max(r),
            Err(e) => report.failures.push((i, e.to_string())),
        }
    }
    report
}

/// Ω in three representations at a momentum-space state.
#[derive(Clone, Debug)]
pub struct OmegaRepresentations {
    /// Σ p_i ∂H/∂p_i.
    pub momentum: f64,
    /// Σ v^i ∂L/∂v^i, the velocity derivative taken numerically.
    pub velocity: f64,
    /// |v| L′ when a spherical Lagrangian is supplied.
    pub spherical: Option<f64>,
}

pub fn omega_representations(
    sym: &PolySymbol,
    chart: &MetricChart,
    st: &StateP,
    lag: Option<&SphericalLagrangian>,
) -> Result<OmegaRepresentations, LegendreError> {
    let momentum = sym.omega(&st.x, &st.p)?;
    let v = sym.grad_p(&st.x, &st.p)?;
    let vmax = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let h = 1e-3 * (1.0 + vmax);
    let mut velocity = 0.0;
    for i in 0..v.len() {
        let err = std::cell::RefCell::new(None);
        let dl = richardson_diff(
            |t| {
                let mut w = v.0.clone();
                w[i] = t;
                match lagrangian_at(sym, &st.x, &w, &st.p) {
                    Ok((l, _)) => l,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            v[i],
            h,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        velocity += v[i] * dl;
    }
    let spherical = match lag {
        Some(l) => {
            let speed = chart.norm(&st.x, &v)?;
            Some(speed * l.d1(&st.x, speed))
        }
        None => None,
    };
    Ok(OmegaRepresentations {
        momentum,
        velocity,
        spherical,
    })
}
