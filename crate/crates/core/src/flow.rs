//! Time integration of the Hamilton, modified Hamilton and Newtonian forms
//! with phase accumulation and conservation monitors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forces::{ForceError, ForceField};
use crate::geometry::{GeometryError, MetricChart, Vector};
use crate::legendre::{LegendreError, StateP, StateU};
use crate::symbol::{PolySymbol, SymbolError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error("transversality lost (|Omega| = {omega:e} below floor {floor:e}) at x = {x:?}")]
    TransversalityLost { omega: f64, floor: f64, x: Vec<f64> },
    #[error("non-finite state at t = {t}; last good state {last_good:?}")]
    NonFinite { t: f64, last_good: Vec<f64> },
    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<FlowError> },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("initial state does not match the {0:?} form")]
    FormMismatch(Form),
    #[error("invalid stepper configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Hamilton,
    Modified,
    Newtonian,
}

/// Raw coordinate rates: ẋ, the momentum or velocity rate, and ṡ.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub xdot: Vector,
    pub mdot: Vec<f64>,
    pub sdot: f64,
}

/// ẋ = ∂H/∂p, ṗ_i = −∇_iH + Σ Γ^k_ij p_k ẋ^j, ṡ = Ω.
pub fn rhs_hamilton(
    sym: &PolySymbol,
    chart: &MetricChart,
    st: &StateP,
) -> Result<Rates, FlowError> {
    let gamma = chart.christoffel_at(&st.x)?;
    let jet = sym.jet(&st.x, &st.p)?;
    let grad_x = sym.grad_x_with(&gamma, &st.x, &st.p)?;
    let corr = gamma.contract_covector(&st.p, &jet.grad_p);
    let omega: f64 = st.p.iter().zip(&jet.grad_p).map(|(a, b)| a * b).sum();
    Ok(Rates {
        mdot: grad_x.iter().zip(&corr).map(|(g, c)| -g + c).collect(),
        xdot: Vector(jet.grad_p),
        sdot: omega,
    })
}

/// Hamilton rates divided by Ω, with ṡ = 1.
pub fn rhs_modified(
    sym: &PolySymbol,
    chart: &MetricChart,
    st: &StateP,
    omega_floor: f64,
) -> Result<Rates, FlowError> {
    let r = rhs_hamilton(sym, chart, st)?;
    let omega = r.sdot;
    if !(omega.abs() >= omega_floor) {
        return Err(FlowError::TransversalityLost {
            omega,
            floor: omega_floor,
            x: st.x.0.clone(),
        });
    }
    Ok(Rates {
        xdot: r.xdot.scaled(1.0 / omega),
        mdot: r.mdot.iter().map(|a| a / omega).collect(),
        sdot: 1.0,
    })
}

/// ẋ = u, u̇^i = F^i − Γ^i_jk u^j u^k, ṡ = 1.
pub fn rhs_newtonian(
    force: &ForceField,
    chart: &MetricChart,
    st: &StateU,
) -> Result<Rates, FlowError> {
    let f = force.eval(chart, st)?;
    let f_up = chart.raise(&st.x, &f)?;
    let gamma = chart.christoffel_at(&st.x)?;
    let corr = gamma.contract_vectors(&st.u, &st.u);
    Ok(Rates {
        xdot: st.u.clone(),
        mdot: f_up.iter().zip(&corr).map(|(a, c)| a - c).collect(),
        sdot: 1.0,
    })
}

/// Default floor on |Ω| for the modified form.
pub fn default_omega_floor(omega0: f64) -> f64 {
    1e-10 * (1.0 + omega0.abs())
}

/// Monitored quantities at one state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub h: Option<f64>,
    pub omega: Option<f64>,
    pub w: Option<f64>,
}

/// Right-hand side on the packed state `y = [x, p or u, s]`.
pub trait FlowRhs: Send + Sync {
    fn form(&self) -> Form;
    fn dim(&self) -> usize;
    fn rates(&self, y: &[f64]) -> Result<Vec<f64>, FlowError>;
    fn monitor(&self, y: &[f64]) -> Monitor;
}

fn split(y: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    (y[..n].to_vec(), y[n..2 * n].to_vec(), y[2 * n])
}

fn pack(r: Rates) -> Vec<f64> {
    let mut out = r.xdot.0;
    out.extend(r.mdot);
    out.push(r.sdot);
    out
}

fn momentum_monitor(sym: &PolySymbol, y: &[f64]) -> Monitor {
    let (x, p, _) = split(y, sym.dim());
    match sym.jet(&x, &p) {
        Ok(j) => Monitor {
            h: Some(j.h),
            omega: Some(p.iter().zip(&j.grad_p).map(|(a, b)| a * b).sum()),
            w: None,
        },
        Err(_) => Monitor::default(),
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonRhs {
    pub sym: PolySymbol,
    pub chart: MetricChart,
}

impl FlowRhs for HamiltonRhs {
    fn form(&self) -> Form {
        Form::Hamilton
    }
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn rates(&self, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let (x, p, s) = split(y, self.dim());
        let st = StateP {
            x: x.into(),
            p: p.into(),
            s,
        };
        rhs_hamilton(&self.sym, &self.chart, &st).map(pack)
    }
    fn monitor(&self, y: &[f64]) -> Monitor {
        momentum_monitor(&self.sym, y)
    }
}

#[derive(Clone, Debug)]
pub struct ModifiedRhs {
    pub sym: PolySymbol,
    pub chart: MetricChart,
    pub omega_floor: f64,
}

impl ModifiedRhs {
    /// Floor taken from Ω at the initial state.
    pub fn new(sym: PolySymbol, chart: MetricChart, st0: &StateP) -> Result<Self, FlowError> {
        let omega0 = sym.omega(&st0.x, &st0.p)?;
        Ok(Self {
            sym,
            chart,
            omega_floor: default_omega_floor(omega0),
        })
    }
}

impl FlowRhs for ModifiedRhs {
    fn form(&self) -> Form {
        Form::Modified
    }
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn rates(&self, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let (x, p, s) = split(y, self.dim());
        let st = StateP {
            x: x.into(),
            p: p.into(),
            s,
        };
        rhs_modified(&self.sym, &self.chart, &st, self.omega_floor).map(pack)
    }
    fn monitor(&self, y: &[f64]) -> Monitor {
        momentum_monitor(&self.sym, y)
    }
}

#[derive(Clone, Debug)]
pub struct NewtonianRhs {
    pub force: ForceField,
    pub chart: MetricChart,
}

impl FlowRhs for NewtonianRhs {
    fn form(&self) -> Form {
        Form::Newtonian
    }
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn rates(&self, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let (x, u, s) = split(y, self.dim());
        let st = StateU {
            x: x.into(),
            u: u.into(),
            s,
        };
        rhs_newtonian(&self.force, &self.chart, &st).map(pack)
    }
    fn monitor(&self, y: &[f64]) -> Monitor {
        let (x, u, _) = split(y, self.dim());
        let w = self
            .chart
            .norm(&x, &u)
            .ok()
            .and_then(|speed| self.force.w.value(&x, speed).ok());
        Monitor {
            h: None,
            omega: None,
            w,
        }
    }
}

/// Initial state of either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum FlowState {
    P(StateP),
    U(StateU),
}

impl From<StateP> for FlowState {
    fn from(s: StateP) -> Self {
        FlowState::P(s)
    }
}

impl From<StateU> for FlowState {
    fn from(s: StateU) -> Self {
        FlowState::U(s)
    }
}

impl FlowState {
    fn packed(&self, form: Form) -> Result<Vec<f64>, FlowError> {
        let (x, m, s) = match (self, form) {
            (FlowState::P(st), Form::Hamilton | Form::Modified) => (&st.x.0, &st.p.0, st.s),
            (FlowState::U(st), Form::Newtonian) => (&st.x.0, &st.u.0, st.s),
            _ => return Err(FlowError::FormMismatch(form)),
        };
        let mut y = x.clone();
        y.extend_from_slice(m);
        y.push(s);
        Ok(y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Rk4 { dt: f64 },
    Rk45 { atol: f64, rtol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub method: Method,
    pub t_end: f64,
    pub record_every: usize,
}

impl StepperConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4 { dt },
            t_end,
            record_every: 1,
        }
    }

    pub fn rk45(atol: f64, rtol: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk45 { atol, rtol },
            t_end,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::Config(m.to_string()));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be finite and non-negative");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => bad("dt must be positive"),
            Method::Rk45 { atol, rtol } if !(atol > 0.0 && rtol > 0.0) => {
                bad("tolerances must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// One recorded state: position, momentum or velocity, phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub t: f64,
    #[serde(flatten)]
    pub values: Monitor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub form: Form,
    pub samples: Vec<Sample>,
    pub monitors: Vec<MonitorSample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory holds the initial sample")
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(rhs: &dyn FlowRhs, y: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
    let k1 = rhs.rates(y)?;
    let k2 = rhs.rates(&axpy(y, 0.5 * h, &k1))?;
    let k3 = rhs.rates(&axpy(y, 0.5 * h, &k2))?;
    let k4 = rhs.rates(&axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince attempt; returns the 5th-order state and the scaled
/// error norm.
fn dp_step(
    rhs: &dyn FlowRhs,
    y: &[f64],
    h: f64,
    atol: f64,
    rtol: f64,
) -> Result<(Vec<f64>, f64), FlowError> {
    debug_assert_eq!(DP_C.len(), 7);
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut yi = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = DP_A[stage][j];
            if a != 0.0 {
                for (v, d) in yi.iter_mut().zip(kj) {
                    *v += h * a * d;
                }
            }
        }
        k.push(rhs.rates(&yi)?);
    }
    let n = y.len();
    let mut y5 = y.to_vec();
    let mut err2 = 0.0;
    for i in 0..n {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += DP_B5[s] * k[s][i];
            d4 += DP_B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        let e = h * (d5 - d4) / scale;
        err2 += e * e;
    }
    Ok((y5, (err2 / n as f64).sqrt()))
}

const MAX_STEPS: usize = 10_000_000;

struct Driver<'a> {
    rhs: &'a dyn FlowRhs,
    cfg: StepperConfig,
    traj: Trajectory,
    steps: usize,
    h_adapt: Option<f64>,
}

impl Driver<'_> {
    fn record(&mut self, t: f64, y: &[f64]) {
        let n = self.rhs.dim();
        self.traj.samples.push(Sample {
            t,
            x: y[..n].to_vec(),
            m: y[n..2 * n].to_vec(),
            s: y[2 * n],
        });
        self.traj.monitors.push(MonitorSample {
            t,
            values: self.rhs.monitor(y),
        });
    }

    fn at_time(t: f64, e: FlowError) -> FlowError {
        match e {
            FlowError::NonFinite { .. } | FlowError::AtTime { .. } => e,
            other => FlowError::AtTime {
                t,
                source: Box::new(other),
            },
        }
    }

    fn accept(
        &mut self,
        t: f64,
        y: Vec<f64>,
        last_good: &[f64],
        is_end: bool,
    ) -> Result<Vec<f64>, FlowError> {
        if !y.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFinite {
                t,
                last_good: last_good.to_vec(),
            });
        }
        self.steps += 1;
        if self.steps.is_multiple_of(self.cfg.record_every) || is_end {
            self.record(t, &y);
        }
        Ok(y)
    }

    /// Advances from `t0` to exactly `t1`.
    fn advance(
        &mut self,
        t0: f64,
        t1: f64,
        mut y: Vec<f64>,
        is_end: bool,
    ) -> Result<Vec<f64>, FlowError> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(y);
        }
        match self.cfg.method {
            Method::Rk4 { dt } => {
                let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for k in 0..steps {
                    let t = t0 + k as f64 * h;
                    let next = rk4_step(self.rhs, &y, h).map_err(|e| Self::at_time(t, e))?;
                    let tn = if k + 1 == steps {
                        t1
                    } else {
                        t0 + (k + 1) as f64 * h
                    };
                    y = self.accept(tn, next, &y, is_end && k + 1 == steps)?;
                }
                Ok(y)
            }
            Method::Rk45 { atol, rtol } => {
                let mut t = t0;
                let mut h = self.h_adapt.unwrap_or(1e-3 * span.max(1e-12)).min(span);
                while t < t1 {
                    if self.steps > MAX_STEPS {
                        return Err(FlowError::StepUnderflow { t });
                    }
                    let last = t + h >= t1 * (1.0 - 1e-14) || t + h >= t1;
                    let hs = if last { t1 - t } else { h };
                    let (next, err) =
                        dp_step(self.rhs, &y, hs, atol, rtol).map_err(|e| Self::at_time(t, e))?;
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 && err.is_finite() {
                        let tn = if last { t1 } else { t + hs };
                        y = self.accept(tn, next, &y, is_end && last)?;
                        t = tn;
                        if !last {
                            h = hs * factor;
                        }
                        self.h_adapt = Some(h);
                    } else {
                        h = hs * if err.is_finite() { factor } else { 0.2 };
                        if h <= 1e-14 * (1.0 + t.abs()) {
                            return Err(FlowError::StepUnderflow { t });
                        }
                    }
                }
                Ok(y)
            }
        }
    }
}

/// Integrates from t = 0 to `cfg.t_end`.
pub fn integrate(
    rhs: &dyn FlowRhs,
    st0: impl Into<FlowState>,
    cfg: &StepperConfig,
) -> Result<Trajectory, FlowError> {
    integrate_with_stops(rhs, st0, cfg, &[]).map(|(t, _)| t)
}

/// As [`integrate`], also returning the packed state `[x, m, s]` at each
/// requested stop time; steps are adjusted to land on stops exactly.
pub fn integrate_with_stops(
    rhs: &dyn FlowRhs,
    st0: impl Into<FlowState>,
    cfg: &StepperConfig,
    stops: &[f64],
) -> Result<(Trajectory, Vec<Vec<f64>>), FlowError> {
    cfg.validate()?;
    let y0 = st0.into().packed(rhs.form())?;
    if y0.len() != 2 * rhs.dim() + 1 {
        return Err(FlowError::Geometry(GeometryError::Shape {
            expected: 2 * rhs.dim() + 1,
            got: y0.len(),
        }));
    }
    if stops.iter().any(|s| !(*s >= 0.0 && *s <= cfg.t_end)) {
        return Err(FlowError::Config(
            "stop times must lie in [0, t_end]".into(),
        ));
    }
    let mut driver = Driver {
        rhs,
        cfg: *cfg,
        traj: Trajectory {
            form: rhs.form(),
            samples: Vec::new(),
            monitors: Vec::new(),
        },
        steps: 0,
        h_adapt: None,
    };
    driver.record(0.0, &y0);

    let mut marks: Vec<f64> = stops.to_vec();
    marks.push(cfg.t_end);
    marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    marks.dedup();

    let mut y = y0;
    let mut t = 0.0;
    let mut at_stop = Vec::with_capacity(marks.len());
    for &mark in &marks {
        y = driver.advance(t, mark, y, mark == cfg.t_end)?;
        t = mark;
        at_stop.push((mark, y.clone()));
    }
    let out = stops
        .iter()
        .map(|s| {
            at_stop
                .iter()
                .find(|(m, _)| m == s)
                .map(|(_, y)| y.clone())
                .expect("every stop is a mark")
        })
        .collect();
    Ok((driver.traj, out))
}

/// Drift of the monitored first integrals over a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub h_drift: Option<f64>,
    pub w_drift: Option<f64>,
    pub min_abs_omega: Option<f64>,
}

pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    fn drift(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
        let v: Vec<f64> = values.collect::<Option<Vec<f64>>>()?;
        let first = *v.first()?;
        Some(v.iter().fold(0.0_f64, |m, a| m.max((a - first).abs())))
    }
    let m = &traj.monitors;
    ConservationReport {
        h_drift: drift(m.iter().map(|s| s.values.h)),
        w_drift: drift(m.iter().map(|s| s.values.w)),
        min_abs_omega: m
            .iter()
            .map(|s| s.values.omega.map(f64::abs))
            .collect::<Option<Vec<f64>>>()
            .and_then(|v| v.into_iter().reduce(f64::min)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::legendre::WField;

    fn unit_speed() -> PolySymbol {
        PolySymbol::eikonal(&MetricChart::euclidean(2), &ScalarField::constant(1.0))
    }

    #[test]
    fn hamilton_rates_example() {
        let r = rhs_hamilton(
            &unit_speed(),
            &MetricChart::euclidean(2),
            &StateP::new(vec![0.0, 0.0], vec![1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(r.xdot.0, vec![2.0, 0.0]);
        assert_eq!(r.mdot, vec![0.0, 0.0]);
        assert_eq!(r.sdot, 2.0);
    }

    #[test]
    fn polar_geodesic_rates_carry_only_christoffel_term() {
        let polar = MetricChart::polar();
        let sym = PolySymbol::inverse_metric(&polar);
        let (r, pr, pp) = (1.5, 0.3, 0.8);
        let st = StateP::new(vec![r, 0.2], vec![pr, pp]);
        let rates = rhs_hamilton(&sym, &polar, &st).unwrap();
        assert!((rates.mdot[0] - 2.0 * pp * pp / (r * r * r)).abs() < 1e-14);
        assert!(rates.mdot[1].abs() < 1e-14);
    }

    #[test]
    fn modified_rates_example() {
        let st = StateP::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        let r = rhs_modified(&unit_speed(), &MetricChart::euclidean(2), &st, 1e-10).unwrap();
        assert_eq!(r.xdot.0, vec![1.0, 0.0]);
        assert_eq!(r.sdot, 1.0);
        let st = StateP::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        let e = rhs_modified(&unit_speed(), &MetricChart::euclidean(2), &st, 1e-10).unwrap_err();
        assert!(matches!(e, FlowError::TransversalityLost { .. }));
    }

    #[test]
    fn exact_constant_coefficient_solutions() {
        let chart = MetricChart::euclidean(2);
        let mut st = StateP::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        st.s = 0.25;
        let cfg = StepperConfig::rk4(0.1, 1.0);
        let modified = ModifiedRhs::new(unit_speed(), chart.clone(), &st).unwrap();
        let tr = integrate(&modified, st.clone(), &cfg).unwrap();
        let last = tr.last();
        assert!((last.x[0] - 1.0).abs() < 1e-14 && last.x[1] == 0.0);
        assert!((last.s - 1.25).abs() < 1e-14);
        assert_eq!(last.t, 1.0);

        let ham = HamiltonRhs {
            sym: unit_speed(),
            chart,
        };
        let tr = integrate(&ham, st.clone(), &cfg).unwrap();
        assert!((tr.last().x[0] - 2.0).abs() < 1e-14);
        assert!((tr.last().s - 2.25).abs() < 1e-14);
        let rep = conservation_report(&tr);
        assert_eq!(rep.h_drift, Some(0.0));
        assert_eq!(rep.min_abs_omega, Some(2.0));

        let tr = integrate(&ham, st, &StepperConfig::rk4(0.1, 0.0)).unwrap();
        assert_eq!(tr.samples.len(), 1);
        assert_eq!(tr.samples[0].s, 0.25);
    }

    #[test]
    fn form_mismatch_and_bad_config() {
        let ham = HamiltonRhs {
            sym: unit_speed(),
            chart: MetricChart::euclidean(2),
        };
        let st = StateU::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert!(matches!(
            integrate(&ham, st, &StepperConfig::rk4(0.1, 1.0)),
            Err(FlowError::FormMismatch(Form::Hamilton))
        ));
        let st = StateP::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert!(matches!(
            integrate(&ham, st, &StepperConfig::rk4(-0.1, 1.0)),
            Err(FlowError::Config(_))
        ));
    }

    #[test]
    fn free_newtonian_motion_is_straight() {
        let w = WField::analytic(
            |_, u| 1.0 / (u * u),
            |_, u| -2.0 / (u * u * u),
            |x, _| vec![0.0; x.len()],
        );
        let rhs = NewtonianRhs {
            force: ForceField::new(w, crate::forces::HFunction::Zero),
            chart: MetricChart::euclidean(2),
        };
        let st = StateU::new(vec![0.0, 0.0], vec![0.6, 0.8]);
        let tr = integrate(&rhs, st, &StepperConfig::rk4(0.05, 1.0)).unwrap();
        let l = tr.last();
        assert!((l.x[0] - 0.6).abs() < 1e-14 && (l.x[1] - 0.8).abs() < 1e-14);
        assert_eq!(l.m, vec![0.6, 0.8]);
        assert!((l.s - 1.0).abs() < 1e-14);
        assert_eq!(conservation_report(&tr).w_drift, Some(0.0));
    }

    #[test]
    fn rk45_reaches_stops_exactly() {
        let chart = MetricChart::polar();
        let sym = PolySymbol::inverse_metric(&chart);
        let ham = HamiltonRhs { sym, chart };
        let st = StateP::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        let cfg = StepperConfig::rk45(1e-12, 1e-12, 1.0);
        let (tr, at) = integrate_with_stops(&ham, st, &cfg, &[0.25, 0.5]).unwrap();
        assert_eq!(at.len(), 2);
        assert!(tr.samples.iter().any(|s| s.t == 0.25));
        assert_eq!(tr.last().t, 1.0);
        // circle geodesic r = 1 / cos(φ) in the plane: x = 1 stays fixed
        for y in &at {
            assert!((y[0] * y[1].cos() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn record_every_thins_samples() {
        let ham = HamiltonRhs {
            sym: unit_speed(),
            chart: MetricChart::euclidean(2),
        };
        let st = StateP::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        let mut cfg = StepperConfig::rk4(0.01, 1.0);
        cfg.record_every = 10;
        let tr = integrate(&ham, st, &cfg).unwrap();
        assert_eq!(tr.samples.len(), 11);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}
