//! Force fields of the Newtonian representation.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::{Covector, GeometryError, MetricChart};
use crate::legendre::{LegendreError, StateU, WField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForceError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error("projector undefined at zero velocity")]
    ZeroVelocity,
    #[error("degenerate W slope (W' = {slope:e})")]
    DegenerateSlope { slope: f64 },
    #[error("non-finite force")]
    NonFinite,
}

/// Orthogonal projectors along and across `v`: Q^i_k = v^i v_k / |v|²,
/// P = 1 − Q. Row index i, column index k.
pub fn projectors(
    chart: &MetricChart,
    x: &[f64],
    v: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>), ForceError> {
    let lowered = chart.lower(x, v)?;
    let norm2: f64 = lowered.iter().zip(v).map(|(a, b)| a * b).sum();
    if norm2 == 0.0 {
        return Err(ForceError::ZeroVelocity);
    }
    let n = v.len();
    let q = DMatrix::from_fn(n, n, |i, k| v[i] * lowered[k] / norm2);
    let p = DMatrix::identity(n, n) - &q;
    Ok((q, p))
}

/// Unit direction N = u/|u| with its lowered form, and |u|.
fn direction(
    chart: &MetricChart,
    x: &[f64],
    u: &[f64],
) -> Result<(Vec<f64>, Covector, f64), ForceError> {
    let speed = chart.norm(x, u)?;
    if speed == 0.0 {
        return Err(ForceError::ZeroVelocity);
    }
    let n: Vec<f64> = u.iter().map(|a| a / speed).collect();
    let n_low = chart.lower(x, &n)?;
    Ok((n, n_low, speed))
}

fn wavefront_terms(
    w: &WField,
    chart: &MetricChart,
    st: &StateU,
) -> Result<(Covector, Covector, f64, f64), ForceError> {
    let (n, n_low, speed) = direction(chart, &st.x, &st.u)?;
    let jet = w.jet(&st.x, speed)?;
    if jet.w1 == 0.0 {
        return Err(ForceError::DegenerateSlope { slope: jet.w1 });
    }
    let a: Vec<f64> = jet.grad.iter().map(|g| g / jet.w1).collect();
    let an: f64 = a.iter().zip(&n).map(|(ai, ni)| ai * ni).sum();
    let f: Vec<f64> = n_low
        .iter()
        .zip(&a)
        .map(|(nk, ak)| -speed * (2.0 * an * nk - ak))
        .collect();
    Ok((Covector(f), n_low, jet.w, jet.w1))
}

/// F_k = −|u| Σ_i (∇_iW/W′)(2 N^i N_k − δ^i_k).
pub fn force_wavefront(
    w: &WField,
    chart: &MetricChart,
    st: &StateU,
) -> Result<Covector, ForceError> {
    let (f, ..) = wavefront_terms(w, chart, st)?;
    finite(f)
}

/// Wavefront force plus h(W) N_k / W′.
pub fn force_normal_shift(
    w: &WField,
    h: &HFunction,
    chart: &MetricChart,
    st: &StateU,
) -> Result<Covector, ForceError> {
    let (mut f, n_low, wv, w1) = wavefront_terms(w, chart, st)?;
    if !h.is_zero() {
        let hw = h.eval(wv);
        for (fk, nk) in f.0.iter_mut().zip(n_low.iter()) {
            *fk += hw * nk / w1;
        }
    }
    finite(f)
}

fn finite(f: Covector) -> Result<Covector, ForceError> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(ForceError::NonFinite)
    }
}

/// The free function h of the normal-shift force.
#[derive(Clone)]
pub enum HFunction {
    Zero,
    Identity,
    Linear {
        slope: f64,
        intercept: f64,
    },
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl HFunction {
    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        HFunction::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// True only for the structural zero. Its force is bitwise equal to
    /// the wavefront force.
    pub fn is_zero(&self) -> bool {
        matches!(self, HFunction::Zero)
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self {
            HFunction::Zero => 0.0,
            HFunction::Identity => w,
            HFunction::Linear { slope, intercept } => slope * w + intercept,
            HFunction::Custom { f, .. } => f(w),
        }
    }
}

impl fmt::Debug for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFunction::Zero => f.write_str("Zero"),
            HFunction::Identity => f.write_str("Identity"),
            HFunction::Linear { slope, intercept } => f
                .debug_struct("Linear")
                .field("slope", slope)
                .field("intercept", intercept)
                .finish(),
            HFunction::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

/// A W field with its h function, evaluated on Newtonian states.
#[derive(Clone, Debug)]
pub struct ForceField {
    pub w: WField,
    pub h: HFunction,
}

impl ForceField {
    pub fn new(w: WField, h: HFunction) -> Self {
        Self { w, h }
    }

    pub fn eval(&self, chart: &MetricChart, st: &StateU) -> Result<Covector, ForceError> {
        force_normal_shift(&self.w, &self.h, chart, st)
    }
}
