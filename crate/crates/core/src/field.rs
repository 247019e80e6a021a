//! Scalar fields on a chart and the shared finite-difference conventions.

use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Relative step used for first derivatives of chart data.
pub const FD_REL_STEP: f64 = 1e-5;

/// `rel * (1 + |x|_inf)`.
pub fn fd_step(x: &[f64], rel: f64) -> f64 {
    let norm = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    rel * (1.0 + norm)
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let fp = f(&probe);
            probe[i] = x[i] - h;
            let fm = f(&probe);
            probe[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central difference of a scalar function of one variable.
pub fn central_diff<F>(f: F, t: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Fourth-order Richardson combination of central differences at `h` and `h/2`.
pub fn richardson_diff<F>(f: F, t: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let d1 = central_diff(&f, t, h);
    let d2 = central_diff(&f, t, 0.5 * h);
    (4.0 * d2 - d1) / 3.0
}

/// A real-valued function of position with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: ScalarFn,
    grad: Option<GradFn>,
}

impl ScalarField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(f),
            grad: None,
        }
    }

    pub fn with_gradient<F, G>(f: F, g: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(f),
            grad: Some(Arc::new(g)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_gradient(move |_| c, |x: &[f64]| vec![0.0; x.len()])
    }

    /// `a + b * x[axis]`.
    pub fn affine(a: f64, b: f64, axis: usize) -> Self {
        Self::with_gradient(
            move |x: &[f64]| a + b * x[axis],
            move |x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[axis] = b;
                g
            },
        )
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => central_gradient(|y| (self.value)(y), x, fd_step(x, FD_REL_STEP)),
        }
    }

    /// `f^2` with gradient `2 f grad f`.
    pub fn squared(&self) -> ScalarField {
        let a = self.clone();
        let b = self.clone();
        ScalarField::with_gradient(
            move |x: &[f64]| {
                let v = a.value(x);
                v * v
            },
            move |x: &[f64]| {
                let v = b.value(x);
                b.gradient(x).into_iter().map(|g| 2.0 * v * g).collect()
            },
        )
    }

    /// `s * f`.
    pub fn scaled(&self, s: f64) -> ScalarField {
        let a = self.clone();
        let b = self.clone();
        ScalarField::with_gradient(
            move |x: &[f64]| s * a.value(x),
            move |x: &[f64]| b.gradient(x).into_iter().map(|g| s * g).collect(),
        )
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}
