//! Coordinate-chart Riemannian geometry: metric, Christoffel symbols,
//! index gymnastics and covariant rates along curves.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{fd_step, ScalarField, FD_REL_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate metric at {point:?}")]
    DegenerateMetric { point: Vec<f64> },
    #[error("metric not symmetric at {point:?}")]
    AsymmetricMetric { point: Vec<f64> },
    #[error("point {point:?} outside chart domain: axis {axis} not in [{lo}, {hi}]")]
    OutOfDomain {
        point: Vec<f64>,
        axis: usize,
        lo: f64,
        hi: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite components {0:?}")]
    NonFinite(Vec<f64>),
}

macro_rules! components {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn new(comps: Vec<f64>) -> Self {
                Self(comps)
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self(self.0.iter().map(|v| v * s).collect())
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

components!(
    /// Chart coordinates x^1..x^n.
    Point
);
components!(
    /// Lower-index components.
    Covector
);
components!(
    /// Upper-index components.
    Vector
);

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
/// Returns `[dg/dx^0, dg/dx^1, ...]`.
pub type MetricPartialsFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Levi-Civita connection coefficients `gamma[k][i][j]`, flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    gamma: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            gamma: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Γ^k_ij.
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    fn set_sym(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.gamma[(k * n + i) * n + j] = v;
        self.gamma[(k * n + j) * n + i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().all(|g| *g == 0.0)
    }

    /// `sum_k sum_j Γ^k_ij p_k w^j` for each lower index i.
    pub fn contract_covector(&self, p: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..n {
                    if p[k] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        acc += self.get(k, i, j) * p[k] * w[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// `sum_j sum_k Γ^i_jk a^j b^k` for each upper index i.
    pub fn contract_vectors(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += self.get(i, j, k) * a[j] * b[k];
                    }
                }
                acc
            })
            .collect()
    }
}

/// A single coordinate chart carrying a Riemannian metric.
#[derive(Clone)]
pub struct MetricChart {
    name: String,
    dim: usize,
    metric: MetricFn,
    partials: Option<MetricPartialsFn>,
    domain: Vec<(f64, f64)>,
    fd_rel_step: f64,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_partials", &self.partials.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

const WIDE: f64 = 1e6;

impl MetricChart {
    /// Chart from raw closures. `partials` may be omitted, in which case
    /// metric derivatives come from central differences.
    pub fn from_fn(
        name: impl Into<String>,
        dim: usize,
        metric: MetricFn,
        partials: Option<MetricPartialsFn>,
        domain: Vec<(f64, f64)>,
    ) -> Self {
        assert!(dim >= 2, "chart dimension must be at least 2");
        assert_eq!(
            domain.len(),
            dim,
            "domain box must have one interval per axis"
        );
        Self {
            name: name.into(),
            dim,
            metric,
            partials,
            domain,
            fd_rel_step: FD_REL_STEP,
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::from_fn(
            "euclidean",
            dim,
            Arc::new(move |_| DMatrix::identity(dim, dim)),
            Some(Arc::new(move |_| vec![DMatrix::zeros(dim, dim); dim])),
            vec![(-WIDE, WIDE); dim],
        )
    }

    /// Polar coordinates (r, φ) on the plane: g = diag(1, r²).
    pub fn polar() -> Self {
        Self::from_fn(
            "polar",
            2,
            Arc::new(|x: &[f64]| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, x[0] * x[0]]))
            }),
            Some(Arc::new(|x: &[f64]| {
                let mut dr = DMatrix::zeros(2, 2);
                dr[(1, 1)] = 2.0 * x[0];
                vec![dr, DMatrix::zeros(2, 2)]
            })),
            vec![(1e-9, WIDE), (-WIDE, WIDE)],
        )
    }

    /// Unit sphere in (θ, φ): g = diag(1, sin²θ).
    pub fn sphere() -> Self {
        Self::from_fn(
            "sphere",
            2,
            Arc::new(|x: &[f64]| {
                let s = x[0].sin();
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, s * s]))
            }),
            Some(Arc::new(|x: &[f64]| {
                let mut dth = DMatrix::zeros(2, 2);
                dth[(1, 1)] = 2.0 * x[0].sin() * x[0].cos();
                vec![dth, DMatrix::zeros(2, 2)]
            })),
            vec![(1e-6, std::f64::consts::PI - 1e-6), (-WIDE, WIDE)],
        )
    }

    /// Diagonal metric with one scalar field per axis.
    pub fn diagonal(entries: Vec<ScalarField>) -> Self {
        let dim = entries.len();
        let e1 = entries.clone();
        let analytic = entries.iter().all(|e| e.has_analytic_gradient());
        let partials: Option<MetricPartialsFn> = if analytic {
            Some(Arc::new(move |x: &[f64]| {
                let mut out = vec![DMatrix::zeros(dim, dim); dim];
                for (i, e) in e1.iter().enumerate() {
                    for (s, g) in e.gradient(x).into_iter().enumerate() {
                        out[s][(i, i)] = g;
                    }
                }
                out
            }))
        } else {
            None
        };
        Self::from_fn(
            "diagonal",
            dim,
            Arc::new(move |x: &[f64]| {
                DMatrix::from_fn(
                    dim,
                    dim,
                    |i, j| if i == j { entries[i].value(x) } else { 0.0 },
                )
            }),
            partials,
            vec![(-WIDE, WIDE); dim],
        )
    }

    /// Conformally flat metric `exp(2 φ(x)) δ_ij`.
    pub fn conformal(dim: usize, phi: ScalarField) -> Self {
        let p1 = phi.clone();
        Self::from_fn(
            "conformal",
            dim,
            Arc::new(move |x: &[f64]| DMatrix::identity(dim, dim) * (2.0 * phi.value(x)).exp()),
            Some(Arc::new(move |x: &[f64]| {
                let e = (2.0 * p1.value(x)).exp();
                p1.gradient(x)
                    .into_iter()
                    .map(|g| DMatrix::identity(dim, dim) * (2.0 * g * e))
                    .collect()
            })),
            vec![(-WIDE, WIDE); dim],
        )
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        assert_eq!(domain.len(), self.dim);
        self.domain = domain;
        self
    }

    pub fn with_fd_rel_step(mut self, rel: f64) -> Self {
        self.fd_rel_step = rel;
        self
    }

    /// Drops analytic metric partials so Christoffel symbols come from
    /// central differences.
    pub fn without_analytic_partials(mut self) -> Self {
        self.partials = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn fd_step(&self, x: &[f64]) -> f64 {
        fd_step(x, self.fd_rel_step)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), GeometryError> {
        self.check_len(x.len())?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite(x.to_vec()));
        }
        for (axis, (&v, &(lo, hi))) in x.iter().zip(&self.domain).enumerate() {
            if v < lo || v > hi {
                return Err(GeometryError::OutOfDomain {
                    point: x.to_vec(),
                    axis,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    fn check_len(&self, got: usize) -> Result<(), GeometryError> {
        if got != self.dim {
            Err(GeometryError::Shape {
                expected: self.dim,
                got,
            })
        } else {
            Ok(())
        }
    }

    /// g_ij at `x`, validated for symmetry.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(x)?;
        let g = (self.metric)(x);
        let scale = g.amax().max(f64::MIN_POSITIVE);
        for i in 0..self.dim {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 * scale {
                    return Err(GeometryError::AsymmetricMetric { point: x.to_vec() });
                }
            }
        }
        Ok(g)
    }

    /// g^ij at `x`; fails unless g is positive definite.
    pub fn inverse_metric(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let g = self.metric_at(x)?;
        invert_spd(g).ok_or_else(|| GeometryError::DegenerateMetric { point: x.to_vec() })
    }

    /// ∂g/∂x^s for every axis s. Does not re-check the domain.
    pub fn metric_partials(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        match &self.partials {
            Some(p) => p(x),
            None => {
                let h = self.fd_step(x);
                let mut probe = x.to_vec();
                (0..self.dim)
                    .map(|s| {
                        probe[s] = x[s] + h;
                        let gp = (self.metric)(&probe);
                        probe[s] = x[s] - h;
                        let gm = (self.metric)(&probe);
                        probe[s] = x[s];
                        (gp - gm) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// ∂g^ij/∂x^s = -(g^-1 ∂_s g g^-1)^ij.
    pub fn inverse_metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>, GeometryError> {
        let ginv = self.inverse_metric(x)?;
        Ok(self
            .metric_partials(x)
            .into_iter()
            .map(|dg| -(&ginv * dg * &ginv))
            .collect())
    }

    /// Γ^k_ij = ½ g^ks (∂_j g_si + ∂_i g_sj − ∂_s g_ij).
    pub fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError> {
        let ginv = self.inverse_metric(x)?;
        let dg = self.metric_partials(x);
        let n = self.dim;
        let mut out = Christoffel::zeros(n);
        if dg.iter().all(|m| m.iter().all(|v| *v == 0.0)) {
            return Ok(out);
        }
        // first kind, Γ_{s,ij}
        let mut first = vec![0.0; n * n * n];
        for s in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (dg[j][(s, i)] + dg[i][(s, j)] - dg[s][(i, j)]);
                    first[(s * n + i) * n + j] = v;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        acc += ginv[(k, s)] * first[(s * n + i) * n + j];
                    }
                    out.set_sym(k, i, j, acc);
                }
            }
        }
        Ok(out)
    }

    /// n_i = g_ij v^j.
    pub fn lower(&self, x: &[f64], v: &[f64]) -> Result<Covector, GeometryError> {
        self.check_len(v.len())?;
        let g = self.metric_at(x)?;
        Ok(Covector(mat_vec(&g, v)))
    }

    /// v^i = g^ij p_j.
    pub fn raise(&self, x: &[f64], p: &[f64]) -> Result<Vector, GeometryError> {
        self.check_len(p.len())?;
        let ginv = self.inverse_metric(x)?;
        Ok(Vector(mat_vec(&ginv, p)))
    }

    /// g(a, b) for two vectors.
    pub fn inner(&self, x: &[f64], a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        let g = self.metric_at(x)?;
        Ok(quad_form(&g, a, b))
    }

    /// |v|_g.
    pub fn norm(&self, x: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.inner(x, v, v)?.max(0.0).sqrt())
    }

    /// |p|_g for a covector.
    pub fn conorm(&self, x: &[f64], p: &[f64]) -> Result<f64, GeometryError> {
        self.check_len(p.len())?;
        let ginv = self.inverse_metric(x)?;
        Ok(quad_form(&ginv, p, p).max(0.0).sqrt())
    }

    /// ∇_t p_i = ṗ_i − Σ Γ^k_ij p_k ẋ^j.
    pub fn covariant_rate(
        &self,
        x: &[f64],
        xdot: &[f64],
        p: &[f64],
        pdot_raw: &[f64],
    ) -> Result<Covector, GeometryError> {
        for len in [xdot.len(), p.len(), pdot_raw.len()] {
            self.check_len(len)?;
        }
        let gamma = self.christoffel_at(x)?;
        let corr = gamma.contract_covector(p, xdot);
        Ok(Covector(
            pdot_raw.iter().zip(corr).map(|(a, c)| a - c).collect(),
        ))
    }
}

pub(crate) fn invert_spd(g: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.cholesky()?;
    let inv = chol.inverse();
    if inv.iter().all(|v| v.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub(crate) fn quad_form(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += a[i] * m[(i, j)] * b[j];
        }
    }
    acc
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn stretched() -> MetricChart {
        MetricChart::diagonal(vec![ScalarField::constant(1.0), ScalarField::constant(4.0)])
    }

    /// Exercises every chart with analytic partials against its FD twin.
    fn bundled() -> Vec<MetricChart> {
        vec![
            MetricChart::euclidean(2),
            MetricChart::polar(),
            MetricChart::sphere(),
            MetricChart::conformal(
                2,
                ScalarField::with_gradient(
                    |x| 0.1 * x[0] + 0.05 * x[1] * x[1],
                    |x| vec![0.1, 0.1 * x[1]],
                ),
            ),
        ]
    }

    fn random_point(chart: &MetricChart, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match chart.name() {
            "polar" => vec![rng.gen_range(0.5..3.0), rng.gen_range(-3.0..3.0)],
            "sphere" => vec![rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0)],
            _ => (0..chart.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        }
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let c = MetricChart::euclidean(3)
            .christoffel_at(&[0.3, -1.0, 2.0])
            .unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn polar_christoffel_closed_form() {
        let c = MetricChart::polar().christoffel_at(&[2.0, 0.7]).unwrap();
        assert_eq!(c.get(0, 1, 1), -2.0);
        assert_eq!(c.get(1, 0, 1), 0.5);
        assert_eq!(c.get(1, 1, 0), 0.5);
        assert_eq!(c.get(0, 0, 0), 0.0);
        assert_eq!(c.get(0, 0, 1), 0.0);
        assert_eq!(c.get(1, 0, 0), 0.0);
        assert_eq!(c.get(1, 1, 1), 0.0);
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let c = MetricChart::sphere()
            .christoffel_at(&[FRAC_PI_4, 0.0])
            .unwrap();
        assert!((c.get(0, 1, 1) + 0.5).abs() < 1e-15);
        assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-15);
        // FD path agrees
        let c_fd = MetricChart::sphere()
            .without_analytic_partials()
            .christoffel_at(&[FRAC_PI_4, 0.0])
            .unwrap();
        assert!((c_fd.get(0, 1, 1) + 0.5).abs() < 1e-9);
        assert!((c_fd.get(1, 0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lower_and_raise_examples() {
        let e = MetricChart::euclidean(2);
        assert_eq!(e.lower(&[0.0, 0.0], &[1.0, 0.0]).unwrap().0, vec![1.0, 0.0]);
        assert_eq!(e.raise(&[0.0, 0.0], &[0.0, 1.0]).unwrap().0, vec![0.0, 1.0]);
        let s = stretched();
        assert_eq!(s.lower(&[0.0, 0.0], &[1.0, 1.0]).unwrap().0, vec![1.0, 4.0]);
        assert_eq!(s.lower(&[0.0, 0.0], &[0.0, 0.0]).unwrap().0, vec![0.0, 0.0]);
        let v = s.raise(&[0.0, 0.0], &[1.0, 4.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_and_domain_errors() {
        let e = MetricChart::euclidean(2);
        assert!(matches!(
            e.lower(&[0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(GeometryError::Shape {
                expected: 2,
                got: 3
            })
        ));
        let s = MetricChart::sphere();
        assert!(matches!(
            s.christoffel_at(&[4.0, 0.0]),
            Err(GeometryError::OutOfDomain { axis: 0, .. })
        ));
    }

    #[test]
    fn degenerate_metric_detected() {
        let chart =
            MetricChart::diagonal(vec![ScalarField::constant(1.0), ScalarField::constant(0.0)]);
        assert!(matches!(
            chart.christoffel_at(&[0.0, 0.0]),
            Err(GeometryError::DegenerateMetric { .. })
        ));
        assert!(matches!(
            chart.raise(&[0.0, 0.0], &[1.0, 1.0]),
            Err(GeometryError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn covariant_rate_examples() {
        let e = MetricChart::euclidean(2);
        let r = e
            .covariant_rate(&[1.0, 1.0], &[0.3, 0.2], &[1.0, 2.0], &[5.0, 6.0])
            .unwrap();
        assert_eq!(r.0, vec![5.0, 6.0]);

        let polar = MetricChart::polar();
        let r = polar
            .covariant_rate(&[2.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.25, 0.5])
            .unwrap();
        assert_eq!(r.0, vec![0.25, 0.5 + 2.0]);

        let r = polar
            .covariant_rate(&[2.0, 0.0], &[0.0, 0.0], &[1.0, 3.0], &[0.25, 0.5])
            .unwrap();
        assert_eq!(r.0, vec![0.25, 0.5]);
    }

    #[test]
    fn christoffel_symmetric_and_fd_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for chart in bundled() {
            let fd_chart = chart.clone().without_analytic_partials();
            for _ in 0..100 {
                let x = random_point(&chart, &mut rng);
                let a = chart.christoffel_at(&x).unwrap();
                let b = fd_chart.christoffel_at(&x).unwrap();
                let n = chart.dim();
                let scale = (0..n * n * n).map(|i| a.gamma[i].abs()).fold(1.0, f64::max);
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            assert_eq!(a.get(k, i, j), a.get(k, j, i));
                            assert!(
                                (a.get(k, i, j) - b.get(k, i, j)).abs() <= 1e-6 * scale,
                                "{} at {x:?}",
                                chart.name()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn metric_compatibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for chart in bundled() {
            for _ in 0..50 {
                let x = random_point(&chart, &mut rng);
                let g = chart.metric_at(&x).unwrap();
                let gamma = chart.christoffel_at(&x).unwrap();
                let dg = chart
                    .clone()
                    .without_analytic_partials()
                    .metric_partials(&x);
                let n = chart.dim();
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut r = dg[k][(i, j)];
                            for s in 0..n {
                                r -=
                                    gamma.get(s, k, i) * g[(s, j)] + gamma.get(s, k, j) * g[(i, s)];
                            }
                            assert!(r.abs() < 1e-6, "{} residual {r}", chart.name());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn raise_lower_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for chart in bundled() {
            for _ in 0..100 {
                let x = random_point(&chart, &mut rng);
                let p: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let back = chart.lower(&x, &chart.raise(&x, &p).unwrap()).unwrap();
                for (a, b) in back.iter().zip(&p) {
                    assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
                }
            }
        }
    }
}
