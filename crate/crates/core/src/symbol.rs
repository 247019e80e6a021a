//! Polynomial Hamiltonian symbols `H(x, p) = Σ_r a^{k1..kr}(x) p_k1 .. p_kr`.
//!
//! Coefficients are dense order-r arrays (row-major, last index fastest)
//! symmetrized on evaluation. Everything downstream (Hamilton flow,
//! Legendre maps, ν-solving) works off the contractions defined here.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::field::{central_gradient, fd_step, ScalarField, FD_REL_STEP};
use crate::geometry::{dot, Christoffel, Covector, GeometryError, MetricChart, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("coefficient of order {order} has {got} entries, expected {expected}")]
    CoefficientShape {
        order: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Order-r coefficient array at a point.
pub type CoeffFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, GeometryError> + Send + Sync>;
/// All x-partials of an order-r array, laid out `[q * n^r + idx]`.
pub type CoeffPartialFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, GeometryError> + Send + Sync>;

/// `H = c0 + c2 |p|_g^2 + c4 |p|_g^4`, with metric-dependent coefficients.
#[derive(Clone, Debug)]
pub struct IsotropicSymbol {
    pub chart: MetricChart,
    pub c0: ScalarField,
    pub c2: ScalarField,
    pub c4: Option<ScalarField>,
}

#[derive(Clone)]
pub struct PolySymbol {
    dim: usize,
    coeffs: Vec<CoeffFn>,
    partials: Option<Vec<CoeffPartialFn>>,
    isotropic: Option<IsotropicSymbol>,
    fd_rel_step: f64,
}

impl fmt::Debug for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolySymbol")
            .field("dim", &self.dim)
            .field("degree", &self.degree())
            .field("analytic_partials", &self.partials.is_some())
            .field("isotropic", &self.isotropic.is_some())
            .finish()
    }
}

/// Value and momentum derivatives of H at one (x, p).
#[derive(Clone, Debug)]
pub struct SymbolJet {
    pub h: f64,
    pub grad_p: Vec<f64>,
    /// ∂²H/∂p_i∂p_j, row-major.
    pub hess_p: Vec<f64>,
}

impl PolySymbol {
    /// Symbol from coefficient evaluators. Each output is symmetrized over
    /// all index permutations before use.
    pub fn new(dim: usize, coeffs: Vec<CoeffFn>) -> Self {
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(r, f)| {
                let wrapped: CoeffFn = Arc::new(move |x: &[f64]| {
                    let a = f(x)?;
                    Ok(symmetrize(&a, dim, r))
                });
                wrapped
            })
            .collect();
        Self {
            dim,
            coeffs,
            partials: None,
            isotropic: None,
            fd_rel_step: FD_REL_STEP,
        }
    }

    /// Constant coefficient arrays, symmetrized once.
    pub fn constant(dim: usize, arrays: Vec<Vec<f64>>) -> Result<Self, SymbolError> {
        let mut coeffs: Vec<CoeffFn> = Vec::with_capacity(arrays.len());
        let mut partials: Vec<CoeffPartialFn> = Vec::with_capacity(arrays.len());
        for (r, a) in arrays.into_iter().enumerate() {
            let expected = dim.pow(r as u32);
            if a.len() != expected {
                return Err(SymbolError::CoefficientShape {
                    order: r,
                    expected,
                    got: a.len(),
                });
            }
            let s = symmetrize(&a, dim, r);
            coeffs.push(Arc::new(move |_| Ok(s.clone())));
            partials.push(Arc::new(move |_| Ok(vec![0.0; dim * expected])));
        }
        Ok(Self {
            dim,
            coeffs,
            partials: Some(partials),
            isotropic: None,
            fd_rel_step: FD_REL_STEP,
        })
    }

    /// Metric-isotropic family `c0 + c2 |p|² + c4 |p|⁴`.
    pub fn isotropic(family: IsotropicSymbol) -> Self {
        let dim = family.chart.dim();
        let degree = if family.c4.is_some() { 4 } else { 2 };
        let mut coeffs: Vec<CoeffFn> = Vec::new();
        let fam = family.clone();
        coeffs.push(Arc::new(move |x: &[f64]| {
            fam.chart.check_point(x)?;
            Ok(vec![fam.c0.value(x)])
        }));
        coeffs.push(Arc::new(move |_| Ok(vec![0.0; dim])));
        let fam = family.clone();
        coeffs.push(Arc::new(move |x: &[f64]| {
            let ginv = fam.chart.inverse_metric(x)?;
            let c2 = fam.c2.value(x);
            Ok(ginv.iter().map(|g| c2 * g).collect())
        }));
        if degree == 4 {
            coeffs.push(Arc::new(move |_| Ok(vec![0.0; dim * dim * dim])));
            let fam = family.clone();
            coeffs.push(Arc::new(move |x: &[f64]| {
                let ginv = fam.chart.inverse_metric(x)?;
                let c4 = fam.c4.as_ref().map_or(0.0, |c| c.value(x));
                Ok(sym4(&ginv, &ginv, dim)
                    .into_iter()
                    .map(|v| c4 * v)
                    .collect())
            }));
        }

        let analytic = family.chart.has_analytic_partials()
            && family.c0.has_analytic_gradient()
            && family.c2.has_analytic_gradient()
            && family.c4.as_ref().is_none_or(|c| c.has_analytic_gradient());
        let partials = analytic.then(|| isotropic_partials(&family, degree));

        Self {
            dim,
            coeffs,
            partials,
            isotropic: Some(family),
            fd_rel_step: FD_REL_STEP,
        }
    }

    /// `H = g^{ij} p_i p_j`, the geodesic Hamiltonian of the chart.
    pub fn inverse_metric(chart: &MetricChart) -> Self {
        Self::isotropic(IsotropicSymbol {
            chart: chart.clone(),
            c0: ScalarField::constant(0.0),
            c2: ScalarField::constant(1.0),
            c4: None,
        })
    }

    /// `H = |p|_g² − n(x)²` for a refractive index n.
    pub fn eikonal(chart: &MetricChart, index: &ScalarField) -> Self {
        Self::isotropic(IsotropicSymbol {
            chart: chart.clone(),
            c0: index.squared().scaled(-1.0),
            c2: ScalarField::constant(1.0),
            c4: None,
        })
    }

    pub fn with_partials(mut self, partials: Vec<CoeffPartialFn>) -> Self {
        assert_eq!(partials.len(), self.coeffs.len());
        self.partials = Some(partials);
        self
    }

    /// Forces x-partials of coefficients through central differences.
    pub fn without_analytic_partials(mut self) -> Self {
        self.partials = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn isotropic_family(&self) -> Option<&IsotropicSymbol> {
        self.isotropic.as_ref()
    }

    fn check_p(&self, p: &[f64]) -> Result<(), SymbolError> {
        if p.len() != self.dim {
            return Err(SymbolError::Shape {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Symmetrized coefficient arrays at `x`.
    pub fn coefficients_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, SymbolError> {
        if x.len() != self.dim {
            return Err(SymbolError::Shape {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (r, f) in self.coeffs.iter().enumerate() {
            let a = f(x)?;
            let expected = self.dim.pow(r as u32);
            if a.len() != expected {
                return Err(SymbolError::CoefficientShape {
                    order: r,
                    expected,
                    got: a.len(),
                });
            }
            out.push(a);
        }
        Ok(out)
    }

    /// H, ∂H/∂p and ∂²H/∂p∂p in one pass.
    pub fn jet(&self, x: &[f64], p: &[f64]) -> Result<SymbolJet, SymbolError> {
        self.check_p(p)?;
        let coeffs = self.coefficients_at(x)?;
        Ok(jet_from_coefficients(&coeffs, self.dim, p))
    }

    pub fn eval_h(&self, x: &[f64], p: &[f64]) -> Result<f64, SymbolError> {
        self.check_p(p)?;
        let coeffs = self.coefficients_at(x)?;
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(r, a)| full_contraction(a, self.dim, r, p))
            .sum())
    }

    /// Momentum gradient ∂H/∂p_q (upper index).
    pub fn grad_p(&self, x: &[f64], p: &[f64]) -> Result<Vector, SymbolError> {
        Ok(Vector(self.jet(x, p)?.grad_p))
    }

    /// Ω = Σ p_i ∂H/∂p_i.
    pub fn omega(&self, x: &[f64], p: &[f64]) -> Result<f64, SymbolError> {
        let g = self.grad_p(x, p)?;
        Ok(dot(p, &g))
    }

    /// Partial derivatives ∂H/∂x^q at fixed covector components.
    pub fn partial_x(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>, SymbolError> {
        self.check_p(p)?;
        let n = self.dim;
        match &self.partials {
            Some(parts) => {
                let mut out = vec![0.0; n];
                for (r, f) in parts.iter().enumerate() {
                    let d = f(x)?;
                    let len = n.pow(r as u32);
                    for (q, o) in out.iter_mut().enumerate() {
                        *o += full_contraction(&d[q * len..(q + 1) * len], n, r, p);
                    }
                }
                Ok(out)
            }
            None => {
                // coefficient closures are evaluated off-point; domain is
                // checked at x only
                self.coefficients_at(x)?;
                let h = fd_step(x, self.fd_rel_step);
                let err = std::cell::RefCell::new(None);
                let g = central_gradient(
                    |y| match self.coefficients_at(y) {
                        Ok(c) => c
                            .iter()
                            .enumerate()
                            .map(|(r, a)| full_contraction(a, n, r, p))
                            .sum(),
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    },
                    x,
                    h,
                );
                match err.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(g),
                }
            }
        }
    }

    /// Spatial gradient ∇_q H = ∂H/∂x^q + Σ p_a Γ^a_qb ∂H/∂p_b.
    pub fn grad_x(
        &self,
        chart: &MetricChart,
        x: &[f64],
        p: &[f64],
    ) -> Result<Covector, SymbolError> {
        let gamma = chart.christoffel_at(x)?;
        self.grad_x_with(&gamma, x, p)
    }

    pub(crate) fn grad_x_with(
        &self,
        gamma: &Christoffel,
        x: &[f64],
        p: &[f64],
    ) -> Result<Covector, SymbolError> {
        let mut out = self.partial_x(x, p)?;
        if !gamma.is_zero() {
            let gp = self.grad_p(x, p)?;
            for (o, c) in out.iter_mut().zip(gamma.contract_covector(p, &gp)) {
                *o += c;
            }
        }
        Ok(Covector(out))
    }

    /// Eikonal residual H(x, ∇S(x)); zero where the Hamilton-Jacobi
    /// equation holds.
    pub fn eikonal_residual(&self, phase: &PhaseField, x: &[f64]) -> Result<f64, SymbolError> {
        self.eval_h(x, &phase.grad(x))
    }

    /// First transport operator applied pointwise:
    /// `Σ_r r a(∇φ, ∇S, .., ∇S) + Σ_r r(r−1)/2 a(∇∇S, ∇S, .., ∇S) φ`.
    pub fn apply_r1(
        &self,
        chart: &MetricChart,
        phase: &PhaseField,
        phi_value: f64,
        phi_grad: &[f64],
        x: &[f64],
    ) -> Result<f64, SymbolError> {
        chart.check_point(x)?;
        self.check_p(phi_grad)?;
        let p = phase.grad(x);
        let hess_s = phase.hess(x);
        let jet = self.jet(x, &p)?;
        let transport = dot(&jet.grad_p, phi_grad);
        let n = self.dim;
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                trace += jet.hess_p[i * n + j] * hess_s[i * n + j];
            }
        }
        Ok(transport + 0.5 * trace * phi_value)
    }
}

/// Averages each array entry over all permutations of its multi-index.
pub fn symmetrize(a: &[f64], n: usize, r: usize) -> Vec<f64> {
    if r < 2 {
        return a.to_vec();
    }
    let len = a.len();
    let canon: Vec<usize> = (0..len)
        .map(|flat| {
            let mut idx = unflatten(flat, n, r);
            idx.sort_unstable();
            flatten(&idx, n)
        })
        .collect();
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for flat in 0..len {
        sum[canon[flat]] += a[flat];
        count[canon[flat]] += 1;
    }
    (0..len)
        .map(|flat| sum[canon[flat]] / count[canon[flat]] as f64)
        .collect()
}

fn unflatten(mut flat: usize, n: usize, r: usize) -> Vec<usize> {
    let mut idx = vec![0; r];
    for slot in (0..r).rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    idx
}

fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Contracts the last slot of an order-r array with `p`.
fn contract_last(a: &[f64], n: usize, p: &[f64]) -> Vec<f64> {
    a.chunks_exact(n).map(|row| dot(row, p)).collect()
}

/// a(p, p, .., p).
pub(crate) fn full_contraction(a: &[f64], n: usize, r: usize, p: &[f64]) -> f64 {
    let mut cur = a.to_vec();
    for _ in 0..r {
        cur = contract_last(&cur, n, p);
    }
    cur[0]
}

pub(crate) fn jet_from_coefficients(coeffs: &[Vec<f64>], n: usize, p: &[f64]) -> SymbolJet {
    let mut h = 0.0;
    let mut grad_p = vec![0.0; n];
    let mut hess_p = vec![0.0; n * n];
    for (r, a) in coeffs.iter().enumerate() {
        // contract down to order 2, keeping the intermediate tails
        let mut cur = a.clone();
        let mut order = r;
        while order > 2 {
            cur = contract_last(&cur, n, p);
            order -= 1;
        }
        match r {
            0 => h += cur[0],
            1 => {
                h += dot(&cur, p);
                for (g, c) in grad_p.iter_mut().zip(&cur) {
                    *g += c;
                }
            }
            _ => {
                let rf = r as f64;
                let vec1 = contract_last(&cur, n, p);
                h += dot(&vec1, p);
                for (g, c) in grad_p.iter_mut().zip(&vec1) {
                    *g += rf * c;
                }
                for (hp, c) in hess_p.iter_mut().zip(&cur) {
                    *hp += rf * (rf - 1.0) * c;
                }
            }
        }
    }
    SymbolJet { h, grad_p, hess_p }
}

/// Symmetrized product `sym(a ⊗ b)` of two symmetric matrices as an order-4 array.
fn sym4(a: &DMatrix<f64>, b: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = a[(i, j)] * b[(k, l)]
                        + a[(i, k)] * b[(j, l)]
                        + a[(i, l)] * b[(j, k)]
                        + b[(i, j)] * a[(k, l)]
                        + b[(i, k)] * a[(j, l)]
                        + b[(i, l)] * a[(j, k)];
                    out[((i * n + j) * n + k) * n + l] = v / 6.0;
                }
            }
        }
    }
    out
}

fn isotropic_partials(family: &IsotropicSymbol, degree: usize) -> Vec<CoeffPartialFn> {
    let n = family.chart.dim();
    let mut out: Vec<CoeffPartialFn> = Vec::new();
    let fam = family.clone();
    out.push(Arc::new(move |x: &[f64]| Ok(fam.c0.gradient(x))));
    out.push(Arc::new(move |_| Ok(vec![0.0; n * n])));
    let fam = family.clone();
    out.push(Arc::new(move |x: &[f64]| {
        let ginv = fam.chart.inverse_metric(x)?;
        let dginv = fam.chart.inverse_metric_partials(x)?;
        let c2 = fam.c2.value(x);
        let dc2 = fam.c2.gradient(x);
        let mut d = Vec::with_capacity(n * n * n);
        for q in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d.push(dc2[q] * ginv[(i, j)] + c2 * dginv[q][(i, j)]);
                }
            }
        }
        Ok(d)
    }));
    if degree == 4 {
        out.push(Arc::new(move |_| Ok(vec![0.0; n * n * n * n])));
        let fam = family.clone();
        out.push(Arc::new(move |x: &[f64]| {
            let ginv = fam.chart.inverse_metric(x)?;
            let dginv = fam.chart.inverse_metric_partials(x)?;
            let c4f = fam.c4.as_ref().expect("degree-4 family has c4");
            let c4 = c4f.value(x);
            let dc4 = c4f.gradient(x);
            let gg = sym4(&ginv, &ginv, n);
            let mut d = Vec::with_capacity(n * gg.len());
            for q in 0..n {
                let dgg = sym4(&dginv[q], &ginv, n);
                for (a, b) in gg.iter().zip(&dgg) {
                    d.push(dc4[q] * a + 2.0 * c4 * b);
                }
            }
            Ok(d)
        }));
    }
    out
}

pub type HessFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PhaseSpaceFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Phase function S with its gradient and covariant Hessian ∇∇S.
#[derive(Clone)]
pub struct PhaseField {
    s: ScalarFn,
    grad: HessFn,
    hess: HessFn,
}

impl fmt::Debug for PhaseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PhaseField")
    }
}

/// Relative step for the nested differences building ∇S and ∇∇S.
pub const PHASE_FD_REL_STEP: f64 = 1e-4;

impl PhaseField {
    /// S with caller-supplied gradient and covariant Hessian.
    pub fn analytic<S, G, H>(s: S, grad: G, hess: H) -> Self
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        H: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            s: Arc::new(s),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    /// S alone; derivatives by nested central differences, Hessian made
    /// covariant with the chart's connection.
    pub fn from_scalar<S>(s: S, chart: &MetricChart) -> Self
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let s: ScalarFn = Arc::new(s);
        let s1 = s.clone();
        let s2 = s.clone();
        let chart = chart.clone();
        Self {
            s,
            grad: Arc::new(move |x: &[f64]| {
                central_gradient(|y| s1(y), x, fd_step(x, PHASE_FD_REL_STEP))
            }),
            hess: Arc::new(move |x: &[f64]| {
                let n = x.len();
                let h = fd_step(x, PHASE_FD_REL_STEP);
                let grad = central_gradient(|y| s2(y), x, h);
                let mut out = vec![0.0; n * n];
                let mut probe = x.to_vec();
                for i in 0..n {
                    for j in i..n {
                        let mut corner = |si: f64, sj: f64| {
                            probe[i] += si * h;
                            probe[j] += sj * h;
                            let v = s2(&probe);
                            probe[i] = x[i];
                            probe[j] = x[j];
                            v
                        };
                        let d = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                            + corner(-1.0, -1.0))
                            / (4.0 * h * h);
                        out[i * n + j] = d;
                        out[j * n + i] = d;
                    }
                }
                if let Ok(gamma) = chart.christoffel_at(x) {
                    for i in 0..n {
                        for j in 0..n {
                            let c: f64 = (0..n).map(|k| gamma.get(k, i, j) * grad[k]).sum();
                            out[i * n + j] -= c;
                        }
                    }
                }
                out
            }),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.s)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    /// Covariant Hessian, row-major.
    pub fn hess(&self, x: &[f64]) -> Vec<f64> {
        (self.hess)(x)
    }
}

/// Extended scalar field f(x, p) with derivatives by central differences.
#[derive(Clone)]
pub struct ScalarFieldP {
    value: PhaseSpaceFn,
    fd_rel_step: f64,
}

impl ScalarFieldP {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(f),
            fd_rel_step: FD_REL_STEP,
        }
    }

    pub fn value(&self, x: &[f64], p: &[f64]) -> f64 {
        (self.value)(x, p)
    }

    /// ∂f/∂p_q.
    pub fn momentum_gradient(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        central_gradient(|q| (self.value)(x, q), p, fd_step(p, self.fd_rel_step))
    }

    /// ∂f/∂x^q + Σ p_a Γ^a_qb ∂f/∂p_b.
    pub fn spatial_gradient(
        &self,
        chart: &MetricChart,
        x: &[f64],
        p: &[f64],
    ) -> Result<Vec<f64>, GeometryError> {
        let gamma = chart.christoffel_at(x)?;
        let mut out = central_gradient(|y| (self.value)(y, p), x, fd_step(x, self.fd_rel_step));
        let gp = self.momentum_gradient(x, p);
        for (o, c) in out.iter_mut().zip(gamma.contract_covector(p, &gp)) {
            *o += c;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_flat() -> PolySymbol {
        PolySymbol::constant(
            2,
            vec![vec![-1.0], vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]],
        )
        .unwrap()
    }

    fn quartic_flat() -> PolySymbol {
        PolySymbol::isotropic(IsotropicSymbol {
            chart: MetricChart::euclidean(2),
            c0: ScalarField::constant(0.0),
            c2: ScalarField::constant(0.0),
            c4: Some(ScalarField::constant(1.0)),
        })
    }

    fn linear_index() -> ScalarField {
        ScalarField::affine(1.0, 0.2, 0)
    }

    #[test]
    fn eval_examples() {
        let s = unit_flat();
        assert_eq!(s.eval_h(&[0.3, 0.1], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(s.eval_h(&[0.3, 0.1], &[3.0, 4.0]).unwrap(), 24.0);
        let c = PolySymbol::constant(2, vec![vec![2.5]]).unwrap();
        assert_eq!(c.degree(), 0);
        assert_eq!(c.eval_h(&[0.0, 0.0], &[7.0, -1.0]).unwrap(), 2.5);
        assert_eq!(
            c.grad_p(&[0.0, 0.0], &[7.0, -1.0]).unwrap().0,
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn grad_p_and_omega_examples() {
        let s = unit_flat();
        assert_eq!(
            s.grad_p(&[0.0, 0.0], &[1.0, 0.0]).unwrap().0,
            vec![2.0, 0.0]
        );
        assert_eq!(s.omega(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(s.omega(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn symmetrization_matches_hand_symmetrized() {
        let raw =
            PolySymbol::constant(2, vec![vec![0.0], vec![0.0, 0.0], vec![1.0, 3.0, 1.0, 2.0]])
                .unwrap();
        let hand =
            PolySymbol::constant(2, vec![vec![0.0], vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 2.0]])
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(
                raw.eval_h(&[0.0, 0.0], &p).unwrap(),
                hand.eval_h(&[0.0, 0.0], &p).unwrap()
            );
        }
        let cube: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let s = symmetrize(&cube, 2, 3);
        // entries (0,0,1), (0,1,0), (1,0,0) share the mean of 1, 2, 4
        assert_eq!(s[1], 7.0 / 3.0);
        assert_eq!(s[2], 7.0 / 3.0);
        assert_eq!(s[4], 7.0 / 3.0);
    }

    #[test]
    fn coefficient_shape_error() {
        let err = PolySymbol::constant(2, vec![vec![0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(
            err,
            SymbolError::CoefficientShape {
                order: 1,
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn grad_x_examples() {
        let e = MetricChart::euclidean(2);
        let s = unit_flat();
        assert_eq!(
            s.grad_x(&e, &[0.4, 1.0], &[0.3, 0.7]).unwrap().0,
            vec![0.0, 0.0]
        );

        let eik = PolySymbol::eikonal(&e, &linear_index());
        for x in [[0.0, 0.0], [1.5, -0.3], [-2.0, 4.0]] {
            let n = 1.0 + 0.2 * x[0];
            let g = eik.grad_x(&e, &x, &[0.2, -0.9]).unwrap();
            assert!((g[0] + 2.0 * n * 0.2).abs() < 1e-15);
            assert_eq!(g[1], 0.0);
        }
    }

    #[test]
    fn inverse_metric_symbol_has_zero_spatial_gradient() {
        let polar = MetricChart::polar();
        let analytic = PolySymbol::inverse_metric(&polar);
        let fd = analytic.clone().without_analytic_partials();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = [rng.gen_range(0.5..3.0), rng.gen_range(-3.0..3.0)];
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let g = analytic.grad_x(&polar, &x, &p).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
            // central differences of p_φ²/r² carry O(h²) truncation
            let g = fd.grad_x(&polar, &x, &p).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
        }
    }

    #[test]
    fn omega_euler_identity_for_homogeneous_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let quad = PolySymbol::inverse_metric(&MetricChart::polar());
        for _ in 0..50 {
            let x = [rng.gen_range(0.5..3.0), rng.gen_range(-3.0..3.0)];
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let h = quad.eval_h(&x, &p).unwrap();
            assert!((quad.omega(&x, &p).unwrap() - 2.0 * h).abs() <= 1e-10 * (1.0 + h.abs()));
            let q = quartic_flat();
            let h4 = q.eval_h(&x, &p).unwrap();
            assert!((q.omega(&x, &p).unwrap() - 4.0 * h4).abs() <= 1e-10 * (1.0 + h4.abs()));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = MetricChart::euclidean(2);
        let polar = MetricChart::polar();
        let cases = vec![
            (PolySymbol::eikonal(&e, &linear_index()), e.clone()),
            (quartic_flat(), e.clone()),
            (PolySymbol::inverse_metric(&polar), polar.clone()),
            (
                PolySymbol::eikonal(&polar, &ScalarField::new(|x| 1.0 + 0.1 * x[0] * x[1].cos())),
                polar.clone(),
            ),
        ];
        for (sym, chart) in cases {
            let s2 = sym.clone();
            let field = ScalarFieldP::new(move |x, p| s2.eval_h(x, p).unwrap());
            for _ in 0..100 {
                let x = [rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)];
                let p = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
                let gp = sym.grad_p(&x, &p).unwrap();
                let gp_fd = field.momentum_gradient(&x, &p);
                let gx = sym.grad_x(&chart, &x, &p).unwrap();
                let gx_fd = field.spatial_gradient(&chart, &x, &p).unwrap();
                let scale = |v: &[f64]| v.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
                for (a, b) in gp.iter().zip(&gp_fd) {
                    assert!((a - b).abs() <= 1e-7 * scale(&gp_fd));
                }
                for (a, b) in gx.iter().zip(&gx_fd) {
                    assert!((a - b).abs() <= 1e-6 * scale(&gx_fd), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn eikonal_residual_examples() {
        let e = MetricChart::euclidean(2);
        let s = unit_flat();
        let plane = PhaseField::from_scalar(|x| x[0], &e);
        assert!(s.eikonal_residual(&plane, &[0.3, 0.2]).unwrap().abs() < 1e-12);
        let steep = PhaseField::from_scalar(|x| 2.0 * x[0], &e);
        assert!((s.eikonal_residual(&steep, &[0.3, 0.2]).unwrap() - 3.0).abs() < 1e-9);
        let radial = PhaseField::from_scalar(|x| (x[0] * x[0] + x[1] * x[1]).sqrt(), &e);
        assert!(s.eikonal_residual(&radial, &[1.2, -0.7]).unwrap().abs() < 1e-8);
    }

    #[test]
    fn r1_examples() {
        let e = MetricChart::euclidean(2);
        let s = PolySymbol::constant(2, vec![vec![0.0], vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]])
            .unwrap();
        let plane = PhaseField::analytic(|x| x[0], |_| vec![1.0, 0.0], |_| vec![0.0; 4]);
        // φ = x1
        assert_eq!(
            s.apply_r1(&e, &plane, 0.7, &[1.0, 0.0], &[0.7, 0.1])
                .unwrap(),
            2.0
        );
        assert_eq!(
            s.apply_r1(&e, &plane, 3.0, &[0.0, 0.0], &[0.7, 0.1])
                .unwrap(),
            0.0
        );
        let bowl = PhaseField::from_scalar(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &e);
        let r = s
            .apply_r1(&e, &bowl, 1.0, &[0.0, 0.0], &[0.4, -1.1])
            .unwrap();
        assert!((r - 2.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn r1_is_linear_in_amplitude() {
        let e = MetricChart::euclidean(2);
        let s = quartic_flat();
        let phase = PhaseField::analytic(
            |x| x[0] * x[1] + x[0],
            |x| vec![x[1] + 1.0, x[0]],
            |_| vec![0.0, 1.0, 1.0, 0.0],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let g1 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let g2 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (c1, c2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r1 = s.apply_r1(&e, &phase, a, &g1, &x).unwrap();
            let r2 = s.apply_r1(&e, &phase, b, &g2, &x).unwrap();
            let combo_g = [c1 * g1[0] + c2 * g2[0], c1 * g1[1] + c2 * g2[1]];
            let r12 = s
                .apply_r1(&e, &phase, c1 * a + c2 * b, &combo_g, &x)
                .unwrap();
            assert!((r12 - (c1 * r1 + c2 * r2)).abs() <= 1e-12 * (1.0 + r12.abs()));
        }
    }

    #[test]
    fn phase_field_fd_hessian_is_covariant() {
        // S = r in polar coordinates: ∇∇S = diag(0, r) covariantly
        let polar = MetricChart::polar();
        let s = PhaseField::from_scalar(|x| x[0], &polar);
        let h = s.hess(&[2.0, 0.3]);
        assert!(h[0].abs() < 1e-6);
        assert!((h[3] - 2.0).abs() < 1e-6);
        assert_eq!(h[1], h[2]);
    }
}
