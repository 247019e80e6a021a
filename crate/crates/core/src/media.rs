//! Bundled media, symbols and fronts used by the check suites, the
//! benches and the shipped configs.

use std::f64::consts::PI;

use crate::field::ScalarField;
use crate::front::{
    build_front, latitude_embedding, plane_embedding, FrontError, FrontMesh, ParamAxis, ParamGrid,
};
use crate::geometry::MetricChart;
use crate::legendre::WField;
use crate::symbol::{IsotropicSymbol, PolySymbol};

/// Gradient of the linear index.
pub const INDEX_SLOPE: f64 = 0.2;

/// n(x) = 1 + 0.2 x¹.
pub fn linear_index() -> ScalarField {
    ScalarField::affine(1.0, INDEX_SLOPE, 0)
}

/// H = |p|² − n(x)² in the Euclidean plane.
pub fn linear_medium() -> (MetricChart, PolySymbol) {
    let chart = MetricChart::euclidean(2);
    let sym = PolySymbol::eikonal(&chart, &linear_index());
    (chart, sym)
}

/// W = 1/u² − n(x)² with analytic derivatives.
pub fn linear_medium_w() -> WField {
    WField::analytic(
        |x, u| {
            let n = 1.0 + INDEX_SLOPE * x[0];
            1.0 / (u * u) - n * n
        },
        |_, u| -2.0 / (u * u * u),
        |x, _| {
            let mut g = vec![0.0; x.len()];
            g[0] = -2.0 * (1.0 + INDEX_SLOPE * x[0]) * INDEX_SLOPE;
            g
        },
    )
}

/// Segment x² = 0, x¹ ∈ [−1, 1], normals along +x².
pub fn linear_medium_front(samples: usize) -> Result<FrontMesh, FrontError> {
    let (chart, _) = linear_medium();
    let grid = ParamGrid::new(vec![ParamAxis::closed(-1.0, 1.0, samples)])?;
    build_front(
        &chart,
        plane_embedding(vec![0.0, 0.0], vec![vec![1.0, 0.0]]),
        grid,
        &[0.0, 1.0],
    )
}

/// H = g^{ij} p_i p_j − 1 on the unit sphere.
pub fn sphere_medium() -> (MetricChart, PolySymbol) {
    let chart = MetricChart::sphere();
    let sym = PolySymbol::isotropic(IsotropicSymbol {
        chart: chart.clone(),
        c0: ScalarField::constant(-1.0),
        c2: ScalarField::constant(1.0),
        c4: None,
    });
    (chart, sym)
}

/// Latitude circle θ = π/4 with normals along +∂/∂θ.
pub fn sphere_front(samples: usize) -> Result<FrontMesh, FrontError> {
    let (chart, _) = sphere_medium();
    let grid = ParamGrid::new(vec![ParamAxis::periodic(0.0, 2.0 * PI, samples)])?;
    build_front(&chart, latitude_embedding(PI / 4.0), grid, &[1.0, 0.0])
}

/// H = |p|²/2 in the Euclidean plane.
pub fn half_quadratic() -> PolySymbol {
    PolySymbol::isotropic(IsotropicSymbol {
        chart: MetricChart::euclidean(2),
        c0: ScalarField::constant(0.0),
        c2: ScalarField::constant(0.5),
        c4: None,
    })
}

/// H = |p|⁴ + n(x)² in the Euclidean plane.
pub fn quartic_medium() -> PolySymbol {
    PolySymbol::isotropic(IsotropicSymbol {
        chart: MetricChart::euclidean(2),
        c0: linear_index().squared(),
        c2: ScalarField::constant(0.0),
        c4: Some(ScalarField::constant(1.0)),
    })
}

/// Name, chart, symbol and a sampling box for positions.
pub type BundledSymbol = (&'static str, MetricChart, PolySymbol, [(f64, f64); 2]);

/// Every bundled symbol.
pub fn bundled_symbols() -> Vec<BundledSymbol> {
    let flat = MetricChart::euclidean(2);
    let polar = MetricChart::polar();
    let (sphere, sphere_sym) = sphere_medium();
    let (_, linear) = linear_medium();
    vec![
        (
            "half_quadratic",
            flat.clone(),
            half_quadratic(),
            [(-1.0, 1.0), (-1.0, 1.0)],
        ),
        (
            "linear_eikonal",
            flat.clone(),
            linear,
            [(-1.0, 1.0), (-1.0, 1.0)],
        ),
        (
            "quartic",
            flat,
            quartic_medium(),
            [(-1.0, 1.0), (-1.0, 1.0)],
        ),
        (
            "polar_geodesic",
            polar.clone(),
            PolySymbol::inverse_metric(&polar),
            [(0.5, 2.0), (-3.0, 3.0)],
        ),
        ("sphere", sphere, sphere_sym, [(0.4, 2.7), (-3.0, 3.0)]),
    ]
}
