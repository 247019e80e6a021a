//! Wavefront propagation and normal-shift dynamics on Riemannian charts.

// Negated float comparisons reject NaN along with out-of-range values.
// Tensor contractions read best as index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod config;
pub mod export;
pub mod expr;
pub mod field;
pub mod flow;
pub mod forces;
pub mod front;
pub mod geometry;
pub mod legendre;
pub mod media;
pub mod roots;
pub mod run;
pub mod symbol;

pub use field::ScalarField;
pub use geometry::{Covector, GeometryError, MetricChart, Point, Vector};
pub use legendre::{LegendreError, SphericalLagrangian, StateP, StateU, StateV, WField};
pub use symbol::{IsotropicSymbol, PhaseField, PolySymbol, SymbolError};
