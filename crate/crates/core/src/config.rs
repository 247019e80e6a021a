//! JSON run configuration and its translation into library objects.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, Env, Expression, ParseError, Var};
use crate::field::ScalarField;
use crate::flow::{Form, Method, StepperConfig};
use crate::forces::HFunction;
use crate::front::{
    circle_embedding, latitude_embedding, plane_embedding, Branch, EmbedFn, Exec, ParamAxis,
    ParamGrid,
};
use crate::geometry::MetricChart;
use crate::legendre::{RadialFn, SphericalLagrangian, WField};
use crate::symbol::{CoeffFn, IsotropicSymbol, PolySymbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("expression '{field}': {error}")]
    Expression {
        field: String,
        error: Box<ParseError>,
    },
}

fn schema<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Schema(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dim: usize,
    pub chart: ChartSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<LagrangianSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<WSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<HSpec>,
    pub front: FrontSpec,
    pub flow: FlowSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Euclidean,
    Polar,
    Sphere,
    /// g = exp(2 φ) δ.
    Conformal {
        phi: String,
    },
    Diagonal {
        entries: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// c0 + c2 |p|² (+ c4 |p|⁴).
    Isotropic {
        c0: String,
        c2: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c4: Option<String>,
    },
    /// |p|² − n².
    Eikonal { index: String },
    /// Flattened order-r arrays, r = 0..m, entries as expressions in x.
    Coefficients { arrays: Vec<Vec<String>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianSpec {
    /// L in x1..xn and the speed v.
    #[serde(rename = "L")]
    pub l: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WSpec {
    /// W in x1..xn and the speed u.
    #[serde(rename = "W")]
    pub w: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HSpec {
    Zero,
    Identity,
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// Expression in w.
    Expression {
        expr: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    PlaneSegment {
        origin: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
    /// θ = const on the sphere chart.
    Latitude {
        theta: f64,
    },
    /// One expression per coordinate; x1.. name the front parameters.
    Expression {
        coords: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontSpec {
    pub embedding: EmbeddingSpec,
    pub grid: Vec<ParamAxis>,
    pub orient_seed: Vec<f64>,
    #[serde(default = "default_branch")]
    pub branch: Branch,
    #[serde(default)]
    pub s0: f64,
}

fn default_branch() -> Branch {
    Branch::Positive
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub form: Form,
    pub stepper: Method,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub exec: Exec,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_true")]
    pub trajectories: bool,
    #[serde(default = "default_true")]
    pub gnuplot: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trajectories: true,
            gnuplot: true,
        }
    }
}

/// Which representation drives the dynamics.
#[derive(Clone, Debug)]
pub enum DynamicsSource {
    Symbol(PolySymbol),
    Lagrangian(SphericalLagrangian),
    W(WField),
}

/// Library objects built from a validated config.
#[derive(Clone)]
pub struct Setup {
    pub chart: MetricChart,
    pub source: DynamicsSource,
    pub h: HFunction,
    pub embed: EmbedFn,
    pub grid: ParamGrid,
    pub stepper: StepperConfig,
}

impl std::fmt::Debug for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Setup")
            .field("chart", &self.chart.name())
            .field("grid", &self.grid)
            .finish()
    }
}

/// Parses an expression and checks the variables it references.
pub fn checked_expression(
    field: &str,
    src: &str,
    dim: usize,
    allowed: &[Var],
) -> Result<Expression, ConfigError> {
    let e = parse_expression(src).map_err(|error| ConfigError::Expression {
        field: field.to_string(),
        error: Box::new(error),
    })?;
    if e.max_coordinate() > dim {
        return schema(format!(
            "{field}: references x{} but dim is {dim}",
            e.max_coordinate()
        ));
    }
    for v in [Var::V, Var::U, Var::W] {
        if e.uses(v) && !allowed.contains(&v) {
            return schema(format!("{field}: variable {v:?} not allowed here"));
        }
    }
    Ok(e)
}

fn field_of(name: &str, src: &str, dim: usize) -> Result<ScalarField, ConfigError> {
    let e = checked_expression(name, src, dim, &[])?;
    Ok(ScalarField::new(move |x| e.eval_x(x)))
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization: keys sorted, two-space indentation.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sources = [
            self.symbol.is_some(),
            self.lagrangian.is_some(),
            self.w.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if sources != 1 {
            return schema("exactly one of symbol, lagrangian, w must be given");
        }
        if self.dim < 2 {
            return schema("dim must be at least 2");
        }
        match (&self.chart, self.dim) {
            (ChartSpec::Polar | ChartSpec::Sphere, d) if d != 2 => {
                return schema("polar and sphere charts are 2-dimensional")
            }
            (ChartSpec::Diagonal { entries }, d) if entries.len() != d => {
                return schema("diagonal chart needs dim entries")
            }
            _ => {}
        }
        if self.symbol.is_none() && self.flow.form != Form::Newtonian {
            return schema("lagrangian and w sources drive the newtonian form only");
        }
        if self.front.grid.len() + 1 != self.dim {
            return schema("front grid needs dim - 1 axes");
        }
        if self.front.orient_seed.len() != self.dim {
            return schema("orient_seed length must equal dim");
        }
        let f = &self.flow;
        if f.snapshot_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= f.t_end))
        {
            return schema("snapshot_times must lie in [0, t_end]");
        }
        self.stepper()
            .validate()
            .map_err(|e| ConfigError::Schema(e.to_string()))?;
        // builds everything once so expression and shape errors surface here
        self.build().map(|_| ())
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            method: self.flow.stepper,
            t_end: self.flow.t_end,
            record_every: self.flow.record_every,
        }
    }

    pub fn build_chart(&self) -> Result<MetricChart, ConfigError> {
        let d = self.dim;
        Ok(match &self.chart {
            ChartSpec::Euclidean => MetricChart::euclidean(d),
            ChartSpec::Polar => MetricChart::polar(),
            ChartSpec::Sphere => MetricChart::sphere(),
            ChartSpec::Conformal { phi } => {
                MetricChart::conformal(d, field_of("chart.phi", phi, d)?)
            }
            ChartSpec::Diagonal { entries } => MetricChart::diagonal(
                entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| field_of(&format!("chart.entries[{i}]"), e, d))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    fn build_symbol(
        &self,
        spec: &SymbolSpec,
        chart: &MetricChart,
    ) -> Result<PolySymbol, ConfigError> {
        let d = self.dim;
        Ok(match spec {
            SymbolSpec::Isotropic { c0, c2, c4 } => PolySymbol::isotropic(IsotropicSymbol {
                chart: chart.clone(),
                c0: field_of("symbol.c0", c0, d)?,
                c2: field_of("symbol.c2", c2, d)?,
                c4: c4
                    .as_ref()
                    .map(|c| field_of("symbol.c4", c, d))
                    .transpose()?,
            }),
            SymbolSpec::Eikonal { index } => {
                PolySymbol::eikonal(chart, &field_of("symbol.index", index, d)?)
            }
            SymbolSpec::Coefficients { arrays } => {
                let mut coeffs: Vec<CoeffFn> = Vec::with_capacity(arrays.len());
                for (r, a) in arrays.iter().enumerate() {
                    if a.len() != d.pow(r as u32) {
                        return schema(format!(
                            "symbol.arrays[{r}] needs {} entries",
                            d.pow(r as u32)
                        ));
                    }
                    let exprs = a
                        .iter()
                        .enumerate()
                        .map(|(k, s)| {
                            checked_expression(&format!("symbol.arrays[{r}][{k}]"), s, d, &[])
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let ch = chart.clone();
                    coeffs.push(Arc::new(move |x: &[f64]| {
                        ch.check_point(x)?;
                        Ok(exprs.iter().map(|e| e.eval_x(x)).collect())
                    }));
                }
                PolySymbol::new(d, coeffs)
            }
        })
    }

    fn build_h(&self) -> Result<HFunction, ConfigError> {
        Ok(match &self.h {
            None | Some(HSpec::Zero) => HFunction::Zero,
            Some(HSpec::Identity) => HFunction::Identity,
            Some(HSpec::Linear { slope, intercept }) => HFunction::Linear {
                slope: *slope,
                intercept: *intercept,
            },
            Some(HSpec::Expression { expr }) => {
                let e = checked_expression("h.expr", expr, 0, &[Var::W])?;
                let label = e.pretty();
                HFunction::custom(label, move |w| {
                    e.eval(&Env {
                        w: Some(w),
                        ..Default::default()
                    })
                })
            }
        })
    }

    fn build_embedding(&self) -> Result<EmbedFn, ConfigError> {
        let d = self.dim;
        Ok(match &self.front.embedding {
            EmbeddingSpec::Circle { center, radius } => {
                if d != 2 {
                    return schema("circle embedding needs dim 2");
                }
                circle_embedding(*center, *radius)
            }
            EmbeddingSpec::PlaneSegment { origin, directions } => {
                if origin.len() != d
                    || directions.len() + 1 != d
                    || directions.iter().any(|v| v.len() != d)
                {
                    return schema(
                        "plane_segment needs an origin of length dim and dim - 1 directions",
                    );
                }
                plane_embedding(origin.clone(), directions.clone())
            }
            EmbeddingSpec::Latitude { theta } => {
                if !matches!(self.chart, ChartSpec::Sphere) {
                    return schema("latitude embedding needs the sphere chart");
                }
                if !(*theta > 0.0 && *theta < PI) {
                    return schema("latitude theta must lie in (0, pi)");
                }
                latitude_embedding(*theta)
            }
            EmbeddingSpec::Expression { coords } => {
                if coords.len() != d {
                    return schema("expression embedding needs dim coordinates");
                }
                let exprs = coords
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        checked_expression(&format!("front.embedding.coords[{i}]"), s, d - 1, &[])
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Arc::new(move |q: &[f64]| exprs.iter().map(|e| e.eval_x(q)).collect())
            }
        })
    }

    pub fn build(&self) -> Result<Setup, ConfigError> {
        let d = self.dim;
        let chart = self.build_chart()?;
        let source = if let Some(s) = &self.symbol {
            DynamicsSource::Symbol(self.build_symbol(s, &chart)?)
        } else if let Some(l) = &self.lagrangian {
            let e = checked_expression("lagrangian.L", &l.l, d, &[Var::V])?;
            let f: RadialFn = Arc::new(move |x: &[f64], v| {
                e.eval(&Env {
                    x,
                    v: Some(v),
                    ..Default::default()
                })
            });
            DynamicsSource::Lagrangian(SphericalLagrangian::from_value(f))
        } else if let Some(w) = &self.w {
            let e = checked_expression("w.W", &w.w, d, &[Var::U])?;
            DynamicsSource::W(WField::from_value(move |x, u| {
                e.eval(&Env {
                    x,
                    u: Some(u),
                    ..Default::default()
                })
            }))
        } else {
            return schema("no dynamics source");
        };
        let grid = ParamGrid::new(self.front.grid.clone())
            .map_err(|e| ConfigError::Schema(e.to_string()))?;
        Ok(Setup {
            chart,
            source,
            h: self.build_h()?,
            embed: self.build_embedding()?,
            grid,
            stepper: self.stepper(),
        })
    }
}
