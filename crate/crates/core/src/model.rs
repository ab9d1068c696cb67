//! Shared domain data model: uncertainty datasets, support polytopes,
//! ambiguity specifications and solver-facing expression handles.
//!
//! All values here are immutable after construction and safe to share across
//! concurrent workers.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LinExpr;

/// Historical per-unit wind deviation samples plus the forecast they deviate
/// from. Row `i` of `deviations` is one observation of the |W|-dimensional
/// deviation vector; `forecast[w] + deviations[i][w]` is the observed
/// normalized output of farm `w`, so it must land in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyDataset {
    deviations: Vec<Vec<f64>>,
    forecast: Vec<f64>,
    /// Installed capacities in MW, one per farm.
    capacities: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch { left: usize, right: usize, context: String },
    #[error("empty dataset: {0}")]
    Empty(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("dataset file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl UncertaintyDataset {
    pub fn new(
        deviations: Vec<Vec<f64>>,
        forecast: Vec<f64>,
        capacities: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if deviations.is_empty() {
            return Err(ModelError::Empty("no deviation samples".into()));
        }
        let dim = forecast.len();
        if dim == 0 {
            return Err(ModelError::Empty("zero-dimensional forecast".into()));
        }
        if capacities.len() != dim {
            return Err(ModelError::DimensionMismatch {
                left: capacities.len(),
                right: dim,
                context: "capacities vs forecast".into(),
            });
        }
        for (i, row) in deviations.iter().enumerate() {
            if row.len() != dim {
                return Err(ModelError::DimensionMismatch {
                    left: row.len(),
                    right: dim,
                    context: format!("deviation row {i} vs forecast"),
                });
            }
        }
        Ok(Self { deviations, forecast, capacities })
    }

    pub fn sample_count(&self) -> usize {
        self.deviations.len()
    }

    pub fn dim(&self) -> usize {
        self.forecast.len()
    }

    pub fn deviations(&self) -> &[Vec<f64>] {
        &self.deviations
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.deviations[i]
    }

    /// Column `k` gathered across samples.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.deviations.iter().map(|row| row[k]).collect()
    }

    pub fn forecast(&self) -> &[f64] {
        &self.forecast
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// The box support implied by the forecast: deviations keep normalized
    /// output within [0, 1].
    pub fn implied_support(&self) -> SupportPolytope {
        let lo: Vec<f64> = self.forecast.iter().map(|m| -m).collect();
        let hi: Vec<f64> = self.forecast.iter().map(|m| 1.0 - m).collect();
        SupportPolytope::from_box(&lo, &hi)
    }

    /// Restricts the dataset to a contiguous row range, keeping forecast and
    /// capacities.
    pub fn slice_rows(&self, rows: std::ops::Range<usize>) -> Self {
        Self {
            deviations: self.deviations[rows].to_vec(),
            forecast: self.forecast.clone(),
            capacities: self.capacities.clone(),
        }
    }

    /// Writes the CSV dataset plus `<path>.meta` sidecar (key=value text).
    pub fn write_csv(&self, path: &Path) -> Result<(), ModelError> {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim()).map(|w| format!("w{w}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.deviations {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        let meta = format!(
            "forecast={}\ncapacities={}\n",
            join_floats(&self.forecast),
            join_floats(&self.capacities)
        );
        std::fs::write(sidecar_path(path), meta)?;
        Ok(())
    }

    /// Reads a CSV dataset written by [`write_csv`], including the sidecar.
    pub fn read_csv(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| ModelError::Empty(format!("{} is empty", path.display())))?;
        let dim = header.split(',').count();
        let mut deviations = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| ModelError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if row.len() != dim {
                return Err(ModelError::Parse {
                    line: lineno + 1,
                    message: format!("expected {dim} cells, found {}", row.len()),
                });
            }
            deviations.push(row);
        }
        let meta = std::fs::read_to_string(sidecar_path(path))?;
        let mut forecast = None;
        let mut capacities = None;
        for (lineno, line) in meta.lines().enumerate() {
            let Some((key, value)) = line.split_once('=') else { continue };
            match key.trim() {
                "forecast" => forecast = Some(parse_floats(value, lineno)?),
                "capacities" => capacities = Some(parse_floats(value, lineno)?),
                _ => {}
            }
        }
        let forecast =
            forecast.ok_or_else(|| ModelError::Invalid("sidecar missing forecast=".into()))?;
        let capacities =
            capacities.ok_or_else(|| ModelError::Invalid("sidecar missing capacities=".into()))?;
        Self::new(deviations, forecast, capacities)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    os.into()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str, lineno: usize) -> Result<Vec<f64>, ModelError> {
    s.split(',')
        .map(|c| {
            c.trim().parse::<f64>().map_err(|e| ModelError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Polyhedral support `{ xi : C xi <= D }`. Box bounds are kept alongside the
/// generic rows because the reformulation needs per-coordinate intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPolytope {
    /// 2|W| x |W| row-major matrix; box rows are +/- identity.
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub xi_min: Vec<f64>,
    pub xi_max: Vec<f64>,
}

impl SupportPolytope {
    /// Box support: rows `xi_k <= hi_k` then `-xi_k <= -lo_k`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        let mut c = Vec::with_capacity(2 * dim);
        let mut d = Vec::with_capacity(2 * dim);
        for k in 0..dim {
            let mut row = vec![0.0; dim];
            row[k] = 1.0;
            c.push(row);
            d.push(hi[k]);
        }
        for k in 0..dim {
            let mut row = vec![0.0; dim];
            row[k] = -1.0;
            c.push(row);
            d.push(-lo[k]);
        }
        Self { c, d, xi_min: lo.to_vec(), xi_max: hi.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.xi_min.len()
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        self.c.iter().zip(&self.d).all(|(row, &dv)| {
            row.iter().zip(xi).map(|(c, x)| c * x).sum::<f64>() <= dv + tol
        })
    }
}

/// A named violation of a dataset invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetViolation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub bound: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    BelowSupport,
    AboveSupport,
    ForecastOutOfRange,
    NonPositiveCapacity,
}

impl fmt::Display for DatasetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::BelowSupport => write!(
                f,
                "sample ({}, {}) = {} below lower support bound {}",
                self.row, self.col, self.value, self.bound
            ),
            ViolationKind::AboveSupport => write!(
                f,
                "sample ({}, {}) = {} above upper support bound {}",
                self.row, self.col, self.value, self.bound
            ),
            ViolationKind::ForecastOutOfRange => {
                write!(f, "forecast[{}] = {} outside [0, 1]", self.col, self.value)
            }
            ViolationKind::NonPositiveCapacity => {
                write!(f, "capacity[{}] = {} must be positive", self.col, self.value)
            }
        }
    }
}

/// Scans a dataset against a support polytope's box bounds plus the forecast
/// and capacity invariants. Empty result means the dataset is valid.
pub fn validate_dataset(
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
) -> Result<Vec<DatasetViolation>, ModelError> {
    if ds.dim() != sp.dim() {
        return Err(ModelError::DimensionMismatch {
            left: ds.dim(),
            right: sp.dim(),
            context: "dataset vs support polytope".into(),
        });
    }
    let mut violations = Vec::new();
    for (w, &mu) in ds.forecast().iter().enumerate() {
        if !(0.0..=1.0).contains(&mu) {
            violations.push(DatasetViolation {
                row: 0,
                col: w,
                value: mu,
                bound: if mu < 0.0 { 0.0 } else { 1.0 },
                kind: ViolationKind::ForecastOutOfRange,
            });
        }
    }
    for (w, &cap) in ds.capacities().iter().enumerate() {
        if cap <= 0.0 {
            violations.push(DatasetViolation {
                row: 0,
                col: w,
                value: cap,
                bound: 0.0,
                kind: ViolationKind::NonPositiveCapacity,
            });
        }
    }
    for (i, row) in ds.deviations().iter().enumerate() {
        for (w, &v) in row.iter().enumerate() {
            if v < sp.xi_min[w] - 1e-12 {
                violations.push(DatasetViolation {
                    row: i,
                    col: w,
                    value: v,
                    bound: sp.xi_min[w],
                    kind: ViolationKind::BelowSupport,
                });
            } else if v > sp.xi_max[w] + 1e-12 {
                violations.push(DatasetViolation {
                    row: i,
                    col: w,
                    value: v,
                    bound: sp.xi_max[w],
                    kind: ViolationKind::AboveSupport,
                });
            }
        }
    }
    Ok(violations)
}

/// Ground norm of the Wasserstein metric. The dual norm shows up in the
/// reformulated constraints: the dual of `one_norm` is the infinity norm and
/// vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundNorm {
    OneNorm,
    InfNorm,
}

impl Default for GroundNorm {
    fn default() -> Self {
        GroundNorm::OneNorm
    }
}

impl GroundNorm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            GroundNorm::OneNorm => v.iter().map(|x| x.abs()).sum(),
            GroundNorm::InfNorm => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroundNorm::OneNorm => "one_norm",
            GroundNorm::InfNorm => "inf_norm",
        }
    }
}

/// Ambiguity set parameters. `theta2 = None` selects the plain metric ball;
/// `Some(r)` adds the copula-distance restriction with radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySpec {
    pub theta1: f64,
    pub theta2: Option<f64>,
    #[serde(default)]
    pub ground_norm: GroundNorm,
}

impl AmbiguitySpec {
    pub fn metric(theta1: f64) -> Result<Self, ModelError> {
        Self::new(theta1, None, GroundNorm::OneNorm)
    }

    pub fn copula(theta1: f64, theta2: f64) -> Result<Self, ModelError> {
        Self::new(theta1, Some(theta2), GroundNorm::OneNorm)
    }

    pub fn new(theta1: f64, theta2: Option<f64>, ground_norm: GroundNorm) -> Result<Self, ModelError> {
        if !(theta1 >= 0.0) {
            return Err(ModelError::Invalid(format!("theta1 = {theta1} must be >= 0")));
        }
        if let Some(t2) = theta2 {
            if !(t2 >= 0.0) {
                return Err(ModelError::Invalid(format!("theta2 = {t2} must be >= 0")));
            }
        }
        Ok(Self { theta1, theta2, ground_norm })
    }

    pub fn is_copula(&self) -> bool {
        self.theta2.is_some()
    }
}

/// Affine-in-uncertainty expression `a(x)^T xi + b(x)` whose coefficients are
/// themselves affine in decision-variable handles. Affinity in both layers is
/// structural: `LinExpr` cannot hold products of handles.
#[derive(Debug, Clone)]
pub struct AffineUncertainExpression {
    pub a: Vec<LinExpr>,
    pub b: LinExpr,
}

impl AffineUncertainExpression {
    pub fn new(a: Vec<LinExpr>, b: LinExpr) -> Self {
        Self { a, b }
    }

    /// A purely numeric expression (no decision variables).
    pub fn numeric(a: &[f64], b: f64) -> Self {
        Self {
            a: a.iter().map(|&c| LinExpr::constant(c)).collect(),
            b: LinExpr::constant(b),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// True when no coefficient mentions a decision variable or a nonzero
    /// uncertainty loading: the expression is the constant `b`.
    pub fn is_constant_in_xi(&self) -> bool {
        self.a.iter().all(|e| e.terms.is_empty() && e.constant == 0.0)
    }
}

/// Finitely supported distribution: `points` are row vectors, `weights` are
/// probabilities summing to one (tolerance 1e-9, below solver feasibility
/// tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub const WEIGHT_TOL: f64 = 1e-9;

    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if points.len() != weights.len() {
            return Err(ModelError::DimensionMismatch {
                left: points.len(),
                right: weights.len(),
                context: "points vs weights".into(),
            });
        }
        if points.is_empty() {
            return Err(ModelError::Empty("distribution with no support points".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(ModelError::Invalid("ragged support points".into()));
        }
        if weights.iter().any(|&w| w < -Self::WEIGHT_TOL) {
            return Err(ModelError::Invalid("negative probability weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::WEIGHT_TOL {
            return Err(ModelError::Invalid(format!(
                "weights sum to {total}, expected 1 within {}",
                Self::WEIGHT_TOL
            )));
        }
        Ok(Self { points, weights })
    }

    /// The empirical distribution of a dataset: equal weight on every sample.
    pub fn empirical(ds: &UncertaintyDataset) -> Self {
        let n = ds.sample_count();
        Self {
            points: ds.deviations().to_vec(),
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}
