//! Solver-agnostic model construction and solution interface.
//!
//! A [`ModelBuilder`] owns variables, linear rows, optional second-order-cone
//! rows and an affine objective. Backends implement [`SolverBackend`]; the
//! crate ships a self-contained dense simplex (LP only) and an adapter to the
//! Clarabel interior-point solver (LP + SOC).

mod clarabel_backend;
mod simplex;

pub use clarabel_backend::ClarabelBackend;
pub use simplex::DenseSimplex;

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

/// Handle to a decision variable of a [`ModelBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a linear row of a [`ModelBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowId(pub(crate) u32);

impl RowId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Affine form `sum coef_j * x_j + constant` over variables of one builder.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        Self { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn push(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// Adds `scale * other` term-by-term.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        if scale != 0.0 {
            self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
            self.constant += other.constant * scale;
        }
        self
    }

    /// True when the expression has no variable terms at all.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merges duplicate variable entries and drops zero coefficients.
    pub fn simplify(&mut self) -> &mut Self {
        self.terms.sort_by_key(|&(v, _)| v.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
        self
    }

    /// Evaluates the expression against a dense primal vector.
    pub fn value(&self, primal: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * primal[v.index()]).sum::<f64>() + self.constant
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::var(v)
    }
}

impl std::ops::Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl std::ops::Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl std::ops::Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        for (_, c) in &mut self.terms {
            *c *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

/// Row comparison sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// Objective direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub expr: LinExpr,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Second-order-cone row `|| norm_parts ||_2 <= bound`.
#[derive(Debug, Clone)]
pub struct SocRow {
    pub bound: LinExpr,
    pub norm_parts: Vec<LinExpr>,
}

/// In-memory optimization model: variables with bounds, linear rows, optional
/// second-order cones and one affine objective.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    pub(crate) lo: Vec<f64>,
    pub(crate) hi: Vec<f64>,
    pub(crate) rows: Vec<Row>,
    pub(crate) socs: Vec<SocRow>,
    pub(crate) objective: LinExpr,
    pub(crate) sense: ObjSense,
}

impl Default for ObjSense {
    fn default() -> Self {
        ObjSense::Minimize
    }
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lo: f64, hi: f64) -> VarId {
        debug_assert!(lo <= hi, "variable bounds must satisfy lo <= hi");
        let id = VarId(self.lo.len() as u32);
        self.lo.push(lo);
        self.hi.push(hi);
        id
    }

    pub fn free_var(&mut self) -> VarId {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn nonneg_var(&mut self) -> VarId {
        self.add_var(0.0, f64::INFINITY)
    }

    pub fn add_row(&mut self, expr: LinExpr, sense: RowSense, rhs: f64) -> RowId {
        debug_assert!(
            expr.terms.iter().all(|&(v, _)| v.index() < self.lo.len()),
            "row references a variable not created by this builder"
        );
        let id = RowId(self.rows.len() as u32);
        self.rows.push(Row { expr, sense, rhs });
        id
    }

    pub fn le(&mut self, expr: LinExpr, rhs: f64) -> RowId {
        self.add_row(expr, RowSense::Le, rhs)
    }

    pub fn ge(&mut self, expr: LinExpr, rhs: f64) -> RowId {
        self.add_row(expr, RowSense::Ge, rhs)
    }

    pub fn eq(&mut self, expr: LinExpr, rhs: f64) -> RowId {
        self.add_row(expr, RowSense::Eq, rhs)
    }

    pub fn add_soc(&mut self, bound: LinExpr, norm_parts: Vec<LinExpr>) -> usize {
        self.socs.push(SocRow { bound, norm_parts });
        self.socs.len() - 1
    }

    pub fn set_objective(&mut self, sense: ObjSense, expr: LinExpr) {
        self.sense = sense;
        self.objective = expr;
    }

    pub fn add_to_objective(&mut self, expr: &LinExpr) {
        self.objective.add_scaled(expr, 1.0);
    }

    pub fn num_vars(&self) -> usize {
        self.lo.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_socs(&self) -> usize {
        self.socs.len()
    }

    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        (self.lo[v.index()], self.hi[v.index()])
    }

    /// Checks structural invariants before a solve attempt.
    pub fn validate(&self) -> Result<(), BackendError> {
        for (j, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(BackendError::Malformed(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        let check_expr = |expr: &LinExpr, what: &str| -> Result<(), BackendError> {
            for &(v, c) in &expr.terms {
                if v.index() >= self.lo.len() {
                    return Err(BackendError::Malformed(format!(
                        "{what} references unknown variable {}",
                        v.index()
                    )));
                }
                if !c.is_finite() {
                    return Err(BackendError::Malformed(format!(
                        "{what} has non-finite coefficient on variable {}",
                        v.index()
                    )));
                }
            }
            Ok(())
        };
        for (r, row) in self.rows.iter().enumerate() {
            check_expr(&row.expr, &format!("row {r}"))?;
            if !row.rhs.is_finite() {
                return Err(BackendError::Malformed(format!("row {r} has non-finite rhs")));
            }
        }
        for (s, soc) in self.socs.iter().enumerate() {
            check_expr(&soc.bound, &format!("soc {s} bound"))?;
            for part in &soc.norm_parts {
                check_expr(part, &format!("soc {s} norm part"))?;
            }
        }
        check_expr(&self.objective, "objective")
    }

    /// Renders the model in LP text format with index-stable ordering.
    pub fn lp_format(&self) -> String {
        let mut out = String::new();
        let dir = match self.sense {
            ObjSense::Minimize => "Minimize",
            ObjSense::Maximize => "Maximize",
        };
        let write_expr = |out: &mut String, expr: &LinExpr| {
            let mut e = expr.clone();
            e.simplify();
            if e.terms.is_empty() {
                let _ = write!(out, "0");
            }
            for (i, (v, c)) in e.terms.iter().enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:+} x{}", v.index());
                } else {
                    let _ = write!(out, " {c:+} x{}", v.index());
                }
            }
        };
        let _ = writeln!(out, "\\ {} vars, {} rows", self.num_vars(), self.num_rows());
        let _ = writeln!(out, "{dir}");
        out.push_str(" obj: ");
        write_expr(&mut out, &self.objective);
        let _ = writeln!(out, " {:+}", self.objective.constant);
        let _ = writeln!(out, "Subject To");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{r}: ");
            write_expr(&mut out, &row.expr);
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs - row.expr.constant);
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            let _ = writeln!(out, " {} <= x{j} <= {}", self.lo[j], self.hi[j]);
        }
        let _ = writeln!(out, "End");
        out
    }
}

/// Termination status of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
    TimeLimit,
}

/// Outcome of one solve. `objective_value` is present iff the status is
/// `Optimal`.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective_value: Option<f64>,
    pub primal: Vec<f64>,
    pub wall_time: Duration,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.index()]
    }

    pub fn expr_value(&self, e: &LinExpr) -> f64 {
        e.value(&self.primal)
    }
}

/// Per-solve options.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Option<Duration>,
    /// Feasibility/optimality tolerance passed to the backend.
    pub tolerance: f64,
    /// When set, the model is dumped in LP text format to this path before
    /// solving.
    pub dump_path: Option<std::path::PathBuf>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { time_limit: None, tolerance: 1e-9, dump_path: None }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend misconfigured: {0}")]
    Misconfigured(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("model too large for the {backend} backend: {rows} rows x {cols} cols")]
    TooLarge { backend: &'static str, rows: usize, cols: usize },
    #[error("model uses second-order cones but the {0} backend is LP-only")]
    ConesUnsupported(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A solver adapter. Implementations must be deterministic for a fixed model
/// and options.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn supports_soc(&self) -> bool;
    fn solve(&self, model: &ModelBuilder, opts: &SolveOptions) -> Result<SolveResult, BackendError>;

    /// Validates, optionally dumps, then solves.
    fn run(&self, model: &ModelBuilder, opts: &SolveOptions) -> Result<SolveResult, BackendError>
    where
        Self: Sized,
    {
        model.validate()?;
        if let Some(path) = &opts.dump_path {
            std::fs::write(path, model.lp_format())?;
        }
        self.solve(model, opts)
    }
}

/// Looks up a backend by name. Unknown names are a configuration error, which
/// callers surface before any solve attempt.
pub fn backend_from_name(name: &str) -> Result<Box<dyn SolverBackend>, BackendError> {
    match name {
        "simplex" => Ok(Box::new(DenseSimplex::default())),
        "clarabel" => Ok(Box::new(ClarabelBackend::default())),
        other => Err(BackendError::Misconfigured(format!(
            "unknown backend '{other}' (expected 'simplex' or 'clarabel')"
        ))),
    }
}

/// Solves with validation and the optional dump applied.
pub fn solve_model(
    backend: &dyn SolverBackend,
    model: &ModelBuilder,
    opts: &SolveOptions,
) -> Result<SolveResult, BackendError> {
    model.validate()?;
    if let Some(path) = &opts.dump_path {
        std::fs::write(path, model.lp_format())?;
    }
    backend.solve(model, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linexpr_simplify_merges_terms() {
        let mut e = LinExpr::new();
        e.push(VarId(1), 2.0).push(VarId(0), 1.0).push(VarId(1), -2.0).push(VarId(2), 3.0);
        e.simplify();
        assert_eq!(e.terms, vec![(VarId(0), 1.0), (VarId(2), 3.0)]);
    }

    #[test]
    fn validate_rejects_foreign_handles() {
        let mut good = ModelBuilder::new();
        let x = good.add_var(0.0, 1.0);
        let _ = x;
        let bad = ModelBuilder::new();
        let mut m = ModelBuilder::new();
        m.add_var(0.0, 1.0);
        m.objective.push(VarId(5), 1.0);
        assert!(m.validate().is_err());
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn lp_format_is_stable() {
        let mut m = ModelBuilder::new();
        let x = m.add_var(0.0, 10.0);
        let y = m.free_var();
        m.le(LinExpr::var(x) + LinExpr::var(y), 4.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(x) * 2.0 + LinExpr::var(y));
        let a = m.lp_format();
        let b = m.lp_format();
        assert_eq!(a, b);
        assert!(a.contains("Subject To"));
    }
}
