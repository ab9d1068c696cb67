//! Exact discrete optimal transport and a brute-force worst-case-expectation
//! oracle.
//!
//! The oracle restricts distributions to a finite grid over the support box
//! and embeds both transport couplings (to the empirical distribution, and —
//! for the copula-restricted set — between CDF images) into one LP. It exists
//! to validate the reformulation on desk-scale instances, so exactness beats
//! speed everywhere here.

use thiserror::Error;

use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, SolveOptions, SolveStatus, SolverBackend, VarId,
};
use crate::model::{AmbiguitySpec, DiscreteDistribution, GroundNorm, SupportPolytope, UncertaintyDataset};
use crate::stats::{copula_pseudo_observations, empirical_cdf_value};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("lp backend failed: {0}")]
    Backend(#[from] crate::lp::BackendError),
    #[error("lp solve ended with status {0:?}")]
    SolveStatus(SolveStatus),
    #[error("oracle instance too large: {0}")]
    TooLarge(String),
}

/// Optimal transport plan between two discrete distributions.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest marginal residual of the plan against the given weights.
    pub fn marginal_residual(&self, source: &[f64], target: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, row) in self.flow.iter().enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - source[m]).abs());
        }
        for n in 0..target.len() {
            let col: f64 = self.flow.iter().map(|row| row[n]).sum();
            worst = worst.max((col - target[n]).abs());
        }
        worst
    }
}

/// Order-1 Wasserstein distance under the chosen ground norm, solved as the
/// standard transportation LP.
pub fn wasserstein_distance(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    ground_norm: GroundNorm,
    backend: &dyn SolverBackend,
) -> Result<TransportPlan, TransportError> {
    if p.dim() != q.dim() {
        return Err(TransportError::DimensionMismatch(p.dim(), q.dim()));
    }
    let (np, nq) = (p.points.len(), q.points.len());
    let mut m = ModelBuilder::new();
    let mut flow = vec![vec![VarId(0); nq]; np];
    let mut obj = LinExpr::new();
    for (i, pi) in p.points.iter().enumerate() {
        for (j, qj) in q.points.iter().enumerate() {
            let v = m.nonneg_var();
            flow[i][j] = v;
            let diff: Vec<f64> = pi.iter().zip(qj).map(|(a, b)| a - b).collect();
            obj.push(v, ground_norm.eval(&diff));
        }
    }
    for (i, &w) in p.weights.iter().enumerate() {
        let mut row = LinExpr::new();
        for j in 0..nq {
            row.push(flow[i][j], 1.0);
        }
        m.eq(row, w);
    }
    for (j, &w) in q.weights.iter().enumerate() {
        let mut col = LinExpr::new();
        for i in 0..np {
            col.push(flow[i][j], 1.0);
        }
        m.eq(col, w);
    }
    m.set_objective(ObjSense::Minimize, obj);
    let res = backend.solve(&m, &SolveOptions::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(TransportError::SolveStatus(res.status));
    }
    Ok(TransportPlan {
        flow: flow
            .iter()
            .map(|row| row.iter().map(|&v| res.value(v)).collect())
            .collect(),
        cost: res.objective_value.expect("optimal"),
    })
}

/// Oracle outcome: either the worst-case value with the maximizing grid
/// weights, or a typed infeasibility report.
#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Optimal { value: f64, weights: Vec<f64>, grid: Vec<Vec<f64>> },
    Infeasible,
}

impl OracleOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { value, .. } => Some(*value),
            OracleOutcome::Infeasible => None,
        }
    }
}

/// Per-dimension grid: a uniform mesh over the support box joined with every
/// historical sample coordinate, so the empirical distribution itself is
/// always grid-representable.
pub fn oracle_grid(
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    grid_points_per_dim: usize,
) -> Vec<Vec<f64>> {
    let dim = ds.dim();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut axis: Vec<f64> = Vec::new();
        let (lo, hi) = (sp.xi_min[k], sp.xi_max[k]);
        let steps = grid_points_per_dim.max(2);
        for s in 0..steps {
            axis.push(lo + (hi - lo) * s as f64 / (steps - 1) as f64);
        }
        for row in ds.deviations() {
            axis.push(row[k].clamp(lo, hi));
        }
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        axis.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        axes.push(axis);
    }
    // Cartesian product.
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Worst case of `E_Q[a^T xi + b]` over grid-supported distributions subject
/// to the transport budget(s) of the ambiguity spec. The copula budget, when
/// present, couples the images of grid points and samples through the same
/// empirical marginal CDFs the reformulation uses.
pub fn oracle_worst_case_expectation(
    a: &[f64],
    b: f64,
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    grid_points_per_dim: usize,
    backend: &dyn SolverBackend,
) -> Result<OracleOutcome, TransportError> {
    if a.len() != ds.dim() {
        return Err(TransportError::DimensionMismatch(a.len(), ds.dim()));
    }
    let grid = oracle_grid(ds, sp, grid_points_per_dim);
    let values: Vec<f64> = grid
        .iter()
        .map(|x| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
        .collect();
    oracle_worst_case_value(&values, &grid, ds, spec, backend)
}

/// Generalized oracle: worst case of `E_Q[values]` for an arbitrary per-point
/// integrand on an explicit grid.
pub fn oracle_worst_case_value(
    values: &[f64],
    grid: &[Vec<f64>],
    ds: &UncertaintyDataset,
    spec: &AmbiguitySpec,
    backend: &dyn SolverBackend,
) -> Result<OracleOutcome, TransportError> {
    let n = ds.sample_count();
    let g = grid.len();
    if g.saturating_mul(n) > 40_000 {
        return Err(TransportError::TooLarge(format!("{g} grid points x {n} samples")));
    }

    // Ground-space distances grid <-> samples.
    let dist: Vec<Vec<f64>> = grid
        .iter()
        .map(|x| {
            ds.deviations()
                .iter()
                .map(|s| {
                    let diff: Vec<f64> = x.iter().zip(s).map(|(a, b)| a - b).collect();
                    spec.ground_norm.eval(&diff)
                })
                .collect()
        })
        .collect();

    // Copula-space distances between CDF images.
    let copula_dist: Option<Vec<Vec<f64>>> = spec.theta2.map(|_| {
        let u_hat = copula_pseudo_observations(ds);
        let columns: Vec<Vec<f64>> = (0..ds.dim()).map(|k| ds.column(k)).collect();
        grid.iter()
            .map(|x| {
                let u_x: Vec<f64> = x
                    .iter()
                    .zip(&columns)
                    .map(|(&xi, col)| empirical_cdf_value(col, xi).expect("nonempty"))
                    .collect();
                u_hat
                    .iter()
                    .map(|ui| {
                        let diff: Vec<f64> = u_x.iter().zip(ui).map(|(a, b)| a - b).collect();
                        spec.ground_norm.eval(&diff)
                    })
                    .collect()
            })
            .collect()
    });

    let mut m = ModelBuilder::new();
    let q: Vec<_> = (0..g).map(|_| m.nonneg_var()).collect();
    let flow1: Vec<Vec<_>> =
        (0..g).map(|_| (0..n).map(|_| m.nonneg_var()).collect()).collect();
    let flow2: Option<Vec<Vec<_>>> = copula_dist
        .as_ref()
        .map(|_| (0..g).map(|_| (0..n).map(|_| m.nonneg_var()).collect()).collect());

    let couple = |m: &mut ModelBuilder, flow: &Vec<Vec<VarId>>, dists: &[Vec<f64>], theta: f64| {
        for gi in 0..g {
            let mut row = LinExpr::new();
            for i in 0..n {
                row.push(flow[gi][i], 1.0);
            }
            row.push(q[gi], -1.0);
            m.eq(row, 0.0);
        }
        for i in 0..n {
            let mut col = LinExpr::new();
            for gi in 0..g {
                col.push(flow[gi][i], 1.0);
            }
            m.eq(col, 1.0 / n as f64);
        }
        let mut budget = LinExpr::new();
        for gi in 0..g {
            for i in 0..n {
                budget.push(flow[gi][i], dists[gi][i]);
            }
        }
        m.le(budget, theta);
    };

    couple(&mut m, &flow1, &dist, spec.theta1);
    if let (Some(flow2), Some(cd)) = (&flow2, &copula_dist) {
        couple(&mut m, flow2, cd, spec.theta2.expect("copula mode"));
    }

    let mut obj = LinExpr::new();
    for gi in 0..g {
        obj.push(q[gi], values[gi]);
    }
    m.set_objective(ObjSense::Maximize, obj);

    let res = backend.solve(&m, &SolveOptions::default())?;
    match res.status {
        SolveStatus::Optimal => Ok(OracleOutcome::Optimal {
            value: res.objective_value.expect("optimal"),
            weights: q.iter().map(|&v| res.value(v)).collect(),
            grid: grid.to_vec(),
        }),
        SolveStatus::Infeasible => Ok(OracleOutcome::Infeasible),
        other => Err(TransportError::SolveStatus(other)),
    }
}

/// Worst-case CVaR at level `eps` of the affine loss `a^T xi + b`, computed
/// by minimizing `tau + (1/eps) * WCE(hinge)` over the breakpoint candidates
/// of the piecewise-linear outer function.
pub fn oracle_worst_case_cvar(
    a: &[f64],
    b: f64,
    eps: f64,
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    grid_points_per_dim: usize,
    backend: &dyn SolverBackend,
) -> Result<Option<f64>, TransportError> {
    let grid = oracle_grid(ds, sp, grid_points_per_dim);
    let values: Vec<f64> = grid
        .iter()
        .map(|x| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
        .collect();
    // The outer objective is convex piecewise linear in tau with kinks only
    // at grid values, so scanning those is exact.
    let mut taus: Vec<f64> = values.clone();
    taus.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    taus.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let mut best: Option<f64> = None;
    for &tau in &taus {
        let hinge: Vec<f64> = values.iter().map(|&v| (v - tau).max(0.0)).collect();
        match oracle_worst_case_value(&hinge, &grid, ds, spec, backend)? {
            OracleOutcome::Optimal { value, .. } => {
                let cvar = tau + value / eps;
                best = Some(best.map_or(cvar, |b: f64| b.min(cvar)));
            }
            OracleOutcome::Infeasible => return Ok(None),
        }
    }
    Ok(best)
}
