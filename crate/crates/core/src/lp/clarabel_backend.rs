//! Adapter to the Clarabel interior-point solver (LP and second-order cones).

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus as ClStatus, SupportedConeT,
};

use super::{
    BackendError, ModelBuilder, ObjSense, RowSense, SolveOptions, SolveResult, SolveStatus,
    SolverBackend,
};

/// Clarabel adapter. Handles every model this crate produces; the conic rows
/// of the radial OPF require it.
#[derive(Debug, Clone, Default)]
pub struct ClarabelBackend;

impl SolverBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn supports_soc(&self) -> bool {
        true
    }

    fn solve(&self, model: &ModelBuilder, opts: &SolveOptions) -> Result<SolveResult, BackendError> {
        model.validate()?;
        let start = Instant::now();
        let n = model.num_vars();
        let sign = match model.sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };

        let mut q = vec![0.0; n];
        for &(v, c) in &model.objective.terms {
            q[v.index()] += sign * c;
        }

        // Constraint system A x + s = b with cone membership per segment:
        // equality rows (Zero cone), then inequality rows and finite bounds
        // (Nonnegative cone), then one SOC segment per cone row.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut row = 0usize;

        let mut n_eq = 0usize;
        for r in &model.rows {
            if r.sense == RowSense::Eq {
                push_expr(&mut triplets, row, &r.expr, 1.0);
                b.push(r.rhs - r.expr.constant);
                row += 1;
                n_eq += 1;
            }
        }
        let mut n_ineq = 0usize;
        for r in &model.rows {
            match r.sense {
                RowSense::Le => {
                    push_expr(&mut triplets, row, &r.expr, 1.0);
                    b.push(r.rhs - r.expr.constant);
                }
                RowSense::Ge => {
                    push_expr(&mut triplets, row, &r.expr, -1.0);
                    b.push(-(r.rhs - r.expr.constant));
                }
                RowSense::Eq => continue,
            }
            row += 1;
            n_ineq += 1;
        }
        for j in 0..n {
            let (lo, hi) = (model.lo[j], model.hi[j]);
            if hi.is_finite() {
                triplets.push((row, j, 1.0));
                b.push(hi);
                row += 1;
                n_ineq += 1;
            }
            if lo.is_finite() {
                triplets.push((row, j, -1.0));
                b.push(-lo);
                row += 1;
                n_ineq += 1;
            }
        }

        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        if n_ineq > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_ineq));
        }
        for soc in &model.socs {
            // s = b - A x must equal (bound, parts...) in the SOC.
            let dim = 1 + soc.norm_parts.len();
            push_expr(&mut triplets, row, &soc.bound, -1.0);
            b.push(soc.bound.constant);
            row += 1;
            for part in &soc.norm_parts {
                push_expr(&mut triplets, row, part, -1.0);
                b.push(part.constant);
                row += 1;
            }
            cones.push(SupportedConeT::SecondOrderConeT(dim));
        }

        let a = csc_from_triplets(row, n, &mut triplets);
        let p = CscMatrix::<f64>::zeros((n, n));

        let tol = opts.tolerance.clamp(1e-12, 1e-4);
        let settings = DefaultSettings::<f64> {
            verbose: false,
            max_iter: 400,
            time_limit: opts.time_limit.map(|d| d.as_secs_f64()).unwrap_or(f64::INFINITY),
            tol_gap_abs: tol,
            tol_gap_rel: tol,
            tol_feas: tol,
            ..DefaultSettings::default()
        };

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| BackendError::Malformed(format!("clarabel rejected the model: {e:?}")))?;
        solver.solve();

        let status = map_status(solver.solution.status);
        let primal = if solver.solution.x.len() == n {
            solver.solution.x.clone()
        } else {
            vec![0.0; n]
        };
        let objective_value = if status == SolveStatus::Optimal {
            Some(model.objective.value(&primal))
        } else {
            None
        };
        Ok(SolveResult { status, objective_value, primal, wall_time: start.elapsed() })
    }
}

fn push_expr(triplets: &mut Vec<(usize, usize, f64)>, row: usize, expr: &super::LinExpr, scale: f64) {
    let mut e = expr.clone();
    e.simplify();
    for &(v, c) in &e.terms {
        triplets.push((row, v.index(), c * scale));
    }
}

fn csc_from_triplets(m: usize, n: usize, triplets: &mut [(usize, usize, f64)]) -> CscMatrix<f64> {
    triplets.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut colptr = vec![0usize; n + 1];
    for &(_, c, _) in triplets.iter() {
        colptr[c + 1] += 1;
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    let rowval: Vec<usize> = triplets.iter().map(|&(r, _, _)| r).collect();
    let nzval: Vec<f64> = triplets.iter().map(|&(_, _, v)| v).collect();
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

fn map_status(s: ClStatus) -> SolveStatus {
    match s {
        ClStatus::Solved | ClStatus::AlmostSolved => SolveStatus::Optimal,
        ClStatus::PrimalInfeasible | ClStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        ClStatus::DualInfeasible | ClStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        ClStatus::MaxTime => SolveStatus::TimeLimit,
        _ => SolveStatus::NumericFailure,
    }
}
