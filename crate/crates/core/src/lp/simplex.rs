//! Self-contained dense simplex backend.
//!
//! Two-phase revised simplex with bounded variables and an explicitly
//! maintained dense basis inverse. Intended for desk-scale models: unit
//! tests, oracle LPs and CI runs that must not depend on external solvers.
//! Larger models belong to the Clarabel backend.

use std::time::Instant;

use super::{
    BackendError, ModelBuilder, ObjSense, RowSense, SolveOptions, SolveResult, SolveStatus,
    SolverBackend,
};

/// Dense bounded-variable simplex. LP only; refuses cone rows and models
/// beyond its size cap.
#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Hard cap on rows * columns of the working matrix.
    pub max_cells: usize,
    /// Hard cap on rows.
    pub max_rows: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self { max_cells: 80_000_000, max_rows: 8_000 }
    }
}

const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_SWITCH: u32 = 400;
const REFACTOR_EVERY: u32 = 128;

/// Equality-form problem: structural columns, one slack per row, one signed
/// artificial per row. Columns are sparse; the basis inverse is dense.
struct Tableau {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
}

impl Tableau {
    fn art_base(&self) -> usize {
        self.cols.len() - self.m
    }
}

#[derive(Clone, Copy, PartialEq)]
enum NonbasicAt {
    Lower,
    Upper,
    Free,
}

struct State {
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    at: Vec<NonbasicAt>,
    x: Vec<f64>,
    /// Dense basis inverse, row-major m x m.
    binv: Vec<f64>,
    pivots_since_refactor: u32,
    degenerate_streak: u32,
}

enum IterOutcome {
    Optimal,
    Unbounded,
    TimeLimit,
    Numeric,
}

impl SolverBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn supports_soc(&self) -> bool {
        false
    }

    fn solve(&self, model: &ModelBuilder, opts: &SolveOptions) -> Result<SolveResult, BackendError> {
        model.validate()?;
        if !model.socs.is_empty() {
            return Err(BackendError::ConesUnsupported("simplex"));
        }
        let start = Instant::now();
        let m = model.num_rows();
        let n = model.num_vars();
        if m > self.max_rows || m.saturating_mul(n + 2 * m) > self.max_cells {
            return Err(BackendError::TooLarge { backend: "simplex", rows: m, cols: n });
        }

        let (mut tab, mut st) = build(model);
        let deadline = opts.time_limit.map(|d| start + d);
        let tol = opts.tolerance.max(1e-12).min(1e-7);

        // Phase 1: drive artificials to zero.
        let art_base = tab.art_base();
        let p1: Vec<f64> =
            (0..tab.cols.len()).map(|j| if j >= art_base { 1.0 } else { 0.0 }).collect();
        match iterate(&tab, &mut st, &p1, tol, deadline, true) {
            IterOutcome::Optimal => {}
            IterOutcome::TimeLimit => return Ok(finish(SolveStatus::TimeLimit, n, start)),
            _ => return Ok(finish(SolveStatus::NumericFailure, n, start)),
        }
        let infeas: f64 = (art_base..tab.cols.len()).map(|j| st.x[j].abs()).sum();
        if infeas > 1e-7 {
            return Ok(finish(SolveStatus::Infeasible, n, start));
        }

        // Phase 2: real objective, artificials pinned at zero.
        for j in art_base..tab.cols.len() {
            tab.lo[j] = 0.0;
            tab.hi[j] = 0.0;
        }
        let sign = match model.sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };
        let mut p2 = vec![0.0; tab.cols.len()];
        for &(v, c) in &model.objective.terms {
            p2[v.index()] += sign * c;
        }
        st.degenerate_streak = 0;
        match iterate(&tab, &mut st, &p2, tol, deadline, false) {
            IterOutcome::Optimal => {}
            IterOutcome::TimeLimit => return Ok(finish(SolveStatus::TimeLimit, n, start)),
            IterOutcome::Unbounded => return Ok(finish(SolveStatus::Unbounded, n, start)),
            IterOutcome::Numeric => return Ok(finish(SolveStatus::NumericFailure, n, start)),
        }

        let primal: Vec<f64> = st.x[..n].to_vec();
        let objective = model.objective.value(&primal);
        Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective_value: Some(objective),
            primal,
            wall_time: start.elapsed(),
        })
    }
}

fn finish(status: SolveStatus, n: usize, start: Instant) -> SolveResult {
    SolveResult { status, objective_value: None, primal: vec![0.0; n], wall_time: start.elapsed() }
}

fn build(model: &ModelBuilder) -> (Tableau, State) {
    let m = model.num_rows();
    let n = model.num_vars();
    let ncols = n + 2 * m;
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    let mut lo = Vec::with_capacity(ncols);
    let mut hi = Vec::with_capacity(ncols);
    lo.extend_from_slice(&model.lo);
    hi.extend_from_slice(&model.hi);

    let mut rhs = vec![0.0; m];
    for (r, row) in model.rows.iter().enumerate() {
        let mut e = row.expr.clone();
        e.simplify();
        for &(v, c) in &e.terms {
            cols[v.index()].push((r, c));
        }
        rhs[r] = row.rhs - e.constant;
        // Slack: expr + s = rhs.
        cols[n + r].push((r, 1.0));
        let (slo, shi) = match row.sense {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        lo.push(slo);
        hi.push(shi);
    }

    // Initial nonbasic point.
    let mut x = vec![0.0; ncols];
    let mut at = vec![NonbasicAt::Free; ncols];
    for j in 0..n + m {
        if lo[j].is_finite() {
            x[j] = lo[j];
            at[j] = NonbasicAt::Lower;
        } else if hi[j].is_finite() {
            x[j] = hi[j];
            at[j] = NonbasicAt::Upper;
        }
    }
    let mut resid = rhs.clone();
    for (j, col) in cols.iter().enumerate().take(n + m) {
        if x[j] != 0.0 {
            for &(r, c) in col {
                resid[r] -= c * x[j];
            }
        }
    }

    // Signed artificials absorb the residual with nonnegative values.
    let mut binv = vec![0.0; m * m];
    let mut basis = Vec::with_capacity(m);
    let mut in_basis = vec![false; ncols];
    for r in 0..m {
        let j = n + m + r;
        let s = if resid[r] < 0.0 { -1.0 } else { 1.0 };
        cols[j].push((r, s));
        lo.push(0.0);
        hi.push(f64::INFINITY);
        x[j] = resid[r].abs();
        binv[r * m + r] = s;
        basis.push(j);
        in_basis[j] = true;
    }

    (
        Tableau { m, cols, lo, hi, rhs },
        State { basis, in_basis, at, x, binv, pivots_since_refactor: 0, degenerate_streak: 0 },
    )
}

fn iterate(
    tab: &Tableau,
    st: &mut State,
    cost: &[f64],
    tol: f64,
    deadline: Option<Instant>,
    phase1: bool,
) -> IterOutcome {
    let m = tab.m;
    let ncols = tab.cols.len();
    let art_base = tab.art_base();
    let max_iters = 2_000 + 40 * (ncols + m);
    let mut y = vec![0.0; m];
    let mut w = vec![0.0; m];

    for iter in 0..max_iters {
        if let Some(dl) = deadline {
            if iter % 64 == 0 && Instant::now() > dl {
                return IterOutcome::TimeLimit;
            }
        }
        if st.pivots_since_refactor >= REFACTOR_EVERY && !refactor(tab, st) {
            return IterOutcome::Numeric;
        }

        // y = c_B^T B^-1
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &bj) in st.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                let row = &st.binv[r * m..(r + 1) * m];
                for (k, &v) in row.iter().enumerate() {
                    y[k] += cb * v;
                }
            }
        }

        // Pricing: Dantzig with a Bland fallback after a degenerate streak.
        let bland = st.degenerate_streak >= DEGENERATE_SWITCH;
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..ncols {
            if st.in_basis[j] || tab.lo[j] == tab.hi[j] || (!phase1 && j >= art_base) {
                continue;
            }
            let mut d = cost[j];
            for &(r, c) in &tab.cols[j] {
                d -= y[r] * c;
            }
            let dir = match st.at[j] {
                NonbasicAt::Lower if d < -tol => 1.0,
                NonbasicAt::Upper if d > tol => -1.0,
                NonbasicAt::Free if d < -tol => 1.0,
                NonbasicAt::Free if d > tol => -1.0,
                _ => continue,
            };
            if bland {
                enter = Some((j, d, dir));
                break;
            }
            match enter {
                Some((_, best, _)) if d.abs() <= best.abs() => {}
                _ => enter = Some((j, d, dir)),
            }
        }
        let Some((j_in, _, dir)) = enter else {
            return IterOutcome::Optimal;
        };

        // w = B^-1 A_j
        w.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c) in &tab.cols[j_in] {
            if c != 0.0 {
                for i in 0..m {
                    w[i] += st.binv[i * m + r] * c;
                }
            }
        }

        // Ratio test; entering's own bound range allows a bound flip.
        let own_range = tab.hi[j_in] - tab.lo[j_in];
        let mut t_best = if own_range.is_finite() { own_range } else { f64::INFINITY };
        let mut leave: Option<(usize, bool)> = None;
        for (i, &bj) in st.basis.iter().enumerate() {
            let delta = -dir * w[i];
            if delta > PIVOT_TOL {
                if tab.hi[bj].is_finite() {
                    let t = ((tab.hi[bj] - st.x[bj]) / delta).max(0.0);
                    if t < t_best - 1e-12
                        || (t < t_best + 1e-12 && prefer_leave(st, &w, leave, i))
                    {
                        t_best = t;
                        leave = Some((i, true));
                    }
                }
            } else if delta < -PIVOT_TOL && tab.lo[bj].is_finite() {
                let t = ((tab.lo[bj] - st.x[bj]) / delta).max(0.0);
                if t < t_best - 1e-12 || (t < t_best + 1e-12 && prefer_leave(st, &w, leave, i)) {
                    t_best = t;
                    leave = Some((i, false));
                }
            }
        }

        if !t_best.is_finite() {
            return if phase1 { IterOutcome::Numeric } else { IterOutcome::Unbounded };
        }
        st.degenerate_streak = if t_best <= 1e-12 { st.degenerate_streak + 1 } else { 0 };

        let t = t_best;
        for (i, &bj) in st.basis.iter().enumerate() {
            st.x[bj] -= t * dir * w[i];
        }
        st.x[j_in] += t * dir;

        match leave {
            None => {
                st.at[j_in] = match st.at[j_in] {
                    NonbasicAt::Lower => NonbasicAt::Upper,
                    NonbasicAt::Upper => NonbasicAt::Lower,
                    NonbasicAt::Free => NonbasicAt::Free,
                };
            }
            Some((l, hit_upper)) => {
                let j_out = st.basis[l];
                let piv = w[l];
                if piv.abs() < PIVOT_TOL {
                    return IterOutcome::Numeric;
                }
                // Eta update of the dense inverse.
                let pivot_row: Vec<f64> =
                    st.binv[l * m..(l + 1) * m].iter().map(|v| v / piv).collect();
                for i in 0..m {
                    if i == l {
                        continue;
                    }
                    let f = w[i];
                    if f != 0.0 {
                        let row = &mut st.binv[i * m..(i + 1) * m];
                        for (k, pv) in pivot_row.iter().enumerate() {
                            row[k] -= f * pv;
                        }
                    }
                }
                st.binv[l * m..(l + 1) * m].copy_from_slice(&pivot_row);

                st.basis[l] = j_in;
                st.in_basis[j_in] = true;
                st.in_basis[j_out] = false;
                st.at[j_out] = if hit_upper { NonbasicAt::Upper } else { NonbasicAt::Lower };
                st.x[j_out] = if hit_upper { tab.hi[j_out] } else { tab.lo[j_out] };
                st.pivots_since_refactor += 1;
            }
        }
    }
    IterOutcome::Numeric
}

fn prefer_leave(_st: &State, w: &[f64], current: Option<(usize, bool)>, cand: usize) -> bool {
    match current {
        None => true,
        Some((i, _)) => w[cand].abs() > w[i].abs() + 1e-12,
    }
}

/// Rebuilds the dense inverse by Gauss-Jordan and recomputes basic values.
fn refactor(tab: &Tableau, st: &mut State) -> bool {
    let m = tab.m;
    if m == 0 {
        st.pivots_since_refactor = 0;
        return true;
    }
    let width = 2 * m;
    let mut mat = vec![0.0; m * width];
    for (col, &bj) in st.basis.iter().enumerate() {
        for &(r, c) in &tab.cols[bj] {
            mat[r * width + col] = c;
        }
    }
    for r in 0..m {
        mat[r * width + m + r] = 1.0;
    }
    for col in 0..m {
        let mut piv_row = col;
        let mut piv_val = mat[col * width + col].abs();
        for r in col + 1..m {
            let v = mat[r * width + col].abs();
            if v > piv_val {
                piv_val = v;
                piv_row = r;
            }
        }
        if piv_val < 1e-12 {
            return false;
        }
        if piv_row != col {
            for k in 0..width {
                mat.swap(col * width + k, piv_row * width + k);
            }
        }
        let piv = mat[col * width + col];
        for k in 0..width {
            mat[col * width + k] /= piv;
        }
        for r in 0..m {
            if r != col {
                let f = mat[r * width + col];
                if f != 0.0 {
                    for k in 0..width {
                        mat[r * width + k] -= f * mat[col * width + k];
                    }
                }
            }
        }
    }
    for r in 0..m {
        for k in 0..m {
            st.binv[r * m + k] = mat[r * width + m + k];
        }
    }
    let mut rhs = tab.rhs.clone();
    for (j, col) in tab.cols.iter().enumerate() {
        if !st.in_basis[j] && st.x[j] != 0.0 {
            for &(r, c) in col {
                rhs[r] -= c * st.x[j];
            }
        }
    }
    for (i, &bj) in st.basis.iter().enumerate() {
        let mut v = 0.0;
        for r in 0..m {
            v += st.binv[i * m + r] * rhs[r];
        }
        st.x[bj] = v;
    }
    st.pivots_since_refactor = 0;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinExpr, ModelBuilder, ObjSense};

    fn solve(m: &ModelBuilder) -> SolveResult {
        DenseSimplex::default().solve(m, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn one_var_lower_bound() {
        let mut m = ModelBuilder::new();
        let x = m.free_var();
        m.ge(LinExpr::var(x), 3.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(x));
        let r = solve(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective_value.unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = ModelBuilder::new();
        let x = m.free_var();
        m.ge(LinExpr::var(x), 3.0);
        m.le(LinExpr::var(x), 2.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(x));
        let r = solve(&m);
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.objective_value.is_none());
    }

    #[test]
    fn unbounded_is_detected() {
        let mut m = ModelBuilder::new();
        let x = m.free_var();
        m.le(LinExpr::var(x), 5.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(x));
        let r = solve(&m);
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn no_rows_bound_flips_only() {
        let mut m = ModelBuilder::new();
        let x = m.add_var(-1.0, 2.0);
        m.set_objective(ObjSense::Maximize, LinExpr::var(x) * 3.0);
        let r = solve(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.value(x) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bounded_vars_and_maximize() {
        let mut m = ModelBuilder::new();
        let x = m.add_var(0.0, 4.0);
        let y = m.add_var(0.0, 3.0);
        m.le(LinExpr::var(x) + LinExpr::var(y), 5.0);
        m.set_objective(ObjSense::Maximize, LinExpr::var(x) * 2.0 + LinExpr::var(y) * 3.0);
        let r = solve(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective_value.unwrap() - 13.0).abs() < 1e-8);
    }

    #[test]
    fn equality_rows() {
        let mut m = ModelBuilder::new();
        let x = m.nonneg_var();
        let y = m.nonneg_var();
        m.eq(LinExpr::var(x) + LinExpr::var(y), 10.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(x) * 3.0 + LinExpr::var(y) * 5.0);
        let r = solve(&m);
        assert!((r.objective_value.unwrap() - 30.0).abs() < 1e-8);
        assert!((r.value(x) - 10.0).abs() < 1e-8);
    }

    #[test]
    fn negative_bounds_and_free_vars() {
        let mut m = ModelBuilder::new();
        let x = m.add_var(-5.0, -1.0);
        let y = m.free_var();
        m.eq(LinExpr::var(y) - LinExpr::var(x), 0.0);
        m.set_objective(ObjSense::Minimize, LinExpr::var(y));
        let r = solve(&m);
        assert!((r.objective_value.unwrap() + 5.0).abs() < 1e-8);
    }

    #[test]
    fn resolve_is_deterministic() {
        let mut m = ModelBuilder::new();
        let x = m.add_var(0.0, 4.0);
        let y = m.add_var(0.0, 3.0);
        m.le(LinExpr::var(x) + LinExpr::var(y) * 2.0, 6.0);
        m.set_objective(ObjSense::Maximize, LinExpr::var(x) + LinExpr::var(y));
        let a = solve(&m);
        let b = solve(&m);
        assert_eq!(a.status, b.status);
        assert!((a.objective_value.unwrap() - b.objective_value.unwrap()).abs() < 1e-12);
        assert_eq!(a.primal, b.primal);
    }

    #[test]
    fn nonbinding_row_removal_keeps_optimum() {
        let mut with_row = ModelBuilder::new();
        let x = with_row.add_var(0.0, 4.0);
        let y = with_row.add_var(0.0, 3.0);
        with_row.le(LinExpr::var(x) + LinExpr::var(y), 5.0);
        with_row.le(LinExpr::var(x) * 0.1 + LinExpr::var(y) * 0.1, 100.0); // slack
        with_row
            .set_objective(ObjSense::Maximize, LinExpr::var(x) * 2.0 + LinExpr::var(y) * 3.0);
        let mut without = ModelBuilder::new();
        let x2 = without.add_var(0.0, 4.0);
        let y2 = without.add_var(0.0, 3.0);
        without.le(LinExpr::var(x2) + LinExpr::var(y2), 5.0);
        without.set_objective(ObjSense::Maximize, LinExpr::var(x2) * 2.0 + LinExpr::var(y2) * 3.0);
        let a = solve(&with_row).objective_value.unwrap();
        let b = solve(&without).objective_value.unwrap();
        assert!((a - b).abs() < 1e-7);
    }

    /// Brute-force vertex enumeration for small LPs with box bounds.
    fn vertex_enum_min(c: &[f64], rows: &[(Vec<f64>, f64)], lo: &[f64], hi: &[f64]) -> Option<f64> {
        let n = c.len();
        let mut planes: Vec<(Vec<f64>, f64)> = rows.to_vec();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), lo[j]));
            planes.push((e, hi[j]));
        }
        let np = planes.len();
        let mut best: Option<f64> = None;

        fn combos(np: usize, k: usize, start: usize, idx: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
            if k == 0 {
                f(idx);
                return;
            }
            for i in start..np {
                idx.push(i);
                combos(np, k - 1, i + 1, idx, f);
                idx.pop();
            }
        }

        let mut idx = Vec::new();
        combos(np, n, 0, &mut idx, &mut |active: &[usize]| {
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (r, &pi) in active.iter().enumerate() {
                a[r * n..r * n + n].copy_from_slice(&planes[pi].0);
                b[r] = planes[pi].1;
            }
            for col in 0..n {
                let mut piv = col;
                for r in col + 1..n {
                    if a[r * n + col].abs() > a[piv * n + col].abs() {
                        piv = r;
                    }
                }
                if a[piv * n + col].abs() < 1e-9 {
                    return;
                }
                if piv != col {
                    for k in 0..n {
                        a.swap(col * n + k, piv * n + k);
                    }
                    b.swap(col, piv);
                }
                for r in 0..n {
                    if r != col {
                        let f = a[r * n + col] / a[col * n + col];
                        if f != 0.0 {
                            for k in 0..n {
                                a[r * n + k] -= f * a[col * n + k];
                            }
                            b[r] -= f * b[col];
                        }
                    }
                }
            }
            let x: Vec<f64> = (0..n).map(|j| b[j] / a[j * n + j]).collect();
            for (av, bv) in rows {
                let lhs: f64 = av.iter().zip(&x).map(|(a, x)| a * x).sum();
                if lhs > bv + 1e-7 {
                    return;
                }
            }
            for j in 0..n {
                if x[j] < lo[j] - 1e-7 || x[j] > hi[j] + 1e-7 {
                    return;
                }
            }
            let val: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(val, |b: f64| b.min(val)));
        });
        best
    }

    #[test]
    fn random_polytopes_match_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let mut checked = 0;
        for _ in 0..200 {
            let n = rng.random_range(1..=3);
            let nrows = rng.random_range(1..=4);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.5..3.0)).collect();
            let rows: Vec<(Vec<f64>, f64)> = (0..nrows)
                .map(|_| {
                    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    (a, rng.random_range(-0.5..2.0))
                })
                .collect();
            let expect = vertex_enum_min(&c, &rows, &lo, &hi);

            let mut m = ModelBuilder::new();
            let vars: Vec<_> = (0..n).map(|j| m.add_var(lo[j], hi[j])).collect();
            for (a, b) in &rows {
                let mut e = LinExpr::new();
                for (j, &aj) in a.iter().enumerate() {
                    e.push(vars[j], aj);
                }
                m.le(e, *b);
            }
            let mut obj = LinExpr::new();
            for (j, &cj) in c.iter().enumerate() {
                obj.push(vars[j], cj);
            }
            m.set_objective(ObjSense::Minimize, obj);
            let r = solve(&m);
            match expect {
                Some(v) => {
                    assert_eq!(r.status, SolveStatus::Optimal, "expected optimal, got {:?}", r.status);
                    assert!(
                        (r.objective_value.unwrap() - v).abs() < 1e-7,
                        "simplex {} vs enumeration {}",
                        r.objective_value.unwrap(),
                        v
                    );
                    checked += 1;
                }
                None => assert_eq!(r.status, SolveStatus::Infeasible),
            }
        }
        assert!(checked > 50, "too few feasible random instances: {checked}");
    }
}
