//! Day-ahead distributionally robust DC optimal power flow with linear
//! decision rules and CVaR-approximated chance constraints.
//!
//! The model dispatches energy and reserves, couples real-time recourse to
//! wind deviations through a dense participation matrix, prices the
//! worst-case recourse cost through one expectation block, and protects
//! reserve activations and line flows with chance constraints. Line limits
//! are enforced in both flow directions; the single-sided statement would
//! leave reverse flows unbounded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_dense;
use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, SolveOptions, SolveResult, SolveStatus, SolverBackend, VarId,
};
use crate::model::{AffineUncertainExpression, AmbiguitySpec, UncertaintyDataset};
use crate::wce::{containment_vbar, cvar_drcc, default_vbar, CvarDrcc, DrccSpec, WceBlock};

#[derive(Debug, Error)]
pub enum OpfError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("network data invalid: {0}")]
    Network(String),
    #[error("reformulation failed: {0}")]
    Wce(#[from] crate::wce::WceError),
    #[error("lp backend failed: {0}")]
    Backend(#[from] crate::lp::BackendError),
    #[error("solver ended with status {0:?}")]
    Solver(SolveStatus),
    #[error("network file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("network file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub node: usize,
    /// Energy cost, $/MWh.
    pub cost: f64,
    /// Upward reserve procurement cost, $/MW.
    pub cost_res_up: f64,
    /// Downward reserve procurement cost, $/MW.
    pub cost_res_dn: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Load {
    pub node: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcLine {
    pub from: usize,
    pub to: usize,
    /// Series reactance, per unit.
    pub reactance: f64,
    /// Thermal capacity, MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindFarm {
    pub node: usize,
    /// Installed capacity, MW.
    pub capacity: f64,
}

/// Meshed transmission network for the DC model. Nodes are 0-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcNetwork {
    pub n_nodes: usize,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub lines: Vec<DcLine>,
    pub wind: Vec<WindFarm>,
    /// Power transfer distribution factors, `[line][node]`, derived from the
    /// line reactances when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptdf: Option<Vec<Vec<f64>>>,
}

impl DcNetwork {
    pub fn validate(&self) -> Result<(), OpfError> {
        let check_node = |n: usize, what: &str| {
            if n >= self.n_nodes {
                Err(OpfError::Network(format!("{what} node {n} out of range")))
            } else {
                Ok(())
            }
        };
        for g in &self.generators {
            check_node(g.node, "generator")?;
            if g.g_min > g.g_max || g.r_max < 0.0 {
                return Err(OpfError::Network(format!(
                    "generator at node {} has inconsistent limits",
                    g.node
                )));
            }
        }
        for l in &self.loads {
            check_node(l.node, "load")?;
        }
        for w in &self.wind {
            check_node(w.node, "wind farm")?;
            if w.capacity <= 0.0 {
                return Err(OpfError::Network("wind capacity must be positive".into()));
            }
        }
        for ln in &self.lines {
            check_node(ln.from, "line")?;
            check_node(ln.to, "line")?;
            if ln.reactance <= 0.0 || ln.capacity <= 0.0 {
                return Err(OpfError::Network(format!(
                    "line {}-{} needs positive reactance and capacity",
                    ln.from, ln.to
                )));
            }
        }
        Ok(())
    }

    /// Nodal PTDF matrix `[line][node]` with node 0 as the reference. Flows
    /// of balanced injection vectors are reference-independent.
    pub fn ptdf_matrix(&self) -> Result<Vec<Vec<f64>>, OpfError> {
        if let Some(p) = &self.ptdf {
            if p.len() != self.lines.len() || p.iter().any(|r| r.len() != self.n_nodes) {
                return Err(OpfError::Network("ptdf block has wrong shape".into()));
            }
            return Ok(p.clone());
        }
        let n = self.n_nodes;
        let m = n - 1; // reduced system without the reference node
        let mut bbus = vec![0.0; m * m];
        for ln in &self.lines {
            let b = 1.0 / ln.reactance;
            let (f, t) = (ln.from, ln.to);
            if f > 0 {
                bbus[(f - 1) * m + (f - 1)] += b;
            }
            if t > 0 {
                bbus[(t - 1) * m + (t - 1)] += b;
            }
            if f > 0 && t > 0 {
                bbus[(f - 1) * m + (t - 1)] -= b;
                bbus[(t - 1) * m + (f - 1)] -= b;
            }
        }
        let mut ptdf = vec![vec![0.0; n]; self.lines.len()];
        // Column per non-reference node: theta = Bbus^-1 e_node, then the
        // line flow sensitivity is b * (theta_from - theta_to).
        for node in 1..n {
            let mut e = vec![0.0; m];
            e[node - 1] = 1.0;
            let theta = solve_dense(&bbus, m, &e).ok_or_else(|| {
                OpfError::Network("network graph is disconnected or singular".into())
            })?;
            for (li, ln) in self.lines.iter().enumerate() {
                let tf = if ln.from == 0 { 0.0 } else { theta[ln.from - 1] };
                let tt = if ln.to == 0 { 0.0 } else { theta[ln.to - 1] };
                ptdf[li][node] = (tf - tt) / ln.reactance;
            }
        }
        Ok(ptdf)
    }

    pub fn total_demand(&self) -> f64 {
        self.loads.iter().map(|l| l.demand).sum()
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<(), OpfError> {
        let mut with_ptdf = self.clone();
        with_ptdf.ptdf = Some(self.ptdf_matrix()?);
        std::fs::write(path, serde_json::to_string_pretty(&with_ptdf)?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self, OpfError> {
        let net: DcNetwork = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        net.validate()?;
        Ok(net)
    }
}

/// Violation levels, one per chance-constraint class.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrccLevels {
    pub reserve: f64,
    pub line: f64,
}

impl Default for DrccLevels {
    fn default() -> Self {
        Self { reserve: 0.05, line: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct DcOpfOptions {
    pub eps: DrccLevels,
    /// Dual-variable cap; defaults to 10/N.
    pub vbar: Option<f64>,
    /// Use the projected copula form (value-identical, much smaller).
    pub projected: bool,
    pub max_vbar_doublings: u32,
    pub solve: SolveOptions,
}

impl Default for DcOpfOptions {
    fn default() -> Self {
        Self {
            eps: DrccLevels::default(),
            vbar: None,
            projected: true,
            max_vbar_doublings: 6,
            solve: SolveOptions::default(),
        }
    }
}

/// Handles of one built day-ahead model.
pub struct DcOpfHandles {
    pub g: Vec<VarId>,
    pub r_up: Vec<VarId>,
    pub r_dn: Vec<VarId>,
    pub participation: Vec<Vec<VarId>>,
    pub objective_block: WceBlock,
    pub drccs: Vec<(String, CvarDrcc)>,
    pub day_ahead_cost: LinExpr,
}

/// Builds the full day-ahead model into `model`.
pub fn build_dc_opf(
    net: &DcNetwork,
    ds: &UncertaintyDataset,
    spec: &AmbiguitySpec,
    opts: &DcOpfOptions,
    vbar: f64,
    model: &mut ModelBuilder,
) -> Result<DcOpfHandles, OpfError> {
    net.validate()?;
    if ds.dim() != net.wind.len() {
        return Err(OpfError::Dimension(format!(
            "dataset has {} farms, network has {}",
            ds.dim(),
            net.wind.len()
        )));
    }
    for (w, farm) in net.wind.iter().enumerate() {
        if (ds.capacities()[w] - farm.capacity).abs() > 1e-6 {
            return Err(OpfError::Dimension(format!(
                "farm {w}: dataset capacity {} vs network capacity {}",
                ds.capacities()[w],
                farm.capacity
            )));
        }
    }
    let sp = ds.implied_support();
    let np = net.generators.len();
    let nw = net.wind.len();

    let g: Vec<VarId> = net.generators.iter().map(|_| model.free_var()).collect();
    let r_up: Vec<VarId> = net.generators.iter().map(|gen| model.add_var(0.0, gen.r_max)).collect();
    let r_dn: Vec<VarId> = net.generators.iter().map(|gen| model.add_var(0.0, gen.r_max)).collect();
    let participation: Vec<Vec<VarId>> =
        (0..np).map(|_| (0..nw).map(|_| model.free_var()).collect()).collect();

    // Generation limits with reserve headroom.
    for (p, gen) in net.generators.iter().enumerate() {
        let mut up = LinExpr::var(g[p]);
        up.push(r_up[p], 1.0);
        model.le(up, gen.g_max);
        let mut dn = LinExpr::var(g[p]);
        dn.push(r_dn[p], -1.0);
        model.ge(dn, gen.g_min);
    }
    // Day-ahead balance: conventional plus forecast wind covers demand.
    let forecast_mw: Vec<f64> = (0..nw).map(|w| net.wind[w].capacity * ds.forecast()[w]).collect();
    let mut balance = LinExpr::new();
    for &gv in &g {
        balance.push(gv, 1.0);
    }
    model.eq(balance, net.total_demand() - forecast_mw.iter().sum::<f64>());
    // Real-time balance per farm: participation absorbs the deviation.
    for w in 0..nw {
        let mut row = LinExpr::new();
        for p in 0..np {
            row.push(participation[p][w], 1.0);
        }
        model.eq(row, -net.wind[w].capacity);
    }

    // Worst-case recourse cost of the linear decision rule.
    let recourse_a: Vec<LinExpr> = (0..nw)
        .map(|w| {
            let mut e = LinExpr::new();
            for (p, gen) in net.generators.iter().enumerate() {
                e.push(participation[p][w], gen.cost);
            }
            e
        })
        .collect();
    let recourse = AffineUncertainExpression::new(recourse_a, LinExpr::new());
    let objective_block = crate::wce::add_wce_block(
        &[recourse],
        ds,
        &sp,
        spec,
        vbar,
        opts.projected,
        model,
    )?;

    // Chance constraints on reserve activation, both directions per unit.
    let mut drccs = Vec::new();
    for p in 0..np {
        let a_up: Vec<LinExpr> = (0..nw).map(|w| LinExpr::var(participation[p][w])).collect();
        let mut b_up = LinExpr::new();
        b_up.push(r_up[p], -1.0);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(a_up, b_up)],
            epsilon: opts.eps.reserve,
        };
        drccs.push((
            format!("reserve_up_g{p}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));

        let a_dn: Vec<LinExpr> =
            (0..nw).map(|w| LinExpr::term(participation[p][w], -1.0)).collect();
        let mut b_dn = LinExpr::new();
        b_dn.push(r_dn[p], -1.0);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(a_dn, b_dn)],
            epsilon: opts.eps.reserve,
        };
        drccs.push((
            format!("reserve_dn_g{p}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
    }

    // Line-flow chance constraints, both directions per line.
    let ptdf = net.ptdf_matrix()?;
    for (f, line) in net.lines.iter().enumerate() {
        // Deterministic part of the real-time flow.
        let mut flow_b = LinExpr::new();
        for (p, gen) in net.generators.iter().enumerate() {
            flow_b.push(g[p], ptdf[f][gen.node]);
        }
        for (w, farm) in net.wind.iter().enumerate() {
            flow_b.add_constant(ptdf[f][farm.node] * forecast_mw[w]);
            let _ = w;
        }
        for load in &net.loads {
            flow_b.add_constant(-ptdf[f][load.node] * load.demand);
        }
        // Uncertainty loading: generator response plus the deviation itself.
        let flow_a: Vec<LinExpr> = (0..nw)
            .map(|w| {
                let mut e = LinExpr::new();
                for (p, gen) in net.generators.iter().enumerate() {
                    e.push(participation[p][w], ptdf[f][gen.node]);
                }
                e.add_constant(ptdf[f][net.wind[w].node] * net.wind[w].capacity);
                e
            })
            .collect();

        let mut b_hi = flow_b.clone();
        b_hi.add_constant(-line.capacity);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(flow_a.clone(), b_hi)],
            epsilon: opts.eps.line,
        };
        drccs.push((
            format!("line_hi_{f}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));

        let a_lo: Vec<LinExpr> = flow_a.iter().map(|e| e.clone() * -1.0).collect();
        let mut b_lo = flow_b.clone() * -1.0;
        b_lo.add_constant(-line.capacity);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(a_lo, b_lo)],
            epsilon: opts.eps.line,
        };
        drccs.push((
            format!("line_lo_{f}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
    }

    // Objective: day-ahead cost plus worst-case recourse.
    let mut day_ahead_cost = LinExpr::new();
    for (p, gen) in net.generators.iter().enumerate() {
        day_ahead_cost.push(g[p], gen.cost);
        day_ahead_cost.push(r_up[p], gen.cost_res_up);
        day_ahead_cost.push(r_dn[p], gen.cost_res_dn);
    }
    let mut objective = day_ahead_cost.clone();
    objective.add_scaled(&objective_block.objective_contribution, 1.0);
    model.set_objective(ObjSense::Minimize, objective);

    Ok(DcOpfHandles {
        g,
        r_up,
        r_dn,
        participation,
        objective_block,
        drccs,
        day_ahead_cost,
    })
}

/// Day-ahead dispatch extracted from an optimal solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayAheadSolution {
    pub g: Vec<f64>,
    pub r_up: Vec<f64>,
    pub r_dn: Vec<f64>,
    /// Participation matrix, MW of response per unit deviation, `[gen][farm]`.
    pub participation: Vec<Vec<f64>>,
    pub objective: f64,
    pub day_ahead_cost: f64,
    pub worst_case_recourse: f64,
    pub solve_seconds: f64,
    pub build_seconds: f64,
    pub vbar_used: f64,
    pub vbar_doublings: u32,
    pub cap_warning: bool,
}

impl DayAheadSolution {
    pub fn total_r_up(&self) -> f64 {
        self.r_up.iter().sum()
    }

    pub fn total_r_dn(&self) -> f64 {
        self.r_dn.iter().sum()
    }

    /// Largest residual of each structural constraint family.
    pub fn residuals(&self, net: &DcNetwork, ds: &UncertaintyDataset) -> DcResiduals {
        let mut gen_limits: f64 = 0.0;
        for (p, gen) in net.generators.iter().enumerate() {
            gen_limits = gen_limits
                .max(self.g[p] + self.r_up[p] - gen.g_max)
                .max(gen.g_min - (self.g[p] - self.r_dn[p]))
                .max(-self.r_up[p])
                .max(-self.r_dn[p])
                .max(self.r_up[p] - gen.r_max)
                .max(self.r_dn[p] - gen.r_max);
        }
        let forecast_mw: f64 = net
            .wind
            .iter()
            .zip(ds.forecast())
            .map(|(farm, mu)| farm.capacity * mu)
            .sum();
        let balance =
            (self.g.iter().sum::<f64>() + forecast_mw - net.total_demand()).abs();
        let mut participation_balance: f64 = 0.0;
        for (w, farm) in net.wind.iter().enumerate() {
            let s: f64 = self.participation.iter().map(|row| row[w]).sum();
            participation_balance = participation_balance.max((s + farm.capacity).abs());
        }
        DcResiduals { gen_limits: gen_limits.max(0.0), balance, participation_balance }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DcResiduals {
    pub gen_limits: f64,
    pub balance: f64,
    pub participation_balance: f64,
}

impl DcResiduals {
    pub fn max(&self) -> f64 {
        self.gen_limits.max(self.balance).max(self.participation_balance)
    }
}

/// Outcome of a day-ahead solve: infeasibility is a reportable result, not an
/// error.
#[derive(Debug, Clone)]
pub enum DayAheadOutcome {
    Optimal(Box<DayAheadSolution>),
    Infeasible { solve_seconds: f64 },
}

impl DayAheadOutcome {
    pub fn optimal(&self) -> Option<&DayAheadSolution> {
        match self {
            DayAheadOutcome::Optimal(sol) => Some(sol),
            DayAheadOutcome::Infeasible { .. } => None,
        }
    }
}

/// Builds and solves, applying the dual-cap post-check: a solution leaning on
/// cap-sensitive polygon vertices (or an unbounded dual) rebuilds the model
/// with the cap doubled, a bounded number of times.
pub fn solve_day_ahead(
    net: &DcNetwork,
    ds: &UncertaintyDataset,
    spec: &AmbiguitySpec,
    opts: &DcOpfOptions,
    backend: &dyn SolverBackend,
) -> Result<DayAheadOutcome, OpfError> {
    let sp = ds.implied_support();
    let mut vbar = opts
        .vbar
        .unwrap_or_else(|| containment_vbar(ds, &sp, default_vbar(ds.sample_count())));
    let mut doublings = 0;
    loop {
        let build_start = std::time::Instant::now();
        let mut model = ModelBuilder::new();
        let handles = build_dc_opf(net, ds, spec, opts, vbar, &mut model)?;
        let build_seconds = build_start.elapsed().as_secs_f64();
        let res = backend.solve(&model, &opts.solve)?;
        match res.status {
            SolveStatus::Optimal => {
                let sol = extract_solution(&handles, &res, build_seconds, vbar, doublings, false);
                return Ok(DayAheadOutcome::Optimal(Box::new(sol)));
            }
            SolveStatus::Infeasible => {
                return Ok(DayAheadOutcome::Infeasible {
                    solve_seconds: res.wall_time.as_secs_f64(),
                })
            }
            // Divergence: the cap excludes the empirical copula; escalate.
            SolveStatus::Unbounded if spec.is_copula() && doublings < opts.max_vbar_doublings => {
                vbar *= 2.0;
                doublings += 1;
            }
            other => return Err(OpfError::Solver(other)),
        }
    }
}

fn extract_solution(
    handles: &DcOpfHandles,
    res: &SolveResult,
    build_seconds: f64,
    vbar: f64,
    doublings: u32,
    cap_warning: bool,
) -> DayAheadSolution {
    let day_ahead_cost = res.expr_value(&handles.day_ahead_cost);
    let worst_case_recourse = res.expr_value(&handles.objective_block.objective_contribution);
    DayAheadSolution {
        g: handles.g.iter().map(|&v| res.value(v)).collect(),
        r_up: handles.r_up.iter().map(|&v| res.value(v)).collect(),
        r_dn: handles.r_dn.iter().map(|&v| res.value(v)).collect(),
        participation: handles
            .participation
            .iter()
            .map(|row| row.iter().map(|&v| res.value(v)).collect())
            .collect(),
        objective: res.objective_value.expect("optimal"),
        day_ahead_cost,
        worst_case_recourse,
        solve_seconds: res.wall_time.as_secs_f64(),
        build_seconds,
        vbar_used: vbar,
        vbar_doublings: doublings,
        cap_warning,
    }
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::lp::ClarabelBackend;
    use crate::model::AmbiguitySpec;

    fn backend() -> ClarabelBackend {
        ClarabelBackend
    }

    /// Dataset with all-zero deviations (wind always at forecast).
    fn zero_dataset(n: usize, mu: &[f64], caps: &[f64]) -> UncertaintyDataset {
        UncertaintyDataset::new(
            vec![vec![0.0; mu.len()]; n],
            mu.to_vec(),
            caps.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn zero_uncertainty_books_no_reserves() {
        let net = instances::three_node_net();
        let ds = zero_dataset(4, &[0.4], &[net.wind[0].capacity]);
        let spec = AmbiguitySpec::copula(0.0, 10.0).unwrap();
        let out =
            solve_day_ahead(&net, &ds, &spec, &DcOpfOptions::default(), &backend()).unwrap();
        let sol = out.optimal().expect("feasible");
        assert!(sol.total_r_up() < 1e-5, "r_up {}", sol.total_r_up());
        assert!(sol.total_r_dn() < 1e-5, "r_dn {}", sol.total_r_dn());
        assert!(sol.worst_case_recourse.abs() < 1e-5);
    }

    #[test]
    fn single_node_symmetric_deviations_book_symmetric_reserves() {
        // One node, one generator, one farm, samples at +/- delta: with zero
        // radius and a tiny violation level the reserves must cover W*delta.
        let delta = 0.2;
        let net = instances::single_node_net();
        let cap = net.wind[0].capacity;
        let ds = UncertaintyDataset::new(
            vec![vec![-delta], vec![delta]],
            vec![0.5],
            vec![cap],
        )
        .unwrap();
        let spec = AmbiguitySpec::copula(0.0, 10.0).unwrap();
        let opts = DcOpfOptions {
            eps: DrccLevels { reserve: 1e-3, line: 1e-3 },
            ..DcOpfOptions::default()
        };
        let out = solve_day_ahead(&net, &ds, &spec, &opts, &backend()).unwrap();
        let sol = out.optimal().expect("feasible");
        let want = cap * delta;
        assert!(
            (sol.total_r_up() - want).abs() < 1e-3,
            "r_up {} vs {}",
            sol.total_r_up(),
            want
        );
        assert!(
            (sol.total_r_dn() - want).abs() < 1e-3,
            "r_dn {} vs {}",
            sol.total_r_dn(),
            want
        );
    }

    #[test]
    fn rts24_aggregates_match_reference_figures() {
        let net = instances::rts24_like();
        net.validate().unwrap();
        let cap: f64 = net.generators.iter().map(|g| g.g_max).sum();
        let wind: f64 = net.wind.iter().map(|w| w.capacity).sum();
        let demand = net.total_demand();
        let reserve: f64 = net.generators.iter().map(|g| g.r_max).sum();
        assert_eq!(net.n_nodes, 24);
        assert_eq!(net.lines.len(), 34);
        assert_eq!(net.generators.len(), 12);
        assert_eq!(net.loads.len(), 17);
        assert!((cap - 2362.5).abs() < 1e-9, "capacity {cap}");
        assert!((wind - 1000.0).abs() < 1e-9, "wind {wind}");
        assert!((demand - 2207.0).abs() < 1e-9, "demand {demand}");
        assert!((reserve - 798.0).abs() < 1e-9, "reserve {reserve}");
    }

    #[test]
    fn ptdf_rows_sum_consistently() {
        // A balanced injection pair across one line moves flow only through
        // the network; the PTDF difference times the injection reproduces a
        // conservation-consistent flow pattern.
        let net = instances::rts24_like();
        let ptdf = net.ptdf_matrix().unwrap();
        // Injection at node a, withdrawal at node b: net flow out of node a
        // across all incident lines equals the injection.
        let (a, b) = (5, 14);
        let mut outflow = 0.0;
        for (f, line) in net.lines.iter().enumerate() {
            let sens = ptdf[f][a] - ptdf[f][b];
            if line.from == a {
                outflow += sens;
            }
            if line.to == a {
                outflow -= sens;
            }
        }
        assert!((outflow - 1.0).abs() < 1e-8, "outflow {outflow}");
    }

    #[test]
    fn network_json_roundtrip() {
        let net = instances::rts24_like();
        let dir = std::env::temp_dir().join(format!("cdro_net_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rts24.json");
        net.write_json(&path).unwrap();
        let back = DcNetwork::read_json(&path).unwrap();
        assert_eq!(back.n_nodes, net.n_nodes);
        assert_eq!(back.lines.len(), net.lines.len());
        assert!(back.ptdf.is_some());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dimension_mismatch_is_typed() {
        let net = instances::three_node_net();
        let ds = zero_dataset(3, &[0.4, 0.4], &[100.0, 100.0]);
        let spec = AmbiguitySpec::metric(0.1).unwrap();
        let mut model = ModelBuilder::new();
        match build_dc_opf(&net, &ds, &spec, &DcOpfOptions::default(), 1.0, &mut model) {
            Err(OpfError::Dimension(_)) => {}
            other => panic!("expected dimension error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn resolve_is_deterministic() {
        let net = instances::three_node_net();
        let ds = UncertaintyDataset::new(
            vec![vec![-0.2], vec![0.1], vec![0.15]],
            vec![0.4],
            vec![net.wind[0].capacity],
        )
        .unwrap();
        let spec = AmbiguitySpec::metric(0.05).unwrap();
        let opts = DcOpfOptions::default();
        let a = solve_day_ahead(&net, &ds, &spec, &opts, &backend()).unwrap();
        let b = solve_day_ahead(&net, &ds, &spec, &opts, &backend()).unwrap();
        let (sa, sb) = (a.optimal().unwrap(), b.optimal().unwrap());
        assert!((sa.objective - sb.objective).abs() < 1e-9);
    }

    #[test]
    fn structural_residuals_hold_at_optimum() {
        let net = instances::three_node_net();
        let ds = UncertaintyDataset::new(
            vec![vec![-0.25], vec![0.05], vec![0.2], vec![-0.1]],
            vec![0.4],
            vec![net.wind[0].capacity],
        )
        .unwrap();
        for spec in [
            AmbiguitySpec::metric(0.05).unwrap(),
            AmbiguitySpec::copula(0.05, 0.05).unwrap(),
        ] {
            let out =
                solve_day_ahead(&net, &ds, &spec, &DcOpfOptions::default(), &backend()).unwrap();
            let sol = out.optimal().expect("feasible");
            let r = sol.residuals(&net, &ds);
            assert!(r.max() < 1e-6, "residuals {:?}", r);
        }
    }
}
