//! Out-of-sample replay: fix the day-ahead decisions, solve a deterministic
//! real-time redispatch per unseen sample, aggregate cost statistics and the
//! expected energy not served.
//!
//! Redispatch re-optimizes recourse within the booked reserves (or the
//! physical limits, on feeders), with involuntary load shedding and wind
//! curtailment as the two extreme recourse actions keeping every realization
//! feasible. Activation is paid at the energy cost on absolute value by
//! default; the signed alternative (downward activation earns the cost back)
//! sits behind a flag.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, SolveOptions, SolveStatus, SolverBackend, VarId,
};
use crate::model::UncertaintyDataset;
use crate::opf_dc::{DayAheadSolution, DcNetwork, OpfError};
use crate::opf_radial::{polygonal_soc, RadialNetwork, RadialSolution};

/// Prices applied in the real-time stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecoursePrices {
    /// Value of lost load, $/MWh.
    pub voll: f64,
    /// Wind curtailment price, $/MWh.
    pub spill: f64,
    /// Pay activation signed (downward activation refunds energy cost)
    /// instead of on absolute value.
    pub signed_recourse: bool,
}

impl Default for RecoursePrices {
    fn default() -> Self {
        Self { voll: 1000.0, spill: 0.0, signed_recourse: false }
    }
}

/// One realization's redispatch outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealTimeOutcome {
    /// Net activation per generator (positive up), within booked reserves.
    pub recourse: Vec<f64>,
    pub shed: Vec<f64>,
    pub curtail: Vec<f64>,
    pub cost: f64,
}

impl RealTimeOutcome {
    pub fn total_shed(&self) -> f64 {
        self.shed.iter().sum()
    }
}

/// Aggregated out-of-sample report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OosReport {
    /// Day-ahead cost plus mean real-time cost.
    pub expected_cost: f64,
    pub std_dev: f64,
    /// Mean shed energy times the one-hour period.
    pub eens_mwh: f64,
    pub day_ahead_cost: f64,
    pub mean_rt_cost: f64,
    /// Empirical violation frequency per protected constraint.
    pub violation_rates: Vec<(String, f64)>,
    pub per_sample_cost: Vec<f64>,
    pub failures: usize,
}

/// A fixed day-ahead decision that can be replayed against realizations.
pub trait RedispatchModel: Sync {
    fn redispatch(
        &self,
        xi: &[f64],
        backend: &dyn SolverBackend,
    ) -> Result<RealTimeOutcome, OpfError>;
    fn day_ahead_cost(&self) -> f64;
    /// Labels and indicator evaluations of the protected constraints under
    /// the day-ahead linear rule.
    fn violation_labels(&self) -> Vec<String>;
    fn violations(&self, xi: &[f64]) -> Vec<bool>;
}

/// Replays every out-of-sample row, in parallel, and aggregates in sample
/// order regardless of execution order. Per-sample failures are counted, not
/// fatal.
pub fn evaluate_out_of_sample(
    model: &dyn RedispatchModel,
    oos: &UncertaintyDataset,
    backend: &dyn SolverBackend,
) -> Result<OosReport, OpfError> {
    if oos.sample_count() == 0 {
        return Err(OpfError::Dimension("out-of-sample dataset is empty".into()));
    }
    let results: Vec<(usize, Result<RealTimeOutcome, OpfError>)> = oos
        .deviations()
        .par_iter()
        .enumerate()
        .map(|(i, xi)| (i, model.redispatch(xi, backend)))
        .collect();

    let mut per_sample_cost = Vec::with_capacity(results.len());
    let mut shed_total = 0.0;
    let mut failures = 0;
    for (_, res) in &results {
        match res {
            Ok(out) => {
                per_sample_cost.push(out.cost);
                shed_total += out.total_shed();
            }
            Err(_) => failures += 1,
        }
    }
    if per_sample_cost.is_empty() {
        return Err(OpfError::Dimension("every redispatch failed".into()));
    }
    let n = per_sample_cost.len() as f64;
    let mean_rt = per_sample_cost.iter().sum::<f64>() / n;
    let var = per_sample_cost.iter().map(|c| (c - mean_rt).powi(2)).sum::<f64>() / n;

    let labels = model.violation_labels();
    let mut counts = vec![0usize; labels.len()];
    for xi in oos.deviations() {
        for (k, v) in model.violations(xi).into_iter().enumerate() {
            if v {
                counts[k] += 1;
            }
        }
    }
    let total = oos.sample_count() as f64;
    let violation_rates = labels
        .into_iter()
        .zip(counts)
        .map(|(l, c)| (l, c as f64 / total))
        .collect();

    Ok(OosReport {
        expected_cost: model.day_ahead_cost() + mean_rt,
        std_dev: var.sqrt(),
        eens_mwh: shed_total / n * 1.0,
        day_ahead_cost: model.day_ahead_cost(),
        mean_rt_cost: mean_rt,
        violation_rates,
        per_sample_cost,
        failures,
    })
}

// ---------------------------------------------------------------------------
// DC redispatch
// ---------------------------------------------------------------------------

/// Fixed DC day-ahead decision plus everything needed to replay it.
pub struct DcRedispatch<'a> {
    pub net: &'a DcNetwork,
    pub ds_forecast: Vec<f64>,
    pub sol: &'a DayAheadSolution,
    pub prices: RecoursePrices,
    ptdf: Vec<Vec<f64>>,
}

impl<'a> DcRedispatch<'a> {
    pub fn new(
        net: &'a DcNetwork,
        ds: &UncertaintyDataset,
        sol: &'a DayAheadSolution,
        prices: RecoursePrices,
    ) -> Result<Self, OpfError> {
        Ok(Self {
            net,
            ds_forecast: ds.forecast().to_vec(),
            sol,
            prices,
            ptdf: net.ptdf_matrix()?,
        })
    }
}

impl RedispatchModel for DcRedispatch<'_> {
    fn redispatch(
        &self,
        xi: &[f64],
        backend: &dyn SolverBackend,
    ) -> Result<RealTimeOutcome, OpfError> {
        let net = self.net;
        let np = net.generators.len();
        let nw = net.wind.len();
        if xi.len() != nw {
            return Err(OpfError::Dimension(format!(
                "realization has {} entries, network has {nw} farms",
                xi.len()
            )));
        }
        let realized: Vec<f64> = (0..nw)
            .map(|w| (net.wind[w].capacity * (self.ds_forecast[w] + xi[w])).max(0.0))
            .collect();
        let deviation_mw: Vec<f64> = (0..nw).map(|w| net.wind[w].capacity * xi[w]).collect();

        let mut m = ModelBuilder::new();
        let up: Vec<VarId> =
            (0..np).map(|p| m.add_var(0.0, self.sol.r_up[p].max(0.0))).collect();
        let dn: Vec<VarId> =
            (0..np).map(|p| m.add_var(0.0, self.sol.r_dn[p].max(0.0))).collect();
        let shed: Vec<VarId> =
            net.loads.iter().map(|l| m.add_var(0.0, l.demand)).collect();
        let curtail: Vec<VarId> = (0..nw).map(|w| m.add_var(0.0, realized[w])).collect();

        // System balance of the deviations and recourse actions.
        let mut balance = LinExpr::new();
        for p in 0..np {
            balance.push(up[p], 1.0);
            balance.push(dn[p], -1.0);
        }
        for w in 0..nw {
            balance.add_constant(deviation_mw[w]);
            balance.push(curtail[w], -1.0);
        }
        for &s in &shed {
            balance.push(s, 1.0);
        }
        m.eq(balance, 0.0);

        // Line limits on the realized flows.
        for (f, line) in net.lines.iter().enumerate() {
            let mut flow = LinExpr::new();
            for (p, gen) in net.generators.iter().enumerate() {
                flow.add_constant(self.ptdf[f][gen.node] * self.sol.g[p]);
                flow.push(up[p], self.ptdf[f][gen.node]);
                flow.push(dn[p], -self.ptdf[f][gen.node]);
            }
            for (w, farm) in net.wind.iter().enumerate() {
                flow.add_constant(self.ptdf[f][farm.node] * realized[w]);
                flow.push(curtail[w], -self.ptdf[f][farm.node]);
            }
            for (d, load) in net.loads.iter().enumerate() {
                flow.add_constant(-self.ptdf[f][load.node] * load.demand);
                flow.push(shed[d], self.ptdf[f][load.node]);
            }
            m.le(flow.clone(), line.capacity);
            m.ge(flow, -line.capacity);
        }

        let mut obj = LinExpr::new();
        for (p, gen) in net.generators.iter().enumerate() {
            obj.push(up[p], gen.cost);
            obj.push(dn[p], if self.prices.signed_recourse { -gen.cost } else { gen.cost });
        }
        for &s in &shed {
            obj.push(s, self.prices.voll);
        }
        for &c in &curtail {
            obj.push(c, self.prices.spill);
        }
        m.set_objective(ObjSense::Minimize, obj);

        let res = backend.solve(&m, &SolveOptions::default())?;
        if res.status != SolveStatus::Optimal {
            return Err(OpfError::Solver(res.status));
        }
        Ok(RealTimeOutcome {
            recourse: (0..np).map(|p| res.value(up[p]) - res.value(dn[p])).collect(),
            shed: shed.iter().map(|&s| res.value(s)).collect(),
            curtail: curtail.iter().map(|&c| res.value(c)).collect(),
            cost: res.objective_value.expect("optimal"),
        })
    }

    fn day_ahead_cost(&self) -> f64 {
        self.sol.day_ahead_cost
    }

    fn violation_labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for p in 0..self.net.generators.len() {
            labels.push(format!("reserve_up_g{p}"));
            labels.push(format!("reserve_dn_g{p}"));
        }
        for f in 0..self.net.lines.len() {
            labels.push(format!("line_{f}"));
        }
        labels
    }

    fn violations(&self, xi: &[f64]) -> Vec<bool> {
        self.violations_with_tol(xi, 1e-7)
    }
}

impl DcRedispatch<'_> {
    /// Constraint indicator evaluations at an explicit tolerance.
    pub fn violations_with_tol(&self, xi: &[f64], tol: f64) -> Vec<bool> {
        let net = self.net;
        let mut out = Vec::new();
        let response: Vec<f64> = self
            .sol
            .participation
            .iter()
            .map(|row| row.iter().zip(xi).map(|(v, x)| v * x).sum::<f64>())
            .collect();
        for (p, _) in net.generators.iter().enumerate() {
            out.push(response[p] > self.sol.r_up[p] + tol);
            out.push(-response[p] > self.sol.r_dn[p] + tol);
        }
        for (f, line) in net.lines.iter().enumerate() {
            let mut flow = 0.0;
            for (p, gen) in net.generators.iter().enumerate() {
                flow += self.ptdf[f][gen.node] * (self.sol.g[p] + response[p]);
            }
            for (w, farm) in net.wind.iter().enumerate() {
                flow += self.ptdf[f][farm.node]
                    * farm.capacity
                    * (self.ds_forecast[w] + xi[w]);
            }
            for load in &net.loads {
                flow -= self.ptdf[f][load.node] * load.demand;
            }
            out.push(flow.abs() > line.capacity + tol);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Radial redispatch
// ---------------------------------------------------------------------------

/// Fixed radial day-ahead decision plus everything needed to replay it.
pub struct RadialRedispatch<'a> {
    pub net: &'a RadialNetwork,
    pub ds_forecast: Vec<f64>,
    pub sol: &'a RadialSolution,
    pub prices: RecoursePrices,
    /// Sides of the polygonal apparent-power limit in the redispatch.
    pub polygon_sides: usize,
}

impl<'a> RadialRedispatch<'a> {
    pub fn new(
        net: &'a RadialNetwork,
        ds: &UncertaintyDataset,
        sol: &'a RadialSolution,
        prices: RecoursePrices,
    ) -> Self {
        Self { net, ds_forecast: ds.forecast().to_vec(), sol, prices, polygon_sides: 32 }
    }
}

impl RedispatchModel for RadialRedispatch<'_> {
    fn redispatch(
        &self,
        xi: &[f64],
        backend: &dyn SolverBackend,
    ) -> Result<RealTimeOutcome, OpfError> {
        let net = self.net;
        let topo = net.topology()?;
        let n = net.n_nodes();
        let nw = net.wind.len();
        if xi.len() != nw {
            return Err(OpfError::Dimension(format!(
                "realization has {} entries, network has {nw} farms",
                xi.len()
            )));
        }
        // Realized wind per node, after the deviation.
        let realized: Vec<f64> = (0..nw)
            .map(|w| (net.wind[w].capacity * (self.ds_forecast[w] + xi[w])).max(0.0))
            .collect();

        let mut m = ModelBuilder::new();
        let controllable = net.controllable_nodes();
        let mut up = vec![None; n];
        let mut dn = vec![None; n];
        let mut aq = vec![None; n];
        for &i in &controllable {
            let gen = net.nodes[i].gen.as_ref().expect("controllable");
            let headroom_up = (gen.p_max - self.sol.g_p[i]).max(0.0);
            let headroom_dn = (self.sol.g_p[i] - gen.p_min).max(0.0);
            up[i] = Some(m.add_var(0.0, headroom_up));
            dn[i] = Some(m.add_var(0.0, headroom_dn));
            aq[i] = Some(m.add_var(
                (gen.q_min - self.sol.g_q[i]).min(0.0),
                (gen.q_max - self.sol.g_q[i]).max(0.0),
            ));
        }
        let shed: Vec<VarId> =
            (0..n).map(|i| m.add_var(0.0, net.nodes[i].demand_p.max(0.0))).collect();
        let curtail: Vec<VarId> = (0..nw).map(|w| m.add_var(0.0, realized[w])).collect();

        // Active balance over the whole feeder.
        let mut balance = LinExpr::new();
        for i in 0..n {
            if let (Some(u), Some(d)) = (up[i], dn[i]) {
                balance.push(u, 1.0);
                balance.push(d, -1.0);
                balance.add_constant(self.sol.g_p[i]);
            }
            balance.push(shed[i], 1.0);
            balance.add_constant(-net.nodes[i].demand_p);
        }
        for w in 0..nw {
            balance.add_constant(realized[w]);
            balance.push(curtail[w], -1.0);
        }
        m.eq(balance, 0.0);

        // Real-time flows and voltages, rebuilt from injections.
        let mut fp: Vec<LinExpr> = Vec::with_capacity(net.lines.len());
        let mut fq: Vec<LinExpr> = Vec::with_capacity(net.lines.len());
        for (li, _) in net.lines.iter().enumerate() {
            let mut p = LinExpr::new();
            let mut q = LinExpr::new();
            for &i in &topo.downstream[li] {
                let node = &net.nodes[i];
                p.add_constant(node.demand_p);
                p.push(shed[i], -1.0);
                q.add_constant(node.demand_q);
                if node.demand_p > 0.0 {
                    // Shedding disconnects load at its power factor.
                    q.push(shed[i], -node.demand_q / node.demand_p);
                }
                if let (Some(u), Some(d)) = (up[i], dn[i]) {
                    p.add_constant(-self.sol.g_p[i]);
                    p.push(u, -1.0);
                    p.push(d, 1.0);
                }
                if let Some(a) = aq[i] {
                    q.add_constant(-self.sol.g_q[i]);
                    q.push(a, -1.0);
                }
                for (w, farm) in net.wind.iter().enumerate() {
                    if farm.node == i {
                        p.add_constant(-realized[w]);
                        p.push(curtail[w], 1.0);
                        q.add_constant(-farm.reactive_ratio * realized[w]);
                        q.push(curtail[w], farm.reactive_ratio);
                    }
                }
            }
            fp.push(p);
            fq.push(q);
        }
        // Apparent limits via the inscribed polygon on explicit flow vars.
        let fpv: Vec<VarId> = (0..net.lines.len()).map(|_| m.free_var()).collect();
        let fqv: Vec<VarId> = (0..net.lines.len()).map(|_| m.free_var()).collect();
        for li in 0..net.lines.len() {
            let mut rp = fp[li].clone();
            rp.push(fpv[li], -1.0);
            m.eq(rp, 0.0);
            let mut rq = fq[li].clone();
            rq.push(fqv[li], -1.0);
            m.eq(rq, 0.0);
            polygonal_soc(net.lines[li].limit, self.polygon_sides, fpv[li], fqv[li], &mut m)?;
        }
        // Voltage bounds along root paths.
        for i in 1..n {
            let mut u = LinExpr::constant(1.0);
            for &li in &topo.root_path[i] {
                u.push(fpv[li], -2.0 * net.lines[li].r);
                u.push(fqv[li], -2.0 * net.lines[li].x);
            }
            let node = &net.nodes[i];
            m.le(u.clone(), node.v_max * node.v_max);
            m.ge(u, node.v_min * node.v_min);
        }

        let mut obj = LinExpr::new();
        for &i in &controllable {
            let gen = net.nodes[i].gen.as_ref().expect("controllable");
            obj.push(up[i].expect("var"), gen.cost);
            obj.push(
                dn[i].expect("var"),
                if self.prices.signed_recourse { -gen.cost } else { gen.cost },
            );
        }
        for &s in &shed {
            obj.push(s, self.prices.voll);
        }
        for &c in &curtail {
            obj.push(c, self.prices.spill);
        }
        m.set_objective(ObjSense::Minimize, obj);

        let res = backend.solve(&m, &SolveOptions::default())?;
        if res.status != SolveStatus::Optimal {
            return Err(OpfError::Solver(res.status));
        }
        Ok(RealTimeOutcome {
            recourse: (0..n)
                .map(|i| match (up[i], dn[i]) {
                    (Some(u), Some(d)) => res.value(u) - res.value(d),
                    _ => 0.0,
                })
                .collect(),
            shed: shed.iter().map(|&s| res.value(s)).collect(),
            curtail: curtail.iter().map(|&c| res.value(c)).collect(),
            cost: res.objective_value.expect("optimal"),
        })
    }

    fn day_ahead_cost(&self) -> f64 {
        self.sol.day_ahead_cost
    }

    fn violation_labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for i in self.net.controllable_nodes() {
            labels.push(format!("gen_p_n{i}"));
        }
        for i in 1..self.net.n_nodes() {
            labels.push(format!("voltage_n{i}"));
        }
        labels
    }

    fn violations(&self, xi: &[f64]) -> Vec<bool> {
        self.violations_with_tol(xi, 1e-7)
    }
}

impl RadialRedispatch<'_> {
    /// Constraint indicator evaluations at an explicit tolerance.
    pub fn violations_with_tol(&self, xi: &[f64], tol: f64) -> Vec<bool> {
        let st = self
            .sol
            .realtime_state(self.net, xi)
            .expect("dimensions checked upstream");
        let mut out = Vec::new();
        for i in self.net.controllable_nodes() {
            let gen = self.net.nodes[i].gen.as_ref().expect("controllable");
            out.push(st.g_p[i] > gen.p_max + tol || st.g_p[i] < gen.p_min - tol);
        }
        for i in 1..self.net.n_nodes() {
            let node = &self.net.nodes[i];
            out.push(
                st.u[i] > node.v_max * node.v_max + tol
                    || st.u[i] < node.v_min * node.v_min - tol,
            );
        }
        out
    }
}
