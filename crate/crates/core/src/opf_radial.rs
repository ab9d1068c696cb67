//! Distributionally robust day-ahead OPF for radial feeders under the
//! LinDistFlow approximation.
//!
//! Flows and squared voltages are linear in net injections along the tree;
//! real-time quantities follow from the day-ahead state plus the wind
//! deviations and the linear decision rule. Chance constraints protect
//! real-time generation limits and voltage bounds; the apparent-power limit
//! applies to day-ahead flows, as a cone row or an inscribed-polygon inner
//! approximation.

use serde::{Deserialize, Serialize};

use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, RowId, SolveOptions, SolveResult, SolveStatus, SolverBackend,
    VarId,
};
use crate::model::{AffineUncertainExpression, AmbiguitySpec, UncertaintyDataset};
use crate::opf_dc::OpfError;
use crate::wce::{containment_vbar, cvar_drcc, default_vbar, CvarDrcc, DrccSpec, WceBlock};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGen {
    /// Energy cost per unit of active power.
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialNode {
    pub demand_p: f64,
    pub demand_q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<RadialGen>,
    /// Voltage magnitude bounds, per unit (not squared).
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialLine {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Apparent-power limit, per unit.
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialWind {
    pub node: usize,
    /// Installed capacity in per-unit power.
    pub capacity: f64,
    /// Reactive deviation per unit of active deviation; zero means the farm
    /// delivers active power only.
    #[serde(default)]
    pub reactive_ratio: f64,
}

/// Radial distribution feeder rooted at node 0 (the transmission interface).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialNetwork {
    pub nodes: Vec<RadialNode>,
    pub lines: Vec<RadialLine>,
    pub wind: Vec<RadialWind>,
}

/// Tree topology derived from the line list: per line, the set of nodes
/// hanging below it; per node, the lines on its root path.
pub struct Topology {
    pub downstream: Vec<Vec<usize>>,
    pub root_path: Vec<Vec<usize>>,
}

impl RadialNetwork {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Validates the tree structure and bounds; returns the topology maps.
    pub fn topology(&self) -> Result<Topology, OpfError> {
        let n = self.n_nodes();
        if self.lines.len() != n - 1 {
            return Err(OpfError::Network(format!(
                "a radial feeder with {n} nodes needs {} lines, found {}",
                n - 1,
                self.lines.len()
            )));
        }
        let mut parent_line = vec![usize::MAX; n];
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (li, line) in self.lines.iter().enumerate() {
            if line.from >= n || line.to >= n {
                return Err(OpfError::Network(format!("line {li} references a missing node")));
            }
            if line.r < 0.0 || line.x < 0.0 || line.limit <= 0.0 {
                return Err(OpfError::Network(format!("line {li} has invalid parameters")));
            }
            adj[line.from].push((line.to, li));
            adj[line.to].push((line.from, li));
        }
        // BFS from the root; every node must be reached exactly once.
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, li) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent_line[v] = li;
                    queue.push_back(v);
                }
            }
        }
        if order.len() != n {
            return Err(OpfError::Network("feeder graph is not a connected tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 && !(node.v_min < 1.0 && 1.0 < node.v_max) {
                return Err(OpfError::Network(format!(
                    "node {i} voltage bounds must straddle 1.0"
                )));
            }
        }
        for w in &self.wind {
            if w.node >= n || w.node == 0 {
                return Err(OpfError::Network("wind farms must sit on non-root nodes".into()));
            }
        }
        if self.nodes[0].gen.is_none() {
            return Err(OpfError::Network("the root node needs a controllable injection".into()));
        }
        // Root paths, then downstream sets by inversion.
        let mut root_path: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &u in &order {
            if u == 0 {
                continue;
            }
            let li = parent_line[u];
            let p = if self.lines[li].to == u { self.lines[li].from } else { self.lines[li].to };
            root_path[u] = root_path[p].clone();
            root_path[u].push(li);
        }
        let mut downstream: Vec<Vec<usize>> = vec![Vec::new(); self.lines.len()];
        for u in 0..n {
            for &li in &root_path[u] {
                downstream[li].push(u);
            }
        }
        Ok(Topology { downstream, root_path })
    }

    pub fn controllable_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.nodes[i].gen.is_some()).collect()
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<(), OpfError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self, OpfError> {
        let net: RadialNetwork = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        net.topology()?;
        Ok(net)
    }
}

/// Apparent-power handling for line limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocMode {
    Cone,
    Polygon(usize),
}

impl Default for SocMode {
    fn default() -> Self {
        SocMode::Polygon(32)
    }
}

#[derive(Debug, Clone)]
pub struct RadialOpfOptions {
    pub eps_gen: f64,
    pub eps_voltage: f64,
    pub soc_mode: SocMode,
    pub vbar: Option<f64>,
    pub projected: bool,
    pub max_vbar_doublings: u32,
    pub solve: SolveOptions,
}

impl Default for RadialOpfOptions {
    fn default() -> Self {
        Self {
            eps_gen: 0.05,
            eps_voltage: 0.05,
            soc_mode: SocMode::default(),
            vbar: None,
            projected: true,
            max_vbar_doublings: 6,
            solve: SolveOptions::default(),
        }
    }
}

/// Inscribed regular polygon inner approximation of the disc
/// `fp^2 + fq^2 <= fbar^2`: `k` half-planes whose worst-case understatement
/// of the disc radius is `fbar * (1 - cos(pi/k))`. Vertices sit on the
/// circle, so the axis points remain feasible.
pub fn polygonal_soc(
    fbar: f64,
    k: usize,
    fp: VarId,
    fq: VarId,
    model: &mut ModelBuilder,
) -> Result<Vec<RowId>, OpfError> {
    if k < 4 {
        return Err(OpfError::Network(format!("polygon needs at least 4 sides, got {k}")));
    }
    if fbar <= 0.0 {
        return Err(OpfError::Network(format!("apparent limit must be positive, got {fbar}")));
    }
    let inradius = fbar * (std::f64::consts::PI / k as f64).cos();
    let mut rows = Vec::with_capacity(k);
    for m in 0..k {
        let theta = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / k as f64;
        let mut row = LinExpr::new();
        row.push(fp, theta.cos());
        row.push(fq, theta.sin());
        rows.push(model.le(row, inradius));
    }
    Ok(rows)
}

/// Handles of one built radial model. Participation rows exist for every
/// controllable node; other entries are `None`.
pub struct RadialOpfHandles {
    pub g_p: Vec<Option<VarId>>,
    pub g_q: Vec<Option<VarId>>,
    pub f_p: Vec<VarId>,
    pub f_q: Vec<VarId>,
    pub u: Vec<VarId>,
    pub participation: Vec<Option<Vec<VarId>>>,
    pub objective_block: WceBlock,
    pub drccs: Vec<(String, CvarDrcc)>,
    pub day_ahead_cost: LinExpr,
}

/// Builds the LinDistFlow day-ahead model into `model`.
pub fn build_lindistflow_opf(
    net: &RadialNetwork,
    ds: &UncertaintyDataset,
    spec: &AmbiguitySpec,
    opts: &RadialOpfOptions,
    vbar: f64,
    model: &mut ModelBuilder,
) -> Result<RadialOpfHandles, OpfError> {
    let topo = net.topology()?;
    if ds.dim() != net.wind.len() {
        return Err(OpfError::Dimension(format!(
            "dataset has {} farms, network has {}",
            ds.dim(),
            net.wind.len()
        )));
    }
    let n = net.n_nodes();
    let nw = net.wind.len();
    let nl = net.lines.len();
    let sp = ds.implied_support();

    // Wind forecast injections per node, per-unit power.
    let mut wind_p = vec![0.0; n];
    let mut wind_q = vec![0.0; n];
    for (w, farm) in net.wind.iter().enumerate() {
        wind_p[farm.node] += farm.capacity * ds.forecast()[w];
        wind_q[farm.node] += farm.reactive_ratio * farm.capacity * ds.forecast()[w];
    }

    let mut g_p: Vec<Option<VarId>> = vec![None; n];
    let mut g_q: Vec<Option<VarId>> = vec![None; n];
    let mut participation: Vec<Option<Vec<VarId>>> = vec![None; n];
    for i in 0..n {
        if let Some(gen) = &net.nodes[i].gen {
            g_p[i] = Some(model.add_var(gen.p_min, gen.p_max));
            g_q[i] = Some(model.add_var(gen.q_min, gen.q_max));
            if i > 0 {
                participation[i] = Some((0..nw).map(|_| model.free_var()).collect());
            }
        }
    }
    // The root follows from the balance, so its participation row is implied
    // by the others; keep it explicit for the chance constraints.
    participation[0] = Some((0..nw).map(|_| model.free_var()).collect());

    let f_p: Vec<VarId> = (0..nl).map(|_| model.free_var()).collect();
    let f_q: Vec<VarId> = (0..nl).map(|_| model.free_var()).collect();
    let mut u: Vec<VarId> = Vec::with_capacity(n);
    u.push(model.add_var(1.0, 1.0));
    for _ in 1..n {
        u.push(model.free_var());
    }

    // Root injections balance the downstream mismatch.
    let mut root_p = LinExpr::new();
    let mut root_q = LinExpr::new();
    for i in 1..n {
        root_p.add_constant(net.nodes[i].demand_p - wind_p[i]);
        root_q.add_constant(net.nodes[i].demand_q - wind_q[i]);
        if let Some(gv) = g_p[i] {
            root_p.push(gv, -1.0);
        }
        if let Some(gv) = g_q[i] {
            root_q.push(gv, -1.0);
        }
    }
    let root_gp = g_p[0].expect("validated root gen");
    let root_gq = g_q[0].expect("validated root gen");
    let mut rp = root_p;
    rp.push(root_gp, -1.0);
    model.eq(rp, 0.0);
    let mut rq = root_q;
    rq.push(root_gq, -1.0);
    model.eq(rq, 0.0);

    // Flow definitions along the tree.
    for (li, _) in net.lines.iter().enumerate() {
        let mut fp_row = LinExpr::term(f_p[li], -1.0);
        let mut fq_row = LinExpr::term(f_q[li], -1.0);
        for &i in &topo.downstream[li] {
            fp_row.add_constant(net.nodes[i].demand_p - wind_p[i]);
            fq_row.add_constant(net.nodes[i].demand_q - wind_q[i]);
            if let Some(gv) = g_p[i] {
                fp_row.push(gv, -1.0);
            }
            if let Some(gv) = g_q[i] {
                fq_row.push(gv, -1.0);
            }
        }
        model.eq(fp_row, 0.0);
        model.eq(fq_row, 0.0);
    }
    // Voltage recursion along root paths.
    for i in 1..n {
        let mut row = LinExpr::term(u[i], -1.0);
        row.push(u[0], 1.0);
        for &li in &topo.root_path[i] {
            row.push(f_p[li], -2.0 * net.lines[li].r);
            row.push(f_q[li], -2.0 * net.lines[li].x);
        }
        model.eq(row, 0.0);
    }
    // Apparent-power limits on day-ahead flows.
    for (li, line) in net.lines.iter().enumerate() {
        match opts.soc_mode {
            SocMode::Cone => {
                model.add_soc(
                    LinExpr::constant(line.limit),
                    vec![LinExpr::var(f_p[li]), LinExpr::var(f_q[li])],
                );
            }
            SocMode::Polygon(k) => {
                polygonal_soc(line.limit, k, f_p[li], f_q[li], model)?;
            }
        }
    }
    // Real-time balance: participation absorbs each farm's power deviation.
    for w in 0..nw {
        let mut row = LinExpr::new();
        for part in participation.iter().flatten() {
            row.push(part[w], 1.0);
        }
        model.eq(row, -1.0);
    }

    // Worst-case recourse cost of the decision rule.
    let caps: Vec<f64> = net.wind.iter().map(|f| f.capacity).collect();
    let recourse_a: Vec<LinExpr> = (0..nw)
        .map(|w| {
            let mut e = LinExpr::new();
            for i in 0..n {
                if let (Some(part), Some(gen)) = (&participation[i], &net.nodes[i].gen) {
                    e.push(part[w], gen.cost * caps[w]);
                }
            }
            e
        })
        .collect();
    let objective_block = crate::wce::add_wce_block(
        &[AffineUncertainExpression::new(recourse_a, LinExpr::new())],
        ds,
        &sp,
        spec,
        vbar,
        opts.projected,
        model,
    )?;

    let mut drccs = Vec::new();
    // Real-time active-power limits per controllable node.
    for i in 0..n {
        let (Some(part), Some(gen)) = (&participation[i], &net.nodes[i].gen) else { continue };
        let gv = g_p[i].expect("gen node has dispatch");
        let a_up: Vec<LinExpr> =
            (0..nw).map(|w| LinExpr::term(part[w], caps[w])).collect();
        let mut b_up = LinExpr::var(gv);
        b_up.add_constant(-gen.p_max);
        let drcc =
            DrccSpec { pieces: vec![AffineUncertainExpression::new(a_up, b_up)], epsilon: opts.eps_gen };
        drccs.push((
            format!("gen_p_hi_n{i}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
        let a_dn: Vec<LinExpr> =
            (0..nw).map(|w| LinExpr::term(part[w], -caps[w])).collect();
        let mut b_dn = LinExpr::term(gv, -1.0);
        b_dn.add_constant(gen.p_min);
        let drcc =
            DrccSpec { pieces: vec![AffineUncertainExpression::new(a_dn, b_dn)], epsilon: opts.eps_gen };
        drccs.push((
            format!("gen_p_lo_n{i}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
        // Reactive side: the same rule responds to the reactive deviation.
        // With all reactive ratios at zero the loading is identically zero
        // and the hard bounds on the dispatch variable already cover it.
        if net.wind.iter().any(|f| f.reactive_ratio != 0.0) {
            let gq = g_q[i].expect("gen node has reactive dispatch");
            let a_up: Vec<LinExpr> = (0..nw)
                .map(|w| LinExpr::term(part[w], net.wind[w].reactive_ratio * caps[w]))
                .collect();
            let mut b_up = LinExpr::var(gq);
            b_up.add_constant(-gen.q_max);
            let drcc = DrccSpec {
                pieces: vec![AffineUncertainExpression::new(a_up, b_up)],
                epsilon: opts.eps_gen,
            };
            drccs.push((
                format!("gen_q_hi_n{i}"),
                cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
            ));
            let a_dn: Vec<LinExpr> = (0..nw)
                .map(|w| LinExpr::term(part[w], -net.wind[w].reactive_ratio * caps[w]))
                .collect();
            let mut b_dn = LinExpr::term(gq, -1.0);
            b_dn.add_constant(gen.q_min);
            let drcc = DrccSpec {
                pieces: vec![AffineUncertainExpression::new(a_dn, b_dn)],
                epsilon: opts.eps_gen,
            };
            drccs.push((
                format!("gen_q_lo_n{i}"),
                cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
            ));
        }
    }

    // Real-time voltage limits: the real-time squared voltage is the
    // day-ahead value plus the root-path response to deviations.
    for i in 1..n {
        let mut a: Vec<LinExpr> = (0..nw).map(|_| LinExpr::new()).collect();
        for &li in &topo.root_path[i] {
            for w in 0..nw {
                // Downstream deviation sensitivity of line li to farm w.
                let mut coef_p = LinExpr::new();
                let mut wind_below = 0.0;
                for &node in &topo.downstream[li] {
                    if let Some(part) = &participation[node] {
                        coef_p.push(part[w], caps[w]);
                    }
                    if net.wind[w].node == node {
                        wind_below = caps[w];
                    }
                }
                coef_p.add_constant(wind_below);
                let scale_p = 2.0 * net.lines[li].r;
                let scale_q = 2.0 * net.lines[li].x * net.wind[w].reactive_ratio;
                a[w].add_scaled(&coef_p, scale_p + scale_q);
            }
        }
        let node = &net.nodes[i];
        let mut b_hi = LinExpr::var(u[i]);
        b_hi.add_constant(-node.v_max * node.v_max);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(a.clone(), b_hi)],
            epsilon: opts.eps_voltage,
        };
        drccs.push((
            format!("voltage_hi_n{i}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
        let a_lo: Vec<LinExpr> = a.iter().map(|e| e.clone() * -1.0).collect();
        let mut b_lo = LinExpr::term(u[i], -1.0);
        b_lo.add_constant(node.v_min * node.v_min);
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::new(a_lo, b_lo)],
            epsilon: opts.eps_voltage,
        };
        drccs.push((
            format!("voltage_lo_n{i}"),
            cvar_drcc(&drcc, ds, &sp, spec, vbar, opts.projected, model)?,
        ));
    }

    let mut day_ahead_cost = LinExpr::new();
    for i in 0..n {
        if let (Some(gv), Some(gen)) = (g_p[i], &net.nodes[i].gen) {
            day_ahead_cost.push(gv, gen.cost);
        }
    }
    let mut objective = day_ahead_cost.clone();
    objective.add_scaled(&objective_block.objective_contribution, 1.0);
    model.set_objective(ObjSense::Minimize, objective);

    Ok(RadialOpfHandles {
        g_p,
        g_q,
        f_p,
        f_q,
        u,
        participation,
        objective_block,
        drccs,
        day_ahead_cost,
    })
}

/// Day-ahead radial dispatch extracted from an optimal solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub g_p: Vec<f64>,
    pub g_q: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_q: Vec<f64>,
    pub u: Vec<f64>,
    /// Participation per node and farm; response per unit of power deviation.
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

/// Real-time network state after a realization, per the affine rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTimeState {
    pub g_p: Vec<f64>,
    pub g_q: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_q: Vec<f64>,
    pub u: Vec<f64>,
}

impl RadialSolution {
    pub fn residuals(&self, net: &RadialNetwork, ds: &UncertaintyDataset) -> RadialResiduals {
        let topo = net.topology().expect("validated network");
        let n = net.n_nodes();
        let mut wind_p = vec![0.0; n];
        let mut wind_q = vec![0.0; n];
        for (w, farm) in net.wind.iter().enumerate() {
            wind_p[farm.node] += farm.capacity * ds.forecast()[w];
            wind_q[farm.node] += farm.reactive_ratio * farm.capacity * ds.forecast()[w];
        }
        let u0 = (self.u[0] - 1.0).abs();
        let mut flow: f64 = 0.0;
        for (li, _) in net.lines.iter().enumerate() {
            let mut p = 0.0;
            let mut q = 0.0;
            for &i in &topo.downstream[li] {
                p += net.nodes[i].demand_p - wind_p[i] - self.g_p[i];
                q += net.nodes[i].demand_q - wind_q[i] - self.g_q[i];
            }
            flow = flow.max((self.f_p[li] - p).abs()).max((self.f_q[li] - q).abs());
        }
        let mut voltage: f64 = 0.0;
        for i in 1..n {
            let mut ui = self.u[0];
            for &li in &topo.root_path[i] {
                ui -= 2.0 * (self.f_p[li] * net.lines[li].r + self.f_q[li] * net.lines[li].x);
            }
            voltage = voltage.max((self.u[i] - ui).abs());
        }
        let mut part: f64 = 0.0;
        for w in 0..net.wind.len() {
            let s: f64 = self.participation.iter().map(|row| row[w]).sum();
            part = part.max((s + 1.0).abs());
        }
        RadialResiduals { root_voltage: u0, flow_balance: flow, voltage_recursion: voltage, participation_balance: part }
    }

    /// Real-time state under a realization, linear in the deviation vector.
    pub fn realtime_state(
        &self,
        net: &RadialNetwork,
        xi: &[f64],
    ) -> Result<RealTimeState, OpfError> {
        if xi.len() != net.wind.len() {
            return Err(OpfError::Dimension(format!(
                "realization has {} entries, network has {} farms",
                xi.len(),
                net.wind.len()
            )));
        }
        let topo = net.topology()?;
        let n = net.n_nodes();
        let caps: Vec<f64> = net.wind.iter().map(|f| f.capacity).collect();
        let dev_p: Vec<f64> = (0..xi.len()).map(|w| caps[w] * xi[w]).collect();
        let dev_q: Vec<f64> =
            (0..xi.len()).map(|w| net.wind[w].reactive_ratio * caps[w] * xi[w]).collect();

        let g_p: Vec<f64> = (0..n)
            .map(|i| {
                self.g_p[i]
                    + self.participation[i]
                        .iter()
                        .zip(&dev_p)
                        .map(|(v, d)| v * d)
                        .sum::<f64>()
            })
            .collect();
        let g_q: Vec<f64> = (0..n)
            .map(|i| {
                self.g_q[i]
                    + self.participation[i]
                        .iter()
                        .zip(&dev_q)
                        .map(|(v, d)| v * d)
                        .sum::<f64>()
            })
            .collect();
        let mut f_p = self.f_p.clone();
        let mut f_q = self.f_q.clone();
        for (li, _) in net.lines.iter().enumerate() {
            for &node in &topo.downstream[li] {
                for w in 0..xi.len() {
                    let response_p = self.participation[node][w] * dev_p[w];
                    let response_q = self.participation[node][w] * dev_q[w];
                    f_p[li] -= response_p;
                    f_q[li] -= response_q;
                    if net.wind[w].node == node {
                        f_p[li] -= dev_p[w];
                        f_q[li] -= dev_q[w];
                    }
                }
            }
        }
        let mut u = self.u.clone();
        for i in 1..n {
            let mut ui = self.u[0];
            for &li in &topo.root_path[i] {
                ui -= 2.0 * (f_p[li] * net.lines[li].r + f_q[li] * net.lines[li].x);
            }
            u[i] = ui;
        }
        Ok(RealTimeState { g_p, g_q, f_p, f_q, u })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadialResiduals {
    pub root_voltage: f64,
    pub flow_balance: f64,
    pub voltage_recursion: f64,
    pub participation_balance: f64,
}

impl RadialResiduals {
    pub fn max(&self) -> f64 {
        self.root_voltage
            .max(self.flow_balance)
            .max(self.voltage_recursion)
            .max(self.participation_balance)
    }
}

#[derive(Debug, Clone)]
pub enum RadialOutcome {
    Optimal(Box<RadialSolution>),
    Infeasible { solve_seconds: f64 },
}

impl RadialOutcome {
    pub fn optimal(&self) -> Option<&RadialSolution> {
        match self {
            RadialOutcome::Optimal(s) => Some(s),
            RadialOutcome::Infeasible { .. } => None,
        }
    }
}

/// Builds and solves with the dual-cap post-check, mirroring the DC driver.
pub fn solve_radial_day_ahead(
    net: &RadialNetwork,
    ds: &UncertaintyDataset,
    spec: &AmbiguitySpec,
    opts: &RadialOpfOptions,
    backend: &dyn SolverBackend,
) -> Result<RadialOutcome, OpfError> {
    if opts.soc_mode == SocMode::Cone && !backend.supports_soc() {
        return Err(OpfError::Backend(crate::lp::BackendError::ConesUnsupported(
            "requested cone mode on an LP-only backend; use polygon mode",
        )));
    }
    let sp = ds.implied_support();
    let mut vbar = opts
        .vbar
        .unwrap_or_else(|| containment_vbar(ds, &sp, default_vbar(ds.sample_count())));
    let mut doublings = 0;
    loop {
        let build_start = std::time::Instant::now();
        let mut model = ModelBuilder::new();
        let handles = build_lindistflow_opf(net, ds, spec, opts, vbar, &mut model)?;
        let build_seconds = build_start.elapsed().as_secs_f64();
        let res = backend.solve(&model, &opts.solve)?;
        match res.status {
            SolveStatus::Optimal => {
                return Ok(RadialOutcome::Optimal(Box::new(extract(
                    net,
                    &handles,
                    &res,
                    build_seconds,
                    vbar,
                    doublings,
                    false,
                ))));
            }
            SolveStatus::Infeasible => {
                return Ok(RadialOutcome::Infeasible {
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

fn extract(
    net: &RadialNetwork,
    handles: &RadialOpfHandles,
    res: &SolveResult,
    build_seconds: f64,
    vbar: f64,
    doublings: u32,
    cap_warning: bool,
) -> RadialSolution {
    let n = net.n_nodes();
    let nw = net.wind.len();
    RadialSolution {
        g_p: (0..n).map(|i| handles.g_p[i].map_or(0.0, |v| res.value(v))).collect(),
        g_q: (0..n).map(|i| handles.g_q[i].map_or(0.0, |v| res.value(v))).collect(),
        f_p: handles.f_p.iter().map(|&v| res.value(v)).collect(),
        f_q: handles.f_q.iter().map(|&v| res.value(v)).collect(),
        u: handles.u.iter().map(|&v| res.value(v)).collect(),
        participation: (0..n)
            .map(|i| {
                handles.participation[i]
                    .as_ref()
                    .map_or(vec![0.0; nw], |row| row.iter().map(|&v| res.value(v)).collect())
            })
            .collect(),
        objective: res.objective_value.expect("optimal"),
        day_ahead_cost: res.expr_value(&handles.day_ahead_cost),
        worst_case_recourse: res.expr_value(&handles.objective_block.objective_contribution),
        solve_seconds: res.wall_time.as_secs_f64(),
        build_seconds,
        vbar_used: vbar,
        vbar_doublings: doublings,
        cap_warning,
    }
}
