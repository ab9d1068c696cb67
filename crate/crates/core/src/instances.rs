//! Built-in study networks.
//!
//! The transmission case is a 24-node, 34-line system in the shape of the
//! single-area reliability test system (parallel circuits merged), with the
//! fleet scaled so the headline aggregates come out exactly: 12 conventional
//! units totalling 2,362.5 MW with 798 MW of reserve capability, 17 loads
//! totalling 2,207 MW, and two wind farms totalling 1,000 MW.

use crate::opf_dc::{DcLine, DcNetwork, Generator, Load, WindFarm};

/// 24-node transmission instance. Wind farms sit at nodes 15 and 20
/// (0-based), both on the 230 kV ring.
pub fn rts24_like() -> DcNetwork {
    // (from, to, reactance p.u., capacity MW); merged pairs carry half the
    // reactance and twice the rating of a single circuit.
    let line_data: [(usize, usize, f64, f64); 34] = [
        (1, 2, 0.0139, 175.0),
        (1, 3, 0.2112, 175.0),
        (1, 5, 0.0845, 175.0),
        (2, 4, 0.1267, 175.0),
        (2, 6, 0.1920, 175.0),
        (3, 9, 0.1190, 175.0),
        (3, 24, 0.0839, 400.0),
        (4, 9, 0.1037, 175.0),
        (5, 10, 0.0883, 175.0),
        (6, 10, 0.0605, 175.0),
        (7, 8, 0.0614, 175.0),
        (8, 9, 0.1651, 175.0),
        (8, 10, 0.1651, 175.0),
        (9, 11, 0.0839, 400.0),
        (9, 12, 0.0839, 400.0),
        (10, 11, 0.0839, 400.0),
        (10, 12, 0.0839, 400.0),
        (11, 13, 0.0476, 500.0),
        (11, 14, 0.0418, 500.0),
        (12, 13, 0.0476, 500.0),
        (12, 23, 0.0966, 500.0),
        (13, 23, 0.0865, 500.0),
        (14, 16, 0.0389, 500.0),
        (15, 16, 0.0173, 500.0),
        (15, 21, 0.0245, 1000.0),
        (15, 24, 0.0519, 500.0),
        (16, 17, 0.0259, 500.0),
        (16, 19, 0.0231, 500.0),
        (17, 18, 0.0144, 500.0),
        (17, 22, 0.1053, 500.0),
        (18, 21, 0.01295, 1000.0),
        (19, 20, 0.0198, 1000.0),
        (20, 23, 0.0108, 1000.0),
        (21, 22, 0.0678, 500.0),
    ];
    let lines = line_data
        .iter()
        .map(|&(f, t, x, cap)| DcLine { from: f - 1, to: t - 1, reactance: x, capacity: cap })
        .collect();

    // (bus, g_max, r_max, energy cost $/MWh)
    let gen_data: [(usize, f64, f64, f64); 12] = [
        (1, 152.0, 40.0, 13.3),
        (2, 152.0, 40.0, 13.6),
        (7, 240.0, 80.0, 20.8),
        (13, 285.0, 95.0, 20.1),
        (13, 200.0, 70.0, 21.4),
        (15, 155.0, 50.0, 10.7),
        (16, 155.0, 50.0, 10.9),
        (18, 280.0, 95.0, 5.5),
        (21, 280.0, 95.0, 5.9),
        (22, 210.0, 70.0, 6.4),
        (23, 133.5, 58.0, 10.2),
        (23, 120.0, 55.0, 11.3),
    ];
    let generators = gen_data
        .iter()
        .enumerate()
        .map(|(idx, &(bus, g_max, r_max, cost))| Generator {
            node: bus - 1,
            cost,
            // Distinct reserve prices keep the optimum non-degenerate;
            // capacity prices sit around five percent of energy cost.
            cost_res_up: 0.06 * cost + 0.02 * (idx + 1) as f64,
            cost_res_dn: 0.05 * cost + 0.015 * (idx + 1) as f64,
            g_min: 0.0,
            g_max,
            r_max,
        })
        .collect();

    // (bus, demand MW): standard load split rescaled to 2,207 MW total.
    let load_data: [(usize, f64); 17] = [
        (1, 83.6),
        (2, 75.1),
        (3, 139.4),
        (4, 57.3),
        (5, 55.0),
        (6, 105.3),
        (7, 96.8),
        (8, 132.4),
        (9, 135.5),
        (10, 151.0),
        (13, 205.2),
        (14, 150.2),
        (15, 245.5),
        (16, 77.4),
        (18, 258.0),
        (19, 140.2),
        (20, 99.1),
    ];
    let loads =
        load_data.iter().map(|&(bus, demand)| Load { node: bus - 1, demand }).collect();

    DcNetwork {
        n_nodes: 24,
        generators,
        loads,
        lines,
        wind: vec![
            WindFarm { node: 15, capacity: 500.0 },
            WindFarm { node: 20, capacity: 500.0 },
        ],
        ptdf: None,
    }
}

/// Rescales the wind fleet of the 24-node instance to `n_farms` equal farms
/// totalling 1,000 MW, spread over the 230 kV nodes.
pub fn rts24_with_farms(n_farms: usize) -> DcNetwork {
    let mut net = rts24_like();
    let sites = [15usize, 20, 12, 17, 10, 13, 22, 18, 16, 21, 14, 11];
    let cap = 1000.0 / n_farms as f64;
    net.wind = (0..n_farms)
        .map(|i| WindFarm { node: sites[i % sites.len()], capacity: cap })
        .collect();
    net
}

/// Three nodes, two generators, one wind farm: small enough to reason about,
/// meshed enough to exercise the flow constraints.
pub fn three_node_net() -> DcNetwork {
    DcNetwork {
        n_nodes: 3,
        generators: vec![
            Generator {
                node: 0,
                cost: 12.0,
                cost_res_up: 3.0,
                cost_res_dn: 2.5,
                g_min: 0.0,
                g_max: 200.0,
                r_max: 80.0,
            },
            Generator {
                node: 1,
                cost: 25.0,
                cost_res_up: 6.0,
                cost_res_dn: 5.0,
                g_min: 0.0,
                g_max: 150.0,
                r_max: 60.0,
            },
        ],
        loads: vec![Load { node: 2, demand: 180.0 }],
        lines: vec![
            DcLine { from: 0, to: 1, reactance: 0.1, capacity: 100.0 },
            DcLine { from: 0, to: 2, reactance: 0.1, capacity: 150.0 },
            DcLine { from: 1, to: 2, reactance: 0.1, capacity: 150.0 },
        ],
        wind: vec![WindFarm { node: 2, capacity: 100.0 }],
        ptdf: None,
    }
}

/// One node, one generator, one farm, no lines: dispatch arithmetic is
/// solvable by hand.
pub fn single_node_net() -> DcNetwork {
    DcNetwork {
        n_nodes: 1,
        generators: vec![Generator {
            node: 0,
            cost: 20.0,
            cost_res_up: 4.0,
            cost_res_dn: 3.5,
            g_min: 0.0,
            g_max: 300.0,
            r_max: 150.0,
        }],
        loads: vec![Load { node: 0, demand: 150.0 }],
        lines: vec![],
        wind: vec![WindFarm { node: 0, capacity: 100.0 }],
        ptdf: None,
    }
}

/// Compact five-node meshed system for scaling sweeps over farm counts.
pub fn five_node_net(n_farms: usize) -> DcNetwork {
    let sites = [2usize, 3, 4, 1, 0];
    let cap = 300.0 / n_farms as f64;
    DcNetwork {
        n_nodes: 5,
        generators: vec![
            Generator {
                node: 0,
                cost: 10.0,
                cost_res_up: 2.5,
                cost_res_dn: 2.2,
                g_min: 0.0,
                g_max: 350.0,
                r_max: 140.0,
            },
            Generator {
                node: 1,
                cost: 18.0,
                cost_res_up: 4.5,
                cost_res_dn: 4.0,
                g_min: 0.0,
                g_max: 250.0,
                r_max: 110.0,
            },
            Generator {
                node: 4,
                cost: 27.0,
                cost_res_up: 6.5,
                cost_res_dn: 6.0,
                g_min: 0.0,
                g_max: 200.0,
                r_max: 90.0,
            },
        ],
        loads: vec![
            Load { node: 2, demand: 200.0 },
            Load { node: 3, demand: 170.0 },
            Load { node: 4, demand: 80.0 },
        ],
        lines: vec![
            DcLine { from: 0, to: 1, reactance: 0.08, capacity: 250.0 },
            DcLine { from: 0, to: 2, reactance: 0.10, capacity: 250.0 },
            DcLine { from: 1, to: 3, reactance: 0.09, capacity: 250.0 },
            DcLine { from: 2, to: 3, reactance: 0.07, capacity: 250.0 },
            DcLine { from: 3, to: 4, reactance: 0.06, capacity: 250.0 },
            DcLine { from: 2, to: 4, reactance: 0.11, capacity: 250.0 },
        ],
        wind: (0..n_farms)
            .map(|i| WindFarm { node: sites[i % sites.len()], capacity: cap })
            .collect(),
        ptdf: None,
    }
}

use crate::opf_radial::{RadialGen, RadialLine, RadialNetwork, RadialNode, RadialWind};

/// Fifteen-node radial feeder (per-unit on a 1 MVA base): a main trunk with
/// three laterals, two 1 MW controllable units, two wind turbines totalling
/// 1 MW, and an import-limited interface at the root.
pub fn feeder15() -> RadialNetwork {
    let d = |p: f64, q: f64| RadialNode {
        demand_p: p,
        demand_q: q,
        gen: None,
        v_min: 0.95,
        v_max: 1.05,
    };
    let mut nodes = vec![
        // Root: transmission interface, expensive import, limited capacity.
        RadialNode {
            demand_p: 0.0,
            demand_q: 0.0,
            gen: Some(RadialGen { cost: 80.0, p_min: -0.5, p_max: 1.8, q_min: -1.2, q_max: 1.2 }),
            v_min: 0.95,
            v_max: 1.05,
        },
        d(0.15, 0.05), // 1
        d(0.20, 0.07), // 2
        d(0.25, 0.08), // 3
        d(0.20, 0.06), // 4
        d(0.30, 0.10), // 5
        d(0.20, 0.07), // 6
        d(0.15, 0.05), // 7
        d(0.20, 0.06), // 8
        d(0.15, 0.05), // 9
        d(0.20, 0.07), // 10
        d(0.15, 0.05), // 11
        d(0.10, 0.03), // 12
        d(0.20, 0.06), // 13
        d(0.15, 0.05), // 14
    ];
    nodes[6].gen =
        Some(RadialGen { cost: 35.0, p_min: 0.0, p_max: 1.0, q_min: -0.5, q_max: 0.5 });
    nodes[12].gen =
        Some(RadialGen { cost: 45.0, p_min: 0.0, p_max: 1.0, q_min: -0.5, q_max: 0.5 });

    let l = |from: usize, to: usize, r: f64, x: f64, limit: f64| RadialLine {
        from,
        to,
        r,
        x,
        limit,
    };
    RadialNetwork {
        nodes,
        lines: vec![
            l(0, 1, 0.006, 0.009, 3.0),
            l(1, 2, 0.008, 0.011, 2.5),
            l(2, 3, 0.009, 0.012, 2.0),
            l(3, 4, 0.010, 0.013, 2.0),
            l(4, 5, 0.010, 0.013, 1.8),
            l(5, 6, 0.011, 0.014, 1.5),
            l(6, 7, 0.012, 0.015, 0.8),
            l(2, 8, 0.010, 0.012, 1.2),
            l(8, 9, 0.012, 0.014, 1.0),
            l(4, 10, 0.010, 0.012, 1.2),
            l(10, 11, 0.011, 0.013, 1.0),
            l(11, 12, 0.012, 0.014, 1.2),
            l(5, 13, 0.011, 0.013, 1.0),
            l(13, 14, 0.012, 0.015, 0.9),
        ],
        wind: vec![
            RadialWind { node: 9, capacity: 0.5, reactive_ratio: 0.0 },
            RadialWind { node: 14, capacity: 0.5, reactive_ratio: 0.0 },
        ],
    }
}

/// Three-node chain for hand-checkable LinDistFlow arithmetic.
pub fn feeder3() -> RadialNetwork {
    let mut nodes = vec![
        RadialNode {
            demand_p: 0.0,
            demand_q: 0.0,
            gen: Some(RadialGen { cost: 50.0, p_min: -1.0, p_max: 2.0, q_min: -1.0, q_max: 1.0 }),
            v_min: 0.95,
            v_max: 1.05,
        },
        RadialNode { demand_p: 0.4, demand_q: 0.12, gen: None, v_min: 0.95, v_max: 1.05 },
        RadialNode { demand_p: 0.3, demand_q: 0.10, gen: None, v_min: 0.95, v_max: 1.05 },
    ];
    nodes[2].gen = Some(RadialGen { cost: 30.0, p_min: 0.0, p_max: 0.5, q_min: -0.3, q_max: 0.3 });
    RadialNetwork {
        nodes,
        lines: vec![
            RadialLine { from: 0, to: 1, r: 0.02, x: 0.025, limit: 1.5 },
            RadialLine { from: 1, to: 2, r: 0.03, x: 0.035, limit: 1.0 },
        ],
        wind: vec![RadialWind { node: 1, capacity: 0.2, reactive_ratio: 0.0 }],
    }
}
