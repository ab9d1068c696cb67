//! Batch experiment driver: resolve the instance, sweep the grids, replay
//! out-of-sample, persist plot-ready results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use cdro_core::instances;
use cdro_core::lp::{backend_from_name, SolveOptions, SolverBackend};
use cdro_core::model::{AmbiguitySpec, GroundNorm, UncertaintyDataset};
use cdro_core::oos::{
    evaluate_out_of_sample, DcRedispatch, RadialRedispatch, RecoursePrices,
};
use cdro_core::opf_dc::{
    solve_day_ahead, DayAheadOutcome, DcNetwork, DcOpfOptions, DrccLevels, OpfError,
};
use cdro_core::opf_radial::{
    solve_radial_day_ahead, RadialNetwork, RadialOpfOptions, RadialOutcome, SocMode,
};
use cdro_core::scenario::{sample_gaussian_copula, split_dataset, GeneratorSpec, ScenarioError};

use crate::config::{AmbiguityKind, ConfigError, ExperimentConfig, ModelKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("backend selection failed: {0}")]
    Backend(#[from] cdro_core::lp::BackendError),
    #[error("instance error: {0}")]
    Instance(String),
    #[error("scenario generation failed: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("model error: {0}")]
    Opf(#[from] OpfError),
    #[error("dataset error: {0}")]
    Dataset(#[from] cdro_core::model::ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One grid point's persisted result.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub epsilon: f64,
    pub n_in: usize,
    pub farms: usize,
    pub status: &'static str,
    pub objective: Option<f64>,
    pub day_ahead_cost: Option<f64>,
    pub expected_cost: Option<f64>,
    pub std_dev: Option<f64>,
    pub eens_mwh: Option<f64>,
    pub reserve_up_total: Option<f64>,
    pub reserve_dn_total: Option<f64>,
    pub build_seconds: f64,
    pub solve_seconds: f64,
    pub oos_failures: usize,
    pub vbar_used: Option<f64>,
    pub vbar_doublings: u32,
    pub meta_hash: String,
}

pub const RESULTS_HEADER: &str = "model,ambiguity,theta1,theta2,epsilon,n_in,farms,status,objective,day_ahead_cost,expected_cost,std_dev,eens_mwh,reserve_up_total,reserve_dn_total,build_seconds,solve_seconds,oos_failures,vbar_used,vbar_doublings,meta_hash";

pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub results_path: PathBuf,
    pub meta_path: PathBuf,
}

enum Network {
    Dc(DcNetwork),
    Radial(RadialNetwork),
}

fn resolve_network(cfg: &ExperimentConfig, farms: Option<usize>) -> Result<Network, RunError> {
    let name = cfg.network.as_str();
    if let Some(builtin) = name.strip_prefix("builtin:") {
        let net = match (builtin, cfg.model) {
            ("rts24", ModelKind::Dc) => Network::Dc(match farms {
                Some(k) => instances::rts24_with_farms(k),
                None => instances::rts24_like(),
            }),
            ("three_node", ModelKind::Dc) => Network::Dc(instances::three_node_net()),
            ("single_node", ModelKind::Dc) => Network::Dc(instances::single_node_net()),
            ("five_node", ModelKind::Dc) => {
                Network::Dc(instances::five_node_net(farms.unwrap_or(2)))
            }
            ("feeder15", ModelKind::Radial) => Network::Radial(instances::feeder15()),
            ("feeder3", ModelKind::Radial) => Network::Radial(instances::feeder3()),
            (other, _) => {
                return Err(RunError::Instance(format!(
                    "unknown builtin network '{other}' for this model kind"
                )))
            }
        };
        Ok(net)
    } else {
        let path = Path::new(name);
        match cfg.model {
            ModelKind::Dc => Ok(Network::Dc(DcNetwork::read_json(path)?)),
            ModelKind::Radial => Ok(Network::Radial(RadialNetwork::read_json(path)?)),
        }
    }
}

fn wind_capacities(net: &Network) -> Vec<f64> {
    match net {
        Network::Dc(n) => n.wind.iter().map(|w| w.capacity).collect(),
        Network::Radial(n) => n.wind.iter().map(|w| w.capacity).collect(),
    }
}

fn resolve_dataset(
    cfg: &ExperimentConfig,
    net: &Network,
    seed: u64,
) -> Result<UncertaintyDataset, RunError> {
    let caps = wind_capacities(net);
    if cfg.dataset == "generate" {
        let gen = cfg.generator.as_ref().expect("validated");
        let dim = caps.len();
        let mut corr = vec![vec![gen.correlation; dim]; dim];
        for (k, row) in corr.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        let spec = GeneratorSpec {
            dim,
            copula_correlation: corr,
            marginal: gen.parse_marginal()?,
            count: gen.count,
            seed,
            capacities: caps,
        };
        Ok(sample_gaussian_copula(&spec)?)
    } else {
        let ds = UncertaintyDataset::read_csv(Path::new(&cfg.dataset))?;
        Ok(ds)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn write_meta(
    cfg: &ExperimentConfig,
    dataset_digest: u64,
    path: &Path,
) -> Result<String, RunError> {
    let o = &cfg.options;
    let mut meta = String::new();
    let _ = writeln!(meta, "model={:?}", cfg.model);
    let _ = writeln!(meta, "ambiguity={:?}", cfg.ambiguity);
    let _ = writeln!(meta, "epsilon={}", cfg.epsilon);
    let _ = writeln!(meta, "n_in={}", cfg.n_in);
    let _ = writeln!(meta, "seed={}", cfg.seed);
    let _ = writeln!(meta, "split_seed={}", cfg.seed.wrapping_add(1000));
    let _ = writeln!(meta, "network={}", cfg.network);
    let _ = writeln!(meta, "dataset={}", cfg.dataset);
    let _ = writeln!(meta, "dataset_digest={dataset_digest:016x}");
    if let Some(g) = &cfg.generator {
        let _ = writeln!(meta, "generator.correlation={}", g.correlation);
        let _ = writeln!(meta, "generator.marginal={}", g.marginal);
        let _ = writeln!(meta, "generator.count={}", g.count);
    }
    let _ = writeln!(meta, "backend={}", o.backend);
    let _ = writeln!(meta, "projected={}", o.projected);
    let _ = writeln!(meta, "vbar={:?}", o.vbar);
    let _ = writeln!(meta, "eps_reserve={}", o.eps_reserve.unwrap_or(cfg.epsilon));
    let _ = writeln!(meta, "eps_line={}", o.eps_line.unwrap_or(cfg.epsilon));
    let _ = writeln!(meta, "voll={}", o.voll);
    let _ = writeln!(meta, "spill={}", o.spill);
    let _ = writeln!(meta, "signed_recourse={}", o.signed_recourse);
    let _ = writeln!(meta, "polygon_sides={}", o.polygon_sides);
    let _ = writeln!(meta, "soc_mode={}", o.soc_mode);
    let _ = writeln!(
        meta,
        "ground_norm={}",
        o.ground_norm.unwrap_or(GroundNorm::OneNorm).name()
    );
    let _ = writeln!(meta, "eens_period_hours=1");
    let _ = writeln!(meta, "line_limits=both_directions");
    std::fs::write(path, &meta)?;
    Ok(format!("{:016x}", fnv1a(meta.as_bytes())))
}

struct Instance {
    net: Network,
    in_sample: UncertaintyDataset,
    out_sample: UncertaintyDataset,
}

fn build_instance(
    cfg: &ExperimentConfig,
    farms: Option<usize>,
    n_in: usize,
) -> Result<Instance, RunError> {
    let net = resolve_network(cfg, farms)?;
    let full = resolve_dataset(cfg, &net, cfg.seed)?;
    let (in_sample, out_sample) = split_dataset(&full, n_in, cfg.seed.wrapping_add(1000))?;
    Ok(Instance { net, in_sample, out_sample })
}

/// Runs the whole sweep and persists `results.csv` plus `run_meta.txt` under
/// the configured output directory. Infeasible grid points become status
/// rows, never failures.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let backend = backend_from_name(&cfg.options.backend)?;
    let out_dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out_dir)?;

    // The meta hash covers every design-decision value in force.
    let probe = build_instance(cfg, None, cfg.n_in)?;
    let digest = {
        let mut bytes = Vec::new();
        for row in probe.in_sample.deviations() {
            for v in row {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        fnv1a(&bytes)
    };
    let meta_path = out_dir.join("run_meta.txt");
    let meta_hash = write_meta(cfg, digest, &meta_path)?;

    // Grid points in deterministic order.
    let n_values: Vec<usize> =
        if cfg.sweep.n_grid.is_empty() { vec![cfg.n_in] } else { cfg.sweep.n_grid.clone() };
    let farm_values: Vec<Option<usize>> = if cfg.sweep.farms_grid.is_empty() {
        vec![None]
    } else {
        cfg.sweep.farms_grid.iter().map(|&f| Some(f)).collect()
    };
    let theta2_values: Vec<Option<f64>> = match cfg.ambiguity {
        AmbiguityKind::M1 => vec![None],
        AmbiguityKind::M2 => cfg.theta2_grid.iter().map(|&t| Some(t)).collect(),
    };

    let mut rows = Vec::new();
    for &farms in &farm_values {
        for &n_in in &n_values {
            let instance = build_instance(cfg, farms, n_in)?;
            let n_farms = wind_capacities(&instance.net).len();
            for &theta1 in &cfg.theta1_grid {
                for &theta2 in &theta2_values {
                    let row = run_point(
                        cfg,
                        &instance,
                        theta1,
                        theta2,
                        n_in,
                        n_farms,
                        backend.as_ref(),
                        &meta_hash,
                    )?;
                    rows.push(row);
                }
            }
        }
    }

    let results_path = out_dir.join("results.csv");
    let mut csv = String::from(RESULTS_HEADER);
    csv.push('\n');
    let model = match cfg.model {
        ModelKind::Dc => "dc",
        ModelKind::Radial => "radial",
    };
    let ambiguity = match cfg.ambiguity {
        AmbiguityKind::M1 => "m1",
        AmbiguityKind::M2 => "m2",
    };
    for r in &rows {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.9}"));
        let _ = writeln!(
            csv,
            "{model},{ambiguity},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4},{:.4},{},{},{},{}",
            r.theta1,
            r.theta2.map_or(String::new(), |t| t.to_string()),
            r.epsilon,
            r.n_in,
            r.farms,
            r.status,
            opt(r.objective),
            opt(r.day_ahead_cost),
            opt(r.expected_cost),
            opt(r.std_dev),
            opt(r.eens_mwh),
            opt(r.reserve_up_total),
            opt(r.reserve_dn_total),
            r.build_seconds,
            r.solve_seconds,
            r.oos_failures,
            r.vbar_used.map_or(String::new(), |v| format!("{v:.6}")),
            r.vbar_doublings,
            r.meta_hash,
        );
    }
    std::fs::write(&results_path, csv)?;
    Ok(RunOutcome { rows, results_path, meta_path })
}

#[allow(clippy::too_many_arguments)]
fn run_point(
    cfg: &ExperimentConfig,
    instance: &Instance,
    theta1: f64,
    theta2: Option<f64>,
    n_in: usize,
    n_farms: usize,
    backend: &dyn SolverBackend,
    meta_hash: &str,
) -> Result<ResultRow, RunError> {
    let spec = AmbiguitySpec::new(
        theta1,
        theta2,
        cfg.options.ground_norm.unwrap_or(GroundNorm::OneNorm),
    )?;
    let prices = RecoursePrices {
        voll: cfg.options.voll,
        spill: cfg.options.spill,
        signed_recourse: cfg.options.signed_recourse,
    };
    let mut row = ResultRow {
        theta1,
        theta2,
        epsilon: cfg.epsilon,
        n_in,
        farms: n_farms,
        status: "optimal",
        objective: None,
        day_ahead_cost: None,
        expected_cost: None,
        std_dev: None,
        eens_mwh: None,
        reserve_up_total: None,
        reserve_dn_total: None,
        build_seconds: 0.0,
        solve_seconds: 0.0,
        oos_failures: 0,
        vbar_used: None,
        vbar_doublings: 0,
        meta_hash: meta_hash.to_string(),
    };
    match &instance.net {
        Network::Dc(net) => {
            let opts = DcOpfOptions {
                eps: DrccLevels {
                    reserve: cfg.options.eps_reserve.unwrap_or(cfg.epsilon),
                    line: cfg.options.eps_line.unwrap_or(cfg.epsilon),
                },
                vbar: cfg.options.vbar,
                projected: cfg.options.projected,
                max_vbar_doublings: 6,
                solve: SolveOptions::default(),
            };
            match solve_day_ahead(net, &instance.in_sample, &spec, &opts, backend)? {
                DayAheadOutcome::Optimal(sol) => {
                    row.objective = Some(sol.objective);
                    row.day_ahead_cost = Some(sol.day_ahead_cost);
                    row.reserve_up_total = Some(sol.total_r_up());
                    row.reserve_dn_total = Some(sol.total_r_dn());
                    row.build_seconds = sol.build_seconds;
                    row.solve_seconds = sol.solve_seconds;
                    row.vbar_used = Some(sol.vbar_used);
                    row.vbar_doublings = sol.vbar_doublings;
                    let rd = DcRedispatch::new(net, &instance.in_sample, &sol, prices)?;
                    let report =
                        evaluate_out_of_sample(&rd, &instance.out_sample, backend)?;
                    row.expected_cost = Some(report.expected_cost);
                    row.std_dev = Some(report.std_dev);
                    row.eens_mwh = Some(report.eens_mwh);
                    row.oos_failures = report.failures;
                }
                DayAheadOutcome::Infeasible { solve_seconds } => {
                    row.status = "infeasible";
                    row.solve_seconds = solve_seconds;
                }
            }
        }
        Network::Radial(net) => {
            let opts = RadialOpfOptions {
                eps_gen: cfg.options.eps_reserve.unwrap_or(cfg.epsilon),
                eps_voltage: cfg.options.eps_line.unwrap_or(cfg.epsilon),
                soc_mode: match cfg.options.soc_mode.as_str() {
                    "cone" => SocMode::Cone,
                    _ => SocMode::Polygon(cfg.options.polygon_sides),
                },
                vbar: cfg.options.vbar,
                projected: cfg.options.projected,
                max_vbar_doublings: 6,
                solve: SolveOptions::default(),
            };
            match solve_radial_day_ahead(net, &instance.in_sample, &spec, &opts, backend)? {
                RadialOutcome::Optimal(sol) => {
                    row.objective = Some(sol.objective);
                    row.day_ahead_cost = Some(sol.day_ahead_cost);
                    row.build_seconds = sol.build_seconds;
                    row.solve_seconds = sol.solve_seconds;
                    row.vbar_used = Some(sol.vbar_used);
                    row.vbar_doublings = sol.vbar_doublings;
                    let rd = RadialRedispatch::new(net, &instance.in_sample, &sol, prices);
                    let report =
                        evaluate_out_of_sample(&rd, &instance.out_sample, backend)?;
                    row.expected_cost = Some(report.expected_cost);
                    row.std_dev = Some(report.std_dev);
                    row.eens_mwh = Some(report.eens_mwh);
                    row.oos_failures = report.failures;
                }
                RadialOutcome::Infeasible { solve_seconds } => {
                    row.status = "infeasible";
                    row.solve_seconds = solve_seconds;
                }
            }
        }
    }
    Ok(row)
}
