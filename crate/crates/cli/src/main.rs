use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdro_cli::config::{ExperimentConfig, GeneratorConfig};
use cdro_cli::{emit_plot_data, run_experiment};
use cdro_core::lp::backend_from_name;
use cdro_core::opf_dc::DcNetwork;
use cdro_core::opf_radial::RadialNetwork;
use cdro_core::scenario::{sample_gaussian_copula, GeneratorSpec};

#[derive(Parser)]
#[command(
    name = "cdro",
    about = "Distributionally robust OPF experiments with copula-restricted ambiguity sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the configured solver backend (simplex | clarabel).
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment sweep described by a TOML config.
    Run { config: PathBuf },
    /// Emit plot-ready CSV files from a completed results directory.
    PlotData { results_dir: PathBuf },
    /// Generate a synthetic wind dataset from a generator config.
    GenData {
        config: PathBuf,
        /// Output directory for dataset.csv and its sidecar.
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Validate a network file (DC or radial JSON).
    Validate { network: PathBuf },
}

#[derive(serde::Deserialize)]
struct GenDataConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    generator: GeneratorConfig,
    /// Optional builtin network to dump alongside the dataset.
    #[serde(default)]
    emit_network: Option<String>,
}

fn default_seed() -> u64 {
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
        {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg =
                ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
            if let Some(backend) = cli.backend {
                cfg.options.backend = backend;
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            // Fail on solver misconfiguration before any sweep work.
            backend_from_name(&cfg.options.backend).map_err(|e| e.to_string())?;
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            println!(
                "wrote {} rows to {} (meta: {})",
                out.rows.len(),
                out.results_path.display(),
                out.meta_path.display()
            );
            for row in &out.rows {
                println!(
                    "  theta1={} theta2={} status={} expected_cost={}",
                    row.theta1,
                    row.theta2.map_or("-".into(), |t| t.to_string()),
                    row.status,
                    row.expected_cost.map_or("-".into(), |c| format!("{c:.2}")),
                );
            }
            Ok(())
        }
        Command::PlotData { results_dir } => {
            let files = emit_plot_data(&results_dir).map_err(|e| e.to_string())?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::GenData { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let gen_cfg: GenDataConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
            let seed = cli.seed.unwrap_or(gen_cfg.seed);
            let g = &gen_cfg.generator;
            let marginal = g.parse_marginal().map_err(|e| e.to_string())?;
            let dim = g.dim;
            let mut corr = vec![vec![g.correlation; dim]; dim];
            for (k, row) in corr.iter_mut().enumerate() {
                row[k] = 1.0;
            }
            let spec = GeneratorSpec {
                dim,
                copula_correlation: corr,
                marginal,
                count: g.count,
                seed,
                capacities: vec![g.total_capacity_mw / dim as f64; dim],
            };
            let ds = sample_gaussian_copula(&spec).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let path = out.join("dataset.csv");
            ds.write_csv(&path).map_err(|e| e.to_string())?;
            // Record generation provenance in the sidecar.
            let sidecar = out.join("dataset.csv.meta");
            let mut meta = std::fs::read_to_string(&sidecar).map_err(|e| e.to_string())?;
            meta.push_str(&format!(
                "seed={seed}\ncopula_correlation={}\nmarginal={}\n",
                g.correlation,
                spec.marginal.describe()
            ));
            std::fs::write(&sidecar, meta).map_err(|e| e.to_string())?;
            println!("wrote {} ({} samples, {} farms)", path.display(), g.count, dim);
            if let Some(name) = gen_cfg.emit_network {
                let net_path = out.join("network.json");
                match name.as_str() {
                    "builtin:rts24" => cdro_core::instances::rts24_like()
                        .write_json(&net_path)
                        .map_err(|e| e.to_string())?,
                    "builtin:feeder15" => cdro_core::instances::feeder15()
                        .write_json(&net_path)
                        .map_err(|e| e.to_string())?,
                    other => return Err(format!("unknown emit_network {other}")),
                }
                println!("wrote {}", net_path.display());
            }
            Ok(())
        }
        Command::Validate { network } => {
            let text = std::fs::read_to_string(&network).map_err(|e| e.to_string())?;
            if let Ok(net) = serde_json::from_str::<DcNetwork>(&text) {
                net.validate().map_err(|e| e.to_string())?;
                net.ptdf_matrix().map_err(|e| e.to_string())?;
                println!(
                    "dc network ok: {} nodes, {} generators, {} lines, {} farms, {} loads",
                    net.n_nodes,
                    net.generators.len(),
                    net.lines.len(),
                    net.wind.len(),
                    net.loads.len()
                );
                return Ok(());
            }
            match serde_json::from_str::<RadialNetwork>(&text) {
                Ok(net) => {
                    net.topology().map_err(|e| e.to_string())?;
                    println!(
                        "radial network ok: {} nodes, {} lines, {} farms",
                        net.n_nodes(),
                        net.lines.len(),
                        net.wind.len()
                    );
                    Ok(())
                }
                Err(e) => Err(format!("not a recognizable network file: {e}")),
            }
        }
    }
}
