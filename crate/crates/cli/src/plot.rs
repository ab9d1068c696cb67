//! Plot-ready CSV emission keyed by figure analog: cost against each radius,
//! time against sample and farm counts, and the reserve comparison bars.
//! Mean and standard deviation travel together so shaded-band plots can be
//! reproduced externally.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no results found under {0}")]
    Empty(String),
    #[error("malformed results file: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
struct Row {
    ambiguity: String,
    theta1: f64,
    theta2: Option<f64>,
    n_in: usize,
    farms: usize,
    status: String,
    expected_cost: Option<f64>,
    std_dev: Option<f64>,
    eens: Option<f64>,
    reserve_up: Option<f64>,
    build_seconds: f64,
    solve_seconds: f64,
}

fn parse_results(path: &Path) -> Result<Vec<Row>, PlotError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PlotError::Malformed("empty results.csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let idx = |name: &str| -> Result<usize, PlotError> {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| PlotError::Malformed(format!("missing column {name}")))
    };
    let (i_amb, i_t1, i_t2, i_n, i_farms, i_status) = (
        idx("ambiguity")?,
        idx("theta1")?,
        idx("theta2")?,
        idx("n_in")?,
        idx("farms")?,
        idx("status")?,
    );
    let (i_exp, i_std, i_eens, i_rup, i_build, i_solve) = (
        idx("expected_cost")?,
        idx("std_dev")?,
        idx("eens_mwh")?,
        idx("reserve_up_total")?,
        idx("build_seconds")?,
        idx("solve_seconds")?,
    );
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let f = |i: usize| -> Option<f64> { cells.get(i).and_then(|c| c.parse().ok()) };
        rows.push(Row {
            ambiguity: cells.get(i_amb).unwrap_or(&"").to_string(),
            theta1: f(i_t1).unwrap_or(f64::NAN),
            theta2: f(i_t2),
            n_in: f(i_n).unwrap_or(0.0) as usize,
            farms: f(i_farms).unwrap_or(0.0) as usize,
            status: cells.get(i_status).unwrap_or(&"").to_string(),
            expected_cost: f(i_exp),
            std_dev: f(i_std),
            eens: f(i_eens),
            reserve_up: f(i_rup),
            build_seconds: f(i_build).unwrap_or(0.0),
            solve_seconds: f(i_solve).unwrap_or(0.0),
        });
    }
    Ok(rows)
}

/// Emits one file per figure analog into `<dir>/plots/`. Returns the emitted
/// paths in a deterministic order.
pub fn emit_plot_data(results_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let results = results_dir.join("results.csv");
    if !results.exists() {
        return Err(PlotError::Empty(results_dir.display().to_string()));
    }
    let mut rows = parse_results(&results)?;
    if rows.is_empty() {
        return Err(PlotError::Empty(results_dir.display().to_string()));
    }
    let plot_dir = results_dir.join("plots");
    std::fs::create_dir_all(&plot_dir)?;
    let mut emitted = Vec::new();

    let key = |v: f64| (v * 1e12).round() as i64;
    rows.sort_by_key(|r| {
        (
            r.ambiguity.clone(),
            r.farms,
            r.n_in,
            key(r.theta1),
            r.theta2.map(key).unwrap_or(i64::MIN),
        )
    });

    // Cost against theta1, one series per (ambiguity, theta2).
    {
        let mut out = String::from("ambiguity,theta2,theta1,expected_cost,std_dev,status\n");
        for r in &rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.ambiguity,
                r.theta2.map_or(String::new(), |t| t.to_string()),
                r.theta1,
                r.expected_cost.map_or(String::new(), |v| format!("{v:.6}")),
                r.std_dev.map_or(String::new(), |v| format!("{v:.6}")),
                r.status,
            );
        }
        let p = plot_dir.join("cost_vs_theta1.csv");
        std::fs::write(&p, out)?;
        emitted.push(p);
    }
    // Cost against theta2, one series per theta1 (copula rows only).
    {
        let mut sorted: Vec<&Row> = rows.iter().filter(|r| r.theta2.is_some()).collect();
        sorted.sort_by_key(|r| (key(r.theta1), key(r.theta2.unwrap_or(0.0))));
        let mut out = String::from("theta1,theta2,expected_cost,std_dev,eens_mwh,status\n");
        for r in sorted {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.theta1,
                r.theta2.unwrap(),
                r.expected_cost.map_or(String::new(), |v| format!("{v:.6}")),
                r.std_dev.map_or(String::new(), |v| format!("{v:.6}")),
                r.eens.map_or(String::new(), |v| format!("{v:.6}")),
                r.status,
            );
        }
        let p = plot_dir.join("cost_vs_theta2.csv");
        std::fs::write(&p, out)?;
        emitted.push(p);
    }
    // Solve time against the in-sample count.
    {
        let mut agg: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for r in &rows {
            let e = agg.entry(r.n_in).or_insert((0.0, 0.0));
            e.0 = e.0.max(r.build_seconds);
            e.1 = e.1.max(r.solve_seconds);
        }
        let mut out = String::from("n_in,build_seconds,solve_seconds\n");
        for (n, (b, s)) in agg {
            let _ = writeln!(out, "{n},{b:.4},{s:.4}");
        }
        let p = plot_dir.join("time_vs_n.csv");
        std::fs::write(&p, out)?;
        emitted.push(p);
    }
    // Solve time against the farm count.
    {
        let mut agg: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for r in &rows {
            let e = agg.entry(r.farms).or_insert((0.0, 0.0));
            e.0 = e.0.max(r.build_seconds);
            e.1 = e.1.max(r.solve_seconds);
        }
        let mut out = String::from("farms,build_seconds,solve_seconds\n");
        for (f, (b, s)) in agg {
            let _ = writeln!(out, "{f},{b:.4},{s:.4}");
        }
        let p = plot_dir.join("time_vs_farms.csv");
        std::fs::write(&p, out)?;
        emitted.push(p);
    }
    // Reserve comparison bars.
    {
        let mut out = String::from("label,theta1,theta2,reserve_up_total\n");
        for r in &rows {
            if let Some(rup) = r.reserve_up {
                let label = match r.theta2 {
                    Some(t2) => format!("{}_theta2_{t2}", r.ambiguity),
                    None => r.ambiguity.clone(),
                };
                let _ = writeln!(
                    out,
                    "{label},{},{},{rup:.4}",
                    r.theta1,
                    r.theta2.map_or(String::new(), |t| t.to_string()),
                );
            }
        }
        let p = plot_dir.join("reserve_bars.csv");
        std::fs::write(&p, out)?;
        emitted.push(p);
    }
    Ok(emitted)
}
