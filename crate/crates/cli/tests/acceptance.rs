//! Acceptance suite for the experiment driver: infeasibility handling and
//! the scaling harness.

use std::path::PathBuf;

use cdro_cli::config::ExperimentConfig;
use cdro_cli::run_experiment;

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cdro_accept_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn a09_tiny_radii_complete_with_status_rows() {
    let dir = temp_dir("a09");
    // Grid containing the (1e-4, 1e-4) corner plus a moderate point.
    let cfg: ExperimentConfig = toml::from_str(&format!(
        r#"
model = "dc"
ambiguity = "m2"
theta1_grid = [0.0001]
theta2_grid = [0.0001, 0.05]
epsilon = 0.05
n_in = 8
seed = 5
network = "builtin:three_node"
output_dir = "{}"

[generator]
dim = 1
correlation = 0.0
count = 60
"#,
        dir.display()
    ))
    .unwrap();
    let out = run_experiment(&cfg).expect("sweep must complete without crashing");
    assert_eq!(out.rows.len(), 2);
    for row in &out.rows {
        assert!(
            row.status == "optimal" || row.status == "infeasible",
            "unexpected status {}",
            row.status
        );
    }
    let text = std::fs::read_to_string(&out.results_path).unwrap();
    assert_eq!(text.lines().count(), 3, "header plus one row per grid point");

    // A genuinely infeasible instance must also come back as a status row:
    // reserves capped far below what the violation level demands.
    let net_path = dir.join("tight.json");
    let mut tight = cdro_core::instances::single_node_net();
    tight.generators[0].r_max = 5.0;
    tight.write_json(&net_path).unwrap();
    let cfg: ExperimentConfig = toml::from_str(&format!(
        r#"
model = "dc"
ambiguity = "m2"
theta1_grid = [0.001]
theta2_grid = [0.001]
epsilon = 0.001
n_in = 6
seed = 5
network = "{}"
output_dir = "{}"

[generator]
dim = 1
correlation = 0.0
count = 40
"#,
        net_path.display(),
        dir.join("tight_out").display()
    ))
    .unwrap();
    let out = run_experiment(&cfg).expect("infeasible point must not crash");
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.rows[0].status, "infeasible", "tight reserves must be reported infeasible");
    assert!(out.rows[0].expected_cost.is_none());

    // Binary-level smoke: exit code zero on the same tiny-radii config.
    let cfg_path = dir.join("tiny.toml");
    std::fs::write(
        &cfg_path,
        format!(
            r#"
model = "dc"
ambiguity = "m2"
theta1_grid = [0.0001]
theta2_grid = [0.0001]
epsilon = 0.05
n_in = 8
seed = 5
network = "builtin:three_node"
output_dir = "{}"

[generator]
dim = 1
correlation = 0.0
count = 60
"#,
            dir.join("bin_out").display()
        ),
    )
    .unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_cdro"))
        .args(["run"])
        .arg(&cfg_path)
        .status()
        .expect("binary runs");
    assert!(status.success(), "binary exited nonzero: {status:?}");

    std::fs::remove_dir_all(&dir).ok();
    pass("9 infeasibility-handling", "status rows recorded, exit 0, no crash".into());
}

#[test]
fn a10_scaling_harness() {
    let dir = temp_dir("a10");
    // Farm-count sweep 2..=12 at fifteen in-sample rows.
    let cfg: ExperimentConfig = toml::from_str(&format!(
        r#"
model = "dc"
ambiguity = "m2"
theta1_grid = [0.1]
theta2_grid = [0.01]
epsilon = 0.05
n_in = 15
seed = 31
network = "builtin:five_node"
output_dir = "{}"

[generator]
dim = 2
correlation = 0.5
count = 200
total_capacity_mw = 300.0

[sweep]
farms_grid = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]
"#,
        dir.join("farms").display()
    ))
    .unwrap();
    let out = run_experiment(&cfg).expect("farm sweep completes");
    assert_eq!(out.rows.len(), 11);
    let times: Vec<f64> = out.rows.iter().map(|r| r.solve_seconds).collect();
    let mut inversions = 0;
    for w in times.windows(2) {
        if w[1] < w[0] {
            inversions += 1;
        }
    }
    assert!(
        inversions <= 1,
        "wall time not monotone enough in farm count: {times:?} ({inversions} inversions)"
    );

    // In-sample-count sweep at two farms.
    let cfg: ExperimentConfig = toml::from_str(&format!(
        r#"
model = "dc"
ambiguity = "m2"
theta1_grid = [0.1]
theta2_grid = [0.01]
epsilon = 0.05
n_in = 10
seed = 31
network = "builtin:five_node"
output_dir = "{}"

[generator]
dim = 2
correlation = 0.5
count = 200
total_capacity_mw = 300.0

[sweep]
n_grid = [10, 20, 30, 40]
"#,
        dir.join("nsweep").display()
    ))
    .unwrap();
    let out = run_experiment(&cfg).expect("sample-count sweep completes");
    assert_eq!(out.rows.len(), 4);
    let t: std::collections::BTreeMap<usize, f64> =
        out.rows.iter().map(|r| (r.n_in, r.solve_seconds)).collect();
    let ratio = t[&40] / t[&20];
    assert!(
        ratio > 2.0,
        "growth not superlinear: time(40) = {:.3}s, time(20) = {:.3}s, ratio {ratio:.2}",
        t[&40],
        t[&20]
    );
    std::fs::remove_dir_all(&dir).ok();
    pass(
        "10 scaling-harness",
        format!("farm sweep {inversions} inversion(s); time(40)/time(20) = {ratio:.2}"),
    );
}
