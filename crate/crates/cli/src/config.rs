//! Experiment configuration: TOML text in, validated plan out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use cdro_core::model::GroundNorm;
use cdro_core::scenario::Marginal;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dc,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityKind {
    M1,
    M2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub dim: usize,
    /// Uniform pairwise rank correlation of the Gaussian copula.
    pub correlation: f64,
    /// Marginal family: "beta:a:b" or "tgauss:mean:sd".
    #[serde(default = "default_marginal")]
    pub marginal: String,
    pub count: usize,
    #[serde(default = "default_capacity")]
    pub total_capacity_mw: f64,
}

fn default_marginal() -> String {
    "beta:2:2".to_string()
}

fn default_capacity() -> f64 {
    1000.0
}

impl GeneratorConfig {
    pub fn parse_marginal(&self) -> Result<Marginal, ConfigError> {
        let parts: Vec<&str> = self.marginal.split(':').collect();
        match parts.as_slice() {
            ["beta", a, b] => {
                let alpha: f64 =
                    a.parse().map_err(|_| invalid("generator.marginal", "bad beta alpha"))?;
                let beta: f64 =
                    b.parse().map_err(|_| invalid("generator.marginal", "bad beta beta"))?;
                Ok(Marginal::Beta { alpha, beta })
            }
            ["tgauss", m, s] => {
                let mean: f64 =
                    m.parse().map_err(|_| invalid("generator.marginal", "bad tgauss mean"))?;
                let sd: f64 =
                    s.parse().map_err(|_| invalid("generator.marginal", "bad tgauss sd"))?;
                Ok(Marginal::TruncatedGaussian { mean, sd })
            }
            _ => Err(invalid(
                "generator.marginal",
                format!("expected beta:a:b or tgauss:m:s, got {}", self.marginal),
            )),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Extra sweep over in-sample sizes; empty means use `n_in` only.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    /// Extra sweep over farm counts; built-in networks only.
    #[serde(default)]
    pub farms_grid: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptionsConfig {
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_true")]
    pub projected: bool,
    #[serde(default)]
    pub vbar: Option<f64>,
    #[serde(default)]
    pub eps_reserve: Option<f64>,
    #[serde(default)]
    pub eps_line: Option<f64>,
    #[serde(default = "default_voll")]
    pub voll: f64,
    #[serde(default)]
    pub spill: f64,
    #[serde(default)]
    pub signed_recourse: bool,
    #[serde(default = "default_polygon")]
    pub polygon_sides: usize,
    /// "polygon" or "cone" apparent-power handling on feeders.
    #[serde(default = "default_soc")]
    pub soc_mode: String,
    #[serde(default)]
    pub ground_norm: Option<GroundNorm>,
}

fn default_backend() -> String {
    "clarabel".to_string()
}
fn default_threads() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_voll() -> f64 {
    1000.0
}
fn default_polygon() -> usize {
    32
}
fn default_soc() -> String {
    "polygon".to_string()
}

impl Default for OptionsConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields defaulted")
    }
}

/// One experiment: a model, an ambiguity family, parameter grids, data
/// provenance and solver options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub ambiguity: AmbiguityKind,
    pub theta1_grid: Vec<f64>,
    #[serde(default)]
    pub theta2_grid: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub n_in: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// "builtin:<name>" or a JSON path.
    pub network: String,
    /// "generate" or a CSV path.
    #[serde(default = "default_dataset")]
    pub dataset: String,
    pub output_dir: String,
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub options: OptionsConfig,
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    1
}
fn default_dataset() -> String {
    "generate".to_string()
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.theta1_grid.is_empty() {
            return Err(invalid("theta1_grid", "must not be empty"));
        }
        if self.theta1_grid.iter().any(|&t| t < 0.0) {
            return Err(invalid("theta1_grid", "radii must be nonnegative"));
        }
        match self.ambiguity {
            AmbiguityKind::M1 => {
                if self.theta2_grid.len() > 1 {
                    return Err(invalid(
                        "theta2_grid",
                        "the metric-only family admits at most a sentinel entry",
                    ));
                }
            }
            AmbiguityKind::M2 => {
                if self.theta2_grid.is_empty() {
                    return Err(invalid("theta2_grid", "the copula family needs a grid"));
                }
                if self.theta2_grid.iter().any(|&t| t < 0.0) {
                    return Err(invalid("theta2_grid", "radii must be nonnegative"));
                }
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", "must lie strictly inside (0, 1)"));
        }
        if self.n_in < 1 {
            return Err(invalid("n_in", "needs at least one in-sample row"));
        }
        if self.dataset == "generate" && self.generator.is_none() {
            return Err(invalid("generator", "dataset = \"generate\" needs a [generator] table"));
        }
        if let Some(g) = &self.generator {
            g.parse_marginal()?;
            if g.count <= self.n_in {
                return Err(invalid("generator.count", "must exceed n_in for a usable split"));
            }
            if !(0.0..=0.999).contains(&g.correlation.abs()) {
                return Err(invalid("generator.correlation", "must lie in (-0.999, 0.999)"));
            }
        }
        if !self.sweep.farms_grid.is_empty() && !self.network.starts_with("builtin:") {
            return Err(invalid("sweep.farms_grid", "farm sweeps need a builtin network"));
        }
        match self.options.soc_mode.as_str() {
            "polygon" | "cone" => {}
            other => return Err(invalid("options.soc_mode", format!("unknown mode {other}"))),
        }
        if self.options.polygon_sides < 4 {
            return Err(invalid("options.polygon_sides", "needs at least 4 sides"));
        }
        Ok(())
    }
}
