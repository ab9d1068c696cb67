//! Synthetic wind dataset generation with a prescribed Gaussian-copula
//! dependence structure, plus dataset splitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use thiserror::Error;

use crate::linalg::cholesky;
use crate::model::UncertaintyDataset;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("correlation matrix is not symmetric PSD with unit diagonal: {0}")]
    BadCorrelation(String),
    #[error("sample count {0} must be at least 2")]
    TooFewSamples(usize),
    #[error("invalid marginal parameters: {0}")]
    BadMarginal(String),
    #[error("split point {n_in} outside 1..{n}")]
    BadSplit { n_in: usize, n: usize },
}

/// Marginal distribution of each farm's normalized output on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Marginal {
    Beta { alpha: f64, beta: f64 },
    TruncatedGaussian { mean: f64, sd: f64 },
}

impl Marginal {
    /// Maps a uniform draw to a normalized output level in [0, 1].
    fn inverse_cdf(&self, u: f64) -> Result<f64, ScenarioError> {
        let u = u.clamp(1e-12, 1.0 - 1e-12);
        match *self {
            Marginal::Beta { alpha, beta } => {
                let dist = Beta::new(alpha, beta).map_err(|e| {
                    ScenarioError::BadMarginal(format!("beta({alpha},{beta}): {e}"))
                })?;
                Ok(dist.inverse_cdf(u).clamp(0.0, 1.0))
            }
            Marginal::TruncatedGaussian { mean, sd } => {
                if sd <= 0.0 {
                    return Err(ScenarioError::BadMarginal(format!("sd {sd} must be > 0")));
                }
                let dist = Normal::new(mean, sd)
                    .map_err(|e| ScenarioError::BadMarginal(e.to_string()))?;
                let lo = dist.cdf(0.0);
                let hi = dist.cdf(1.0);
                Ok(dist.inverse_cdf(lo + u * (hi - lo)).clamp(0.0, 1.0))
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Marginal::Beta { alpha, beta } => format!("beta({alpha},{beta})"),
            Marginal::TruncatedGaussian { mean, sd } => format!("truncated_gaussian({mean},{sd})"),
        }
    }
}

/// Generator configuration: dependence structure, marginal family, sample
/// count and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    /// Row-major dim x dim correlation matrix of the Gaussian copula.
    pub copula_correlation: Vec<Vec<f64>>,
    pub marginal: Marginal,
    pub count: usize,
    pub seed: u64,
    /// Installed capacities in MW, one per farm.
    pub capacities: Vec<f64>,
}

impl GeneratorSpec {
    /// Uniform pairwise correlation, equal capacities summing to `total_mw`.
    pub fn uniform(dim: usize, rho: f64, count: usize, seed: u64, total_mw: f64) -> Self {
        let mut corr = vec![vec![rho; dim]; dim];
        for (k, row) in corr.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        Self {
            dim,
            copula_correlation: corr,
            marginal: Marginal::Beta { alpha: 2.0, beta: 2.0 },
            count,
            seed,
            capacities: vec![total_mw / dim as f64; dim],
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.count < 2 {
            return Err(ScenarioError::TooFewSamples(self.count));
        }
        let d = self.dim;
        if self.copula_correlation.len() != d
            || self.copula_correlation.iter().any(|r| r.len() != d)
        {
            return Err(ScenarioError::BadCorrelation(format!(
                "expected {d}x{d} matrix"
            )));
        }
        for i in 0..d {
            if (self.copula_correlation[i][i] - 1.0).abs() > 1e-12 {
                return Err(ScenarioError::BadCorrelation("diagonal must be 1".into()));
            }
            for j in 0..d {
                let (a, b) = (self.copula_correlation[i][j], self.copula_correlation[j][i]);
                if (a - b).abs() > 1e-12 {
                    return Err(ScenarioError::BadCorrelation("matrix must be symmetric".into()));
                }
            }
        }
        Ok(())
    }
}

/// Draws correlated normals through the Cholesky factor with Box-Muller base
/// draws, pushes them through the standard normal CDF to uniforms and through
/// the inverse marginal to normalized output levels. The forecast is the
/// per-farm sample mean, so deviations average to zero by construction.
pub fn sample_gaussian_copula(spec: &GeneratorSpec) -> Result<UncertaintyDataset, ScenarioError> {
    spec.validate()?;
    let d = spec.dim;
    let flat: Vec<f64> = spec.copula_correlation.iter().flatten().copied().collect();
    let chol = cholesky(&flat, d, 1e-9)
        .ok_or_else(|| ScenarioError::BadCorrelation("matrix is not PSD".into()))?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let std_norm = Normal::new(0.0, 1.0).expect("unit normal");

    let mut levels = vec![vec![0.0; d]; spec.count];
    let mut gauss_buf = Vec::with_capacity(d + 1);
    for row in levels.iter_mut() {
        gauss_buf.clear();
        while gauss_buf.len() < d {
            // Box-Muller on the seeded stream.
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            gauss_buf.push(r * (2.0 * std::f64::consts::PI * u2).cos());
            gauss_buf.push(r * (2.0 * std::f64::consts::PI * u2).sin());
        }
        for k in 0..d {
            let mut z = 0.0;
            for (j, &g) in gauss_buf.iter().take(k + 1).enumerate() {
                z += chol[k * d + j] * g;
            }
            let u = std_norm.cdf(z);
            row[k] = spec.marginal.inverse_cdf(u)?;
        }
    }

    let forecast: Vec<f64> = (0..d)
        .map(|k| levels.iter().map(|r| r[k]).sum::<f64>() / spec.count as f64)
        .collect();
    let deviations: Vec<Vec<f64>> = levels
        .iter()
        .map(|r| r.iter().zip(&forecast).map(|(l, m)| l - m).collect())
        .collect();
    UncertaintyDataset::new(deviations, forecast, spec.capacities.clone())
        .map_err(|e| ScenarioError::BadMarginal(e.to_string()))
}

/// Shuffles rows with the recorded seed and splits them into in-sample and
/// out-of-sample datasets. Forecast and capacities are shared by both parts.
pub fn split_dataset(
    ds: &UncertaintyDataset,
    n_in: usize,
    shuffle_seed: u64,
) -> Result<(UncertaintyDataset, UncertaintyDataset), ScenarioError> {
    let n = ds.sample_count();
    if n_in == 0 || n_in >= n {
        return Err(ScenarioError::BadSplit { n_in, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(shuffle_seed);
    // Fisher-Yates on the index vector.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let pick = |idx: &[usize]| -> UncertaintyDataset {
        UncertaintyDataset::new(
            idx.iter().map(|&i| ds.sample(i).to_vec()).collect(),
            ds.forecast().to_vec(),
            ds.capacities().to_vec(),
        )
        .expect("slices of a valid dataset stay valid")
    };
    Ok((pick(&order[..n_in]), pick(&order[n_in..])))
}
