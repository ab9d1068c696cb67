//! Empirical marginal CDFs and copula pseudo-observations.
//!
//! The step CDF `F_k(eta) = (1/N) * #{i : eta >= sample_i}` uses the closed
//! indicator, so tied samples collapse to the highest shared rank. The same
//! quantity is also expressible as a small LP; that route exists purely as a
//! test oracle for the reformulation machinery.

use thiserror::Error;

use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, SolveOptions, SolveStatus, SolverBackend,
};
use crate::model::UncertaintyDataset;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample vector")]
    EmptySamples,
    #[error("lp backend failed: {0}")]
    Backend(#[from] crate::lp::BackendError),
    #[error("lp solve ended with status {0:?}")]
    SolveStatus(SolveStatus),
}

/// Step CDF value `(1/N) * #{i : eta >= samples[i]}`.
pub fn empirical_cdf_value(samples: &[f64], eta: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    let hits = samples.iter().filter(|&&s| eta >= s).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// LP certificate for one CDF evaluation: the optimal `z` of
/// `max (1/N) sum z_i  s.t.  z_i (eta - sample_i) >= 0, 0 <= z_i <= 1`.
#[derive(Debug, Clone)]
pub struct CdfCertificate {
    pub value: f64,
    pub z: Vec<f64>,
}

impl CdfCertificate {
    /// Residual checks for the certificate invariants; all should be tiny.
    pub fn max_violation(&self, samples: &[f64], eta: f64) -> f64 {
        let n = samples.len() as f64;
        let mean_gap = (self.value - self.z.iter().sum::<f64>() / n).abs();
        let feas = self
            .z
            .iter()
            .zip(samples)
            .map(|(&z, &s)| (-(z * (eta - s))).max(0.0).max(-z).max(z - 1.0))
            .fold(0.0, f64::max);
        mean_gap.max(feas)
    }
}

/// Evaluates the CDF through its LP characterization.
pub fn cdf_lp_certificate(
    samples: &[f64],
    eta: f64,
    backend: &dyn SolverBackend,
) -> Result<CdfCertificate, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    let n = samples.len();
    let mut m = ModelBuilder::new();
    let z: Vec<_> = (0..n).map(|_| m.add_var(0.0, 1.0)).collect();
    for (i, &s) in samples.iter().enumerate() {
        // z_i * (eta - s) >= 0 is linear in z_i for a fixed evaluation point.
        m.ge(LinExpr::term(z[i], eta - s), 0.0);
    }
    let mut obj = LinExpr::new();
    for &zi in &z {
        obj.push(zi, 1.0 / n as f64);
    }
    m.set_objective(ObjSense::Maximize, obj);
    let res = backend.solve(&m, &SolveOptions::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(StatsError::SolveStatus(res.status));
    }
    Ok(CdfCertificate {
        value: res.objective_value.expect("optimal solve carries an objective"),
        z: z.iter().map(|&v| res.value(v)).collect(),
    })
}

/// Maps every sample through the empirical marginal CDF of its own column:
/// entry `(i, k)` is `F_k(sample_ik)`. Ranks are computed by sorting; ties
/// share the highest rank, matching the closed indicator.
pub fn copula_pseudo_observations(ds: &UncertaintyDataset) -> Vec<Vec<f64>> {
    let n = ds.sample_count();
    let dim = ds.dim();
    let mut result = vec![vec![0.0; dim]; n];
    for k in 0..dim {
        let col = ds.column(k);
        let mut sorted = col.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        for (i, &v) in col.iter().enumerate() {
            // Highest index with sorted[j] <= v, converted to a count.
            let count = sorted.partition_point(|&s| s <= v);
            result[i][k] = count as f64 / n as f64;
        }
    }
    result
}
