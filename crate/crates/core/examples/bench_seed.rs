// scratch: in-sample vs full-sample rank correlation across seeds
use cdro_core::scenario::{sample_gaussian_copula, split_dataset, GeneratorSpec};
use cdro_core::stats::copula_pseudo_observations;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

fn rank_corr(ds: &cdro_core::model::UncertaintyDataset) -> f64 {
    let u = copula_pseudo_observations(ds);
    let u1: Vec<f64> = u.iter().map(|r| r[0]).collect();
    let u2: Vec<f64> = u.iter().map(|r| r[1]).collect();
    pearson(&u1, &u2)
}

fn main() {
    for seed in [20240u64, 1, 7, 11, 23, 42, 77, 99, 123, 2025, 31337, 555] {
        let full = sample_gaussian_copula(&GeneratorSpec::uniform(2, 0.5, 1000, seed, 1000.0)).unwrap();
        let (ins, oos) = split_dataset(&full, 30, seed.wrapping_add(1000)).unwrap();
        // worst oos total deficit (sum of deviations)
        let worst: f64 = oos.deviations().iter().map(|r| r[0] + r[1]).fold(f64::INFINITY, f64::min);
        let ins_worst: f64 = ins.deviations().iter().map(|r| r[0] + r[1]).fold(f64::INFINITY, f64::min);
        println!("seed {seed}: full_rank={:.3} in_rank={:.3} | worst oos sum dev {:.3}, worst ins {:.3}",
            rank_corr(&full), rank_corr(&ins), worst, ins_worst);
    }
}
