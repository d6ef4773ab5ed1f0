//! Worker pool and order-preserving parallel Monte Carlo.

use anyhow::{ensure, Context, Result};
use degen_icp_core::degeneracy::PlaneFeature;
use degen_icp_core::geometry::{Mat6, Vec6};
use degen_icp_core::simulation::{trial_hessian, MatrixMean, NoiseSpec, RunningStats};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "DEGEN_ICP_THREADS";

/// Trials evaluated per parallel batch before folding in trial order.
const BATCH: u64 = 8192;

pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
        ensure!(n > 0, "{THREADS_ENV} must be a positive integer");
        builder = builder.num_threads(n);
    }
    builder.build().context("building worker pool")
}

fn batches(trials: u64) -> impl Iterator<Item = std::ops::Range<u64>> {
    (0..trials.div_ceil(BATCH)).map(move |b| b * BATCH..((b + 1) * BATCH).min(trials))
}

/// Same result as the sequential `mc_quadratic_stats`: trials run in
/// parallel but are folded in trial order.
pub fn quadratic_stats(
    pool: &rayon::ThreadPool,
    features: &[PlaneFeature],
    noise: &NoiseSpec,
    directions: &[Vec6],
    trials: u64,
) -> Vec<RunningStats> {
    let mut stats = vec![RunningStats::default(); directions.len()];
    for range in batches(trials) {
        let values: Vec<Vec<f64>> = pool.install(|| {
            range
                .into_par_iter()
                .map(|t| {
                    let h = trial_hessian(features, noise, t);
                    directions.iter().map(|u| u.dot(&(h * u))).collect()
                })
                .collect()
        });
        for row in values {
            for (s, v) in stats.iter_mut().zip(row) {
                s.push(v);
            }
        }
    }
    stats
}

/// Parallel counterpart of `mc_mean_hessian`.
pub fn mean_hessian(
    pool: &rayon::ThreadPool,
    features: &[PlaneFeature],
    noise: &NoiseSpec,
    trials: u64,
) -> Mat6 {
    let mut mean = MatrixMean::default();
    for range in batches(trials) {
        let hs: Vec<Mat6> = pool.install(|| {
            range
                .into_par_iter()
                .map(|t| trial_hessian(features, noise, t))
                .collect()
        });
        hs.iter().for_each(|h| mean.push(h));
    }
    mean.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use degen_icp_core::simulation::{
        mc_mean_hessian, mc_quadratic_stats, random_feature_set, random_unit_directions,
    };

    #[test]
    fn parallel_matches_sequential() {
        let f = random_feature_set(1, 30, 2.0);
        let noise = NoiseSpec::new(0.01, 0.02, 5);
        let dirs = random_unit_directions(2, 3);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let trials = BATCH + 17;
        assert_eq!(
            quadratic_stats(&pool, &f, &noise, &dirs, trials),
            mc_quadratic_stats(&f, &noise, &dirs, trials).unwrap()
        );
        assert_eq!(mean_hessian(&pool, &f, &noise, 100), mc_mean_hessian(&f, &noise, 100).unwrap());
    }

    #[test]
    fn batches_cover_range() {
        let all: Vec<u64> = batches(2 * BATCH + 3).flatten().collect();
        assert_eq!(all, (0..2 * BATCH + 3).collect::<Vec<_>>());
        assert_eq!(batches(0).count(), 0);
    }
}
