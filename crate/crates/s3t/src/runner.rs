//! Parallel Monte Carlo on a bounded rayon pool. Trials are indexed and
//! collected in index order, so results do not depend on `jobs`.

use rayon::prelude::*;
use s3t_core::montecarlo::{
    comparison_rows, retention_setup, ComparisonRow, RetentionRow, RetentionTally, Simulator, TrialConfig,
    TrialResult,
};
use s3t_core::Result;

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
}

/// `jobs = 0` lets rayon pick the worker count.
pub fn estimate_deletion_rate(config: &TrialConfig, jobs: usize) -> Result<TrialResult> {
    let sim = Simulator::new(config.clone())?;
    let counts = pool(jobs).install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| sim.run_trial(i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(TrialResult::from_counts(counts))
}

pub fn retention_curve(config: &TrialConfig, ks: &[usize], rs: &[u64], jobs: usize) -> Result<Vec<RetentionRow>> {
    let (single, rs) = retention_setup(config, ks, rs)?;
    let sim = Simulator::new(single.clone())?;
    let traces = pool(jobs).install(|| {
        (0..single.trials)
            .into_par_iter()
            .map(|i| sim.retention_trial(i, &rs))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut tally = RetentionTally::new(ks, &rs);
    for t in &traces {
        tally.record(t);
    }
    tally.finish(&single)
}

pub fn compare(configs: &[TrialConfig], jobs: usize) -> Result<Vec<ComparisonRow>> {
    let results = configs
        .iter()
        .map(|c| Ok((c.clone(), estimate_deletion_rate(c, jobs)?)))
        .collect::<Result<Vec<_>>>()?;
    comparison_rows(results)
}
