//! Thread pool setup and the parallel bootstrap driver.

use loam_core::bootstrap::{resample_difference, summarize};
use loam_core::{BootstrapConfig, ComparisonResult, PairedStudy};
use rayon::prelude::*;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "LOAM_THREADS";

/// Worker count from `LOAM_THREADS`, or `None` for one per core.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// A pool with `threads` workers, or one per core.
pub fn pool(threads: Option<usize>) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool")
}

/// Bootstrap comparison with resamples spread over the current rayon pool.
///
/// Each resample draws from its own stream and results are reduced in index
/// order, so the output matches [`loam_core::bootstrap_compare`] bit for bit.
pub fn bootstrap_compare(
    study: &PairedStudy,
    config: &BootstrapConfig,
) -> loam_core::Result<ComparisonResult> {
    config.validate()?;
    let draws = (0..config.n_resamples as u64)
        .into_par_iter()
        .map(|r| resample_difference(study, config, r))
        .collect::<loam_core::Result<Vec<_>>>()?;
    summarize(study, config, &draws)
}
