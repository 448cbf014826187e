//! Seeded Monte Carlo experiments and their CSV output.
//!
//! Every experiment draws trial `t` of grid point `p` from its own stream
//! [`trial_stream`](crate::rng::trial_stream)`(seed, p, t)`, so results do not
//! depend on the worker count or scheduling order.

mod config;
mod experiments;
mod output;

pub use config::{ExperimentConfig, ExperimentKind, PriorSpec};
pub use experiments::{
    log_tail_slope, run_amp_experiment, run_coupling_tails, run_gaussian_location, run_indirect_coding, run_rd_curves,
    run_sparse_threshold, run_wasserstein_bound, CURVE_ORDER_SLACK, EXPLICIT_CODEBOOK_MAX_BITS,
};
pub use output::{
    summary_path, ExperimentOutput, Point, SummaryRow, TrialResult, Verdict, SUMMARY_HEADER, TRIAL_HEADER,
};

use crate::{Error, Result};

/// Worker count from `SPHERCOMP_THREADS`, or `None` for machine parallelism.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("SPHERCOMP_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config(format!(
                "SPHERCOMP_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs the configured experiment on the current thread pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::GaussianLocation => run_gaussian_location(config),
        ExperimentKind::SparseThreshold => run_sparse_threshold(config),
        ExperimentKind::Amp => run_amp_experiment(config),
        ExperimentKind::IndirectCoding => run_indirect_coding(config),
        ExperimentKind::CouplingTails => run_coupling_tails(config),
        ExperimentKind::WassersteinBound => run_wasserstein_bound(config),
        ExperimentKind::RdCurves => run_rd_curves(config),
    }
}

/// Runs on a dedicated pool of `threads` workers (machine parallelism if `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

/// Runs with the pool size taken from `SPHERCOMP_THREADS`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_with_threads(config, threads_from_env()?)
}
