//! Experiment runner for the `caloric` crate: configuration parsing, the
//! experiment registry, refinement studies, sweeps and report files.

pub mod config;
pub mod convergence;
pub mod error;
pub mod registry;
pub mod report;

pub use config::{normalize, parse_config, serialize, Experiment, ExperimentConfig};
pub use convergence::convergence_study;
pub use error::{LabError, Result};
pub use registry::run_experiment;
pub use report::{emit_report, Format, MetricValue, ReportRecord, RunOutcome, Violation};

use rayon::prelude::*;

/// Cartesian product of `(key, values)` overrides applied to `base`, in
/// row-major order (the last key varies fastest).
pub fn sweep_configs(base: &ExperimentConfig, vary: &[(String, Vec<String>)]) -> Result<Vec<ExperimentConfig>> {
    let mut configs = vec![base.clone()];
    for (key, values) in vary {
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for c in &configs {
            for v in values {
                let mut c = c.clone();
                c.set(key, v)?;
                next.push(c);
            }
        }
        configs = next;
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

/// Runs every config on a pool of `jobs` workers; records keep the order of
/// `configs`.
pub fn run_sweep(configs: &[ExperimentConfig], jobs: usize) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| LabError::Pool(e.to_string()))?;
    let results: Vec<Result<RunOutcome>> = pool.install(|| configs.par_iter().map(run_experiment).collect());
    let mut out = RunOutcome::default();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
