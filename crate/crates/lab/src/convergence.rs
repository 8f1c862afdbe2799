//! Refinement studies: a residual per level and its fitted order.

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::registry::{base_record, ctx, laplacian_residual, pipeline_config, profile_energy_pair, soliton_drift, GAUGE_SUITE};
use crate::report::{Bound, ReportRecord, RunOutcome, Threshold};
use caloric::wave_dynamics::run_coupled_pipeline;

/// Level `l` of the study: `n 2^l`, `dt / 2^l` and, for the gauge pipeline,
/// `rho^{1/2^l}`.
pub fn refine(cfg: &ExperimentConfig, level: usize) -> ExperimentConfig {
    let f = (1usize << level) as f64;
    ExperimentConfig { n: cfg.n << level, dt: cfg.dt / f, rho: cfg.rho.powf(1.0 / f), ..cfg.clone() }
}

fn residual(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.experiment {
        Experiment::LaplacianConsistency => laplacian_residual(cfg),
        Experiment::SolitonStability => soliton_drift(cfg).map(|(drift, _)| drift),
        Experiment::SolitonEnergy => profile_energy_pair(cfg).map(|(e, exact, _)| (e - exact).abs()),
        Experiment::CaloricGaugeResiduals => {
            let out = run_coupled_pipeline(&pipeline_config(cfg)).map_err(ctx(cfg.experiment))?;
            Ok(GAUGE_SUITE.iter().filter_map(|n| out.residuals.get(n)).map(|e| e.relative()).fold(0.0, f64::max))
        }
        other => Err(LabError::NotRefinable { experiment: other.name().into() }),
    }
}

/// Least-squares order of `residual ~ C h^p` over the levels with a
/// nonzero residual. `None` means every residual vanished.
pub fn fitted_order(levels: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = levels.iter().filter(|(_, e)| *e > 0.0).map(|(h, e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Minimum accepted order per experiment.
fn order_bound(e: Experiment) -> Bound {
    match e {
        Experiment::LaplacianConsistency => Bound::Within(1.9, 2.1),
        Experiment::SolitonStability => Bound::AtLeast(1.9),
        Experiment::SolitonEnergy => Bound::AtLeast(1.5),
        _ => Bound::AtLeast(1.0),
    }
}

/// Runs `levels >= 3` refinements of a refinable experiment. Each level
/// yields a `residual` record; a final record holds `order`, written as
/// the text `exact` when every residual is zero.
pub fn convergence_study(cfg: &ExperimentConfig, levels: usize) -> Result<RunOutcome> {
    cfg.validate()?;
    if !cfg.experiment.refinable() {
        return Err(LabError::NotRefinable { experiment: cfg.experiment.name().into() });
    }
    if levels < 3 {
        return Err(LabError::TooFewLevels(levels));
    }
    let mut out = RunOutcome::default();
    let mut pts = Vec::with_capacity(levels);
    for level in 0..levels {
        let c = refine(cfg, level);
        c.validate()?;
        let res = residual(&c)?;
        let h = c.r_max / c.n as f64;
        let mut r = base_record(&c, "refinement study");
        r.param("level", level);
        r.metric("residual", res)?;
        out.push(r, &[]);
        pts.push((h, res));
    }
    let mut summary = ReportRecord::new(cfg.experiment.name());
    for (k, v) in cfg.params() {
        summary.param(k, v);
    }
    summary.param("levels", levels).provenance("anchor", "refinement study");
    let thresholds = match fitted_order(&pts) {
        None if pts.iter().all(|p| p.1 == 0.0) => {
            summary.text_metric("order", "exact");
            Vec::new()
        }
        None => {
            summary.text_metric("order", "undetermined");
            Vec::new()
        }
        Some(p) => {
            summary.metric("order", p)?;
            vec![Threshold::new("order", order_bound(cfg.experiment))]
        }
    };
    out.push(summary, &thresholds);
    Ok(out)
}
