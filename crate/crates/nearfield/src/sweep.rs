//! Trial-parallel sweep driver.
//!
//! Every `(point, trial)` pair is an independent work item. Outcomes are
//! collected in work-item order and reduced exactly as the sequential
//! driver does, so results do not depend on the thread count.

use anyhow::{Context, Result};
use nearfield_core::experiment::{
    aggregate, bandwidth_points, run_trial, snr_points, ExperimentConfig, SweepPoint, SweepTable,
    TrialOutcome,
};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Snr,
    Bandwidth,
}

impl SweepKind {
    pub fn label(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Bandwidth => "bandwidth",
        }
    }
}

pub fn points(cfg: &ExperimentConfig, kind: SweepKind) -> Vec<SweepPoint> {
    match kind {
        SweepKind::Snr => snr_points(cfg),
        SweepKind::Bandwidth => bandwidth_points(cfg),
    }
}

/// Runs `points` on a pool of `threads` workers (rayon's default when
/// `None`).
pub fn run_parallel(
    cfg: &ExperimentConfig,
    points: &[SweepPoint],
    threads: Option<usize>,
) -> Result<SweepTable> {
    cfg.validate().context("experiment configuration")?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().context("cannot start worker pool")?;

    let work: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.n_trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<TrialOutcome>> = pool.install(|| {
        work.par_iter()
            .map(|&(p, t)| run_trial(cfg, &points[p], t))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut rows = Vec::with_capacity(points.len() * cfg.estimators.len());
    for (p, point) in points.iter().enumerate() {
        let trials = &outcomes[p * cfg.n_trials..(p + 1) * cfg.n_trials];
        for (e, &kind) in cfg.estimators.iter().enumerate() {
            let per_est: Vec<TrialOutcome> = trials.iter().map(|o| o[e]).collect();
            rows.push(aggregate(point, kind, cfg.n_targets, &per_est));
        }
    }
    Ok(SweepTable { rows })
}

pub fn run(cfg: &ExperimentConfig, kind: SweepKind, threads: Option<usize>) -> Result<SweepTable> {
    if kind == SweepKind::Bandwidth && cfg.bandwidth_list_hz.is_empty() {
        anyhow::bail!("bandwidth sweep needs a non-empty experiment.bandwidth_hz");
    }
    run_parallel(cfg, &points(cfg, kind), threads)
}
