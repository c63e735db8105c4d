//! Monte Carlo studies.
//!
//! Every replicate draws from its own stream seeded by
//! `derive_seed(seed, [stream, n_index, replicate])`, and results are
//! collected in index order, so the payload does not depend on how rayon
//! schedules the work or on the number of threads.

use std::time::Instant;

use copula_core::rng::{derive_seed, derived_stream};
use copula_core::{stats, CopulaModel};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{StudyConfig, StudyKind};
use crate::error::Result;
use crate::result::{
    Check, Level, LilSummary, RankStatSummary, RateFit, Record, RunInfo, StudyResult,
};

mod comparison;
mod convergence;
mod lil;
mod rankstat;
mod smoothing;

pub use comparison::run_distribution_comparison;
pub use convergence::run_convergence;
pub use lil::run_lil;
pub use rankstat::run_rankstat;
pub use smoothing::run_smoothing;

/// Stream tags for [`derive_seed`].
pub(crate) const STREAM_SAMPLE: u64 = 0;
pub(crate) const STREAM_FIELD: u64 = 1;
pub(crate) const STREAM_BOOTSTRAP: u64 = 2;
pub(crate) const STREAM_REFERENCE: u64 = 3;

pub(crate) const BOOTSTRAP_REPS: usize = 200;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "COPULA_LAB_THREADS";

/// Worker count: `requested` (or the machine's parallelism) capped by
/// `COPULA_LAB_THREADS` when that is set to a positive integer.
pub fn thread_count(requested: Option<usize>) -> usize {
    let base = requested.filter(|&t| t > 0).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    match std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => base.min(cap),
        _ => base,
    }
}

/// What a study body produces; [`run_study_with_threads`] adds metadata.
#[derive(Default)]
pub(crate) struct Outcome {
    pub records: Vec<Record>,
    pub levels: Vec<Level>,
    pub fit: Option<RateFit>,
    pub lil: Option<LilSummary>,
    pub rankstat: Option<RankStatSummary>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    run_study_with_threads(config, thread_count(None))
}

pub fn run_study_with_threads(config: &StudyConfig, threads: usize) -> Result<StudyResult> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| copula_core::Error::Numerical(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| match config.kind {
        StudyKind::Convergence => convergence::body(config),
        StudyKind::DistributionComparison => comparison::body(config),
        StudyKind::Lil => lil::body(config),
        StudyKind::Smoothing => smoothing::body(config),
        StudyKind::RankStatNormality => rankstat::body(config),
    })?;
    Ok(StudyResult {
        kind: config.kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        records: outcome.records,
        levels: outcome.levels,
        fit: outcome.fit,
        lil: outcome.lil,
        rankstat: outcome.rankstat,
        checks: outcome.checks,
        warnings: outcome.warnings,
        run: RunInfo {
            wall_time_secs: start.elapsed().as_secs_f64(),
            threads: threads.max(1),
        },
    })
}

/// `f(0..count)` in parallel, results in index order.
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

pub(crate) fn replicate_seed(
    config: &StudyConfig,
    stream: u64,
    n_index: usize,
    replicate: usize,
) -> u64 {
    derive_seed(config.seed(), &[stream, n_index as u64, replicate as u64])
}

/// Standard error of `stat` under resampling `xs` with replacement.
pub(crate) fn bootstrap_se(xs: &[f64], stat: impl Fn(&[f64]) -> f64, seed: u64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mut rng = derived_stream(seed, &[STREAM_BOOTSTRAP]);
    let mut buf = vec![0.0; xs.len()];
    let reps: Vec<f64> = (0..BOOTSTRAP_REPS)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    stats::variance(&reps).sqrt()
}

/// Notes models outside the smoothness hypotheses of the limit theory.
pub(crate) fn hypothesis_warnings(model: &CopulaModel) -> Vec<String> {
    if model.family().smooth_on_closed_cube() {
        Vec::new()
    } else {
        vec![format!(
            "{} copula has unbounded second partial derivatives at the corners of the cube; \
             the smoothness hypotheses of the approximation theory do not hold, results are indicative only",
            model.family().name()
        )]
    }
}

pub(crate) fn plain_levels(config: &StudyConfig, records: &[Record]) -> Vec<Level> {
    config
        .ladder
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.value)
                .collect();
            Level {
                n,
                value: crate::result::Dispersed::of(&vals),
                comparison: None,
                smoothing: None,
                rankstat: None,
            }
        })
        .collect()
}

/// True when every element is `<=` (or `<` when `strict`) its predecessor.
pub(crate) fn decreasing(xs: &[f64], strict: bool) -> bool {
    xs.windows(2)
        .all(|w| if strict { w[1] < w[0] } else { w[1] <= w[0] })
}

pub(crate) fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}
