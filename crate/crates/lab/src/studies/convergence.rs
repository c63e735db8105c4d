use copula_core::empirical::{model_on_grid, sup_deviation};
use copula_core::{stats, Copula, Grid};

use rand::Rng;

use super::{fmt_list, par_map, plain_levels, replicate_seed, Outcome, STREAM_SAMPLE};
use crate::config::StudyConfig;
use crate::error::Result;
use crate::result::{Check, RateFit, Record, StudyResult};

/// Slope tolerance around the `sqrt(n)` rate.
pub const SLOPE_TOLERANCE: f64 = 0.1;

pub fn run_convergence(config: &StudyConfig) -> Result<StudyResult> {
    super::run_study(config)
}

pub(super) fn body(config: &StudyConfig) -> Result<Outcome> {
    let model = config.model.build()?;
    let grid = Grid::uniform(model.dim(), config.grid)?;
    let truth = model_on_grid(&model, &grid);
    let mut records = Vec::with_capacity(config.ladder.len() * config.replicates);
    for (ni, &n) in config.ladder.iter().enumerate() {
        records.extend(par_map(config.replicates, |r| {
            let seed = replicate_seed(config, STREAM_SAMPLE, ni, r);
            let sample = model.sample(n, seed)?;
            Ok(Record::new(
                n,
                r,
                seed,
                sup_deviation(&sample, &truth, &grid)?,
            ))
        })?);
    }
    let levels = plain_levels(config, &records);
    let mut out = Outcome {
        warnings: super::hypothesis_warnings(&model),
        ..Outcome::default()
    };
    match rate_fit(config, &records) {
        Some(fit) => {
            let ok = (fit.slope + 0.5).abs() <= SLOPE_TOLERANCE;
            out.checks.push(Check::new(
                "rate_slope",
                ok,
                format!("slope {:.4} (bootstrap se {:.4}), expected -0.5 +/- {SLOPE_TOLERANCE}", fit.slope, fit.bootstrap_se),
            ));
            out.fit = Some(fit);
        }
        None => out.warnings.push(format!(
            "rate fit refused: needs at least two ladder points and enough replicates (ladder {}, replicates {}); \
             per-n table only",
            config.ladder.len(),
            config.replicates
        )),
    }
    let medians: Vec<f64> = levels.iter().map(|l| l.value.median).collect();
    out.checks.push(Check::new(
        "finite_medians",
        medians.iter().all(|m| m.is_finite()),
        fmt_list(&medians),
    ));
    out.records = records;
    out.levels = levels;
    Ok(out)
}

/// OLS of `log median` on `log n` with a bootstrap standard error.
/// `None` when the slope is not identified: fewer than two sample sizes,
/// or a single replicate at only two sizes (no dispersion at all).
pub(crate) fn rate_fit(config: &StudyConfig, records: &[Record]) -> Option<RateFit> {
    let k = config.ladder.len();
    if k < 2 || (config.replicates < 2 && k < 3) {
        return None;
    }
    let groups: Vec<Vec<f64>> = config
        .ladder
        .iter()
        .map(|&n| {
            records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.value)
                .collect()
        })
        .collect();
    let x: Vec<f64> = config.ladder.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = groups.iter().map(|g| stats::median(g).ln()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let fit = stats::ols(&x, &y);
    // Resample replicates independently within each n and refit.
    let mut rng = copula_core::rng::derived_stream(config.seed(), &[super::STREAM_BOOTSTRAP]);
    let mut buf = Vec::with_capacity(config.replicates);
    let slopes: Vec<f64> = (0..super::BOOTSTRAP_REPS)
        .map(|_| {
            let yb: Vec<f64> = groups
                .iter()
                .map(|g| {
                    buf.clear();
                    buf.extend((0..g.len()).map(|_| g[rng.random_range(0..g.len())]));
                    stats::median(&buf).ln()
                })
                .collect();
            stats::ols(&x, &yb).slope
        })
        .collect();
    let bootstrap_se = stats::variance(&slopes).sqrt();
    Some(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        ols_se: fit.slope_se.is_finite().then_some(fit.slope_se),
        bootstrap_se,
        bootstrap_reps: super::BOOTSTRAP_REPS,
    })
}
