use copula_core::empirical::{copula_process_with_truth, model_on_grid};
use copula_core::fields::KStarSampler;
use copula_core::rng::{derive_seed, stream};
use copula_core::{stats, Copula, Grid};

use super::{bootstrap_se, decreasing, fmt_list, par_map, Outcome, STREAM_FIELD, STREAM_SAMPLE};
use crate::config::StudyConfig;
use crate::error::Result;
use crate::result::{Check, ComparisonLevel, Dispersed, Level, QuantileTable, Record, StudyResult};

pub const QUANTILE_PROBS: [f64; 4] = [0.5, 0.9, 0.95, 0.99];

pub fn run_distribution_comparison(config: &StudyConfig) -> Result<StudyResult> {
    super::run_study(config)
}

fn quantile_table(xs: &[f64], seed: u64) -> QuantileTable {
    QuantileTable {
        probs: QUANTILE_PROBS.to_vec(),
        values: QUANTILE_PROBS
            .iter()
            .map(|&p| stats::quantile(xs, p))
            .collect(),
        std_errors: QUANTILE_PROBS
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                bootstrap_se(
                    xs,
                    |b| stats::quantile(b, p),
                    derive_seed(seed, &[k as u64]),
                )
            })
            .collect(),
    }
}

/// `sup|A_n|` over replicates against `sup|K*(., 1)|` over field draws.
///
/// Within a meta-replicate all ladder points share the same field draws,
/// so changes in the KS distance along the ladder come from the process
/// side only.
pub(super) fn body(config: &StudyConfig) -> Result<Outcome> {
    let model = config.model.build()?;
    let grid = Grid::uniform(model.dim(), config.grid)?;
    let truth = model_on_grid(&model, &grid);
    let sampler = KStarSampler::new(&model, &grid)?;
    let reps = config.replicates;
    let draws = config.field_draws();
    let metas = config.comparison.meta_replicates;
    let master = config.seed();

    let field_sups = par_map(metas * draws, |k| {
        let (m, i) = (k / draws, k % draws);
        let mut rng = stream(derive_seed(master, &[STREAM_FIELD, m as u64, i as u64]));
        Ok(sampler
            .draw(&mut rng, 1)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs())))
    })?;

    let mut records = Vec::with_capacity(config.ladder.len() * reps);
    let mut levels = Vec::with_capacity(config.ladder.len());
    for (ni, &n) in config.ladder.iter().enumerate() {
        let process_sups = par_map(metas * reps, |k| {
            let (m, r) = (k / reps, k % reps);
            let seed = derive_seed(master, &[STREAM_SAMPLE, m as u64, ni as u64, r as u64]);
            let sample = model.sample(n, seed)?;
            Ok((
                seed,
                copula_process_with_truth(&sample, &truth, &grid)?.sup_abs(),
            ))
        })?;
        let ks: Vec<f64> = (0..metas)
            .map(|m| {
                let a: Vec<f64> = process_sups[m * reps..(m + 1) * reps]
                    .iter()
                    .map(|p| p.1)
                    .collect();
                stats::two_sample_ks(&a, &field_sups[m * draws..(m + 1) * draws])
            })
            .collect();
        let first: Vec<f64> = process_sups[..reps].iter().map(|p| p.1).collect();
        let fields = &field_sups[..draws];
        for (r, &(seed, v)) in process_sups[..reps].iter().enumerate() {
            let mut rec = Record::new(n, r, seed, v);
            rec.field_sup = fields.get(r).copied();
            records.push(rec);
        }
        let qseed = derive_seed(master, &[super::STREAM_BOOTSTRAP, ni as u64]);
        levels.push(Level {
            n,
            value: Dispersed::of(&first),
            comparison: Some(ComparisonLevel {
                ks_summary: Dispersed::of(&ks),
                ks_pvalue: stats::two_sample_ks_pvalue(ks[0], reps, draws),
                ks,
                process_quantiles: quantile_table(&first, qseed),
                field_quantiles: quantile_table(fields, derive_seed(qseed, &[1])),
            }),
            smoothing: None,
            rankstat: None,
        });
    }

    let ks_medians: Vec<f64> = levels
        .iter()
        .map(|l| l.comparison.as_ref().unwrap().ks_summary.median)
        .collect();
    let last = *ks_medians.last().unwrap();
    let bound = config.comparison.ks_bound;
    let mut out = Outcome {
        warnings: super::hypothesis_warnings(&model),
        ..Outcome::default()
    };
    out.checks.push(Check::new(
        "ks_bound",
        last < bound,
        format!(
            "median KS distance {last:.4} at n = {} against calibration bound {bound}",
            config.ladder.last().unwrap()
        ),
    ));
    if ks_medians.len() > 1 {
        out.checks.push(Check::new(
            "ks_non_increasing",
            decreasing(&ks_medians, false),
            format!(
                "median KS distance along the ladder {}",
                fmt_list(&ks_medians)
            ),
        ));
    }
    out.records = records;
    out.levels = levels;
    Ok(out)
}
