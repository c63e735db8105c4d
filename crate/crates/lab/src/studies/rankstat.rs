use copula_core::rank::{
    delta_method_width, kendall_functional, kendall_functional_empirical, spearman_functional,
    spearman_functional_empirical, ScoreFunction,
};
use copula_core::stats;

use super::{par_map, replicate_seed, Outcome, STREAM_REFERENCE, STREAM_SAMPLE};
use crate::config::{Functional, StudyConfig};
use crate::error::Result;
use crate::result::{Check, Dispersed, Level, RankStatLevel, RankStatSummary, Record, StudyResult};

/// Relative tolerance between the replicate sd of `sqrt(n)(S_n - S)` and
/// the delta-method width, checked only with at least
/// [`WIDTH_MIN_REPLICATES`] replicates.
pub const WIDTH_TOLERANCE: f64 = 0.25;
pub const WIDTH_MIN_REPLICATES: usize = 50;

pub fn run_rankstat(config: &StudyConfig) -> Result<StudyResult> {
    super::run_study(config)
}

pub(super) fn body(config: &StudyConfig) -> Result<Outcome> {
    let model = config.model.build()?;
    let functional = config.rankstat.functional();
    let score: ScoreFunction = config.rankstat.score_function()?;
    let (reference, reference_se, delta_width) = match functional {
        Functional::Spearman => (
            spearman_functional(&model, &score)?,
            0.0,
            Some(delta_method_width(&score, &model)?),
        ),
        Functional::Kendall => {
            let e = kendall_functional(
                &model,
                &score,
                replicate_seed(config, STREAM_REFERENCE, 0, 0),
            )?;
            (e.value, e.std_error, None)
        }
    };

    let mut records = Vec::with_capacity(config.ladder.len() * config.replicates);
    let mut levels = Vec::with_capacity(config.ladder.len());
    for (ni, &n) in config.ladder.iter().enumerate() {
        let cells = par_map(config.replicates, |r| {
            let seed = replicate_seed(config, STREAM_SAMPLE, ni, r);
            let sample = model.sample(n, seed)?;
            let v = match functional {
                Functional::Spearman => spearman_functional_empirical(&sample, &score)?,
                Functional::Kendall => kendall_functional_empirical(&sample, &score)?,
            };
            Ok(Record::new(n, r, seed, v))
        })?;
        let vals: Vec<f64> = cells.iter().map(|c| c.value).collect();
        let rt = (n as f64).sqrt();
        let scaled: Vec<f64> = vals.iter().map(|v| rt * (v - reference)).collect();
        let sd = stats::variance(&vals).sqrt();
        let ad = (vals.len() >= 8).then(|| stats::anderson_darling_normal(&vals));
        levels.push(Level {
            n,
            value: Dispersed::of(&vals),
            comparison: None,
            smoothing: None,
            rankstat: Some(RankStatLevel {
                mean: stats::mean(&vals),
                std_error: sd / (vals.len() as f64).sqrt(),
                scaled_sd: stats::variance(&scaled).sqrt(),
                anderson_darling: ad.map_or(0.0, |a| a.statistic),
                critical: ad.map_or(0.0, |a| a.critical),
                normality_rejected: ad.is_some_and(|a| a.rejects()),
            }),
        });
        records.extend(cells);
    }

    let mut out = Outcome::default();
    let last = levels.last().unwrap();
    let lr = last.rankstat.as_ref().unwrap();
    let n_last = last.n as f64;
    let allowance = 4.0 * lr.std_error + 3.0 * reference_se + 6.0 / n_last;
    out.checks.push(Check::new(
        "consistency",
        (lr.mean - reference).abs() <= allowance,
        format!(
            "mean {:.5} vs model value {:.5} at n = {}, allowance {allowance:.5}",
            lr.mean, reference, last.n
        ),
    ));
    if config.replicates >= 8 {
        out.checks.push(Check::new(
            "normality",
            !lr.normality_rejected,
            format!(
                "Anderson-Darling {:.4} vs 5% critical value {:.3} at n = {}",
                lr.anderson_darling, lr.critical, last.n
            ),
        ));
    }
    if let (Some(w), true) = (delta_width, config.replicates >= WIDTH_MIN_REPLICATES) {
        out.checks.push(Check::new(
            "delta_width",
            (lr.scaled_sd / w - 1.0).abs() <= WIDTH_TOLERANCE,
            format!(
                "replicate sd of sqrt(n)(S_n - S) {:.4} vs delta-method width {w:.4}",
                lr.scaled_sd
            ),
        ));
    }
    out.records = records;
    out.levels = levels;
    out.rankstat = Some(RankStatSummary {
        score: config.rankstat.score.name().into(),
        functional,
        reference,
        reference_se,
        delta_width,
    });
    Ok(out)
}
