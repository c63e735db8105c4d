use copula_core::kernel::{verify_order, Bandwidth};
use copula_core::smoothing::{decompose_with, ModelSmoothing};
use copula_core::{Copula, Grid};

use super::{fmt_list, par_map, replicate_seed, Outcome, STREAM_SAMPLE};
use crate::config::StudyConfig;
use crate::error::{ConfigError, LabError, Result};
use crate::result::{Check, Dispersed, Level, Record, SmoothingLevel, StudyResult};

pub fn run_smoothing(config: &StudyConfig) -> Result<StudyResult> {
    super::run_study(config)
}

/// Strictly decreasing, except that a run of exact zeros counts as settled.
fn vanishing(xs: &[f64]) -> bool {
    xs.windows(2)
        .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

/// Medians of `sup|Â_n - A_n|` and of the four decomposition terms along
/// the ladder. Suprema are taken over the grid trimmed to
/// `[trim, 1 - trim]^d`: on the upper faces the cube-restricted kernel
/// loses mass and `sqrt(n) C (m - 1)` grows with `n` for any bandwidth.
/// The full-grid supremum is recorded alongside for reference.
pub(super) fn body(config: &StudyConfig) -> Result<Outcome> {
    let spec = config
        .smoothing
        .as_ref()
        .ok_or(ConfigError::MissingSmoothing)?;
    let model = config.model.build()?;
    let d = model.dim();
    let kernel = spec.kernel(d)?;
    let report = verify_order(&kernel);
    if !report.passed {
        return Err(LabError::KernelOrder(Box::new(report)));
    }
    let full = Grid::uniform(d, config.grid)?;
    let interior = full
        .trimmed(spec.trim)
        .ok_or(ConfigError::Trim(spec.trim))?;

    let mut out = Outcome {
        warnings: super::hypothesis_warnings(&model),
        ..Outcome::default()
    };
    let mut records = Vec::with_capacity(config.ladder.len() * config.replicates);
    let mut levels = Vec::with_capacity(config.ladder.len());
    for (ni, &n) in config.ladder.iter().enumerate() {
        let bw = match spec.h {
            Some(h) => Bandwidth::new(h, n, kernel.order(), d)?,
            None => Bandwidth::default_for(n, kernel.order(), d)?,
        };
        let adm = bw.admissibility();
        if !adm.is_admissible() {
            out.warnings.push(format!(
                "bandwidth h = {:.4e} at n = {n} is not admissible (nh = {:.3}, sqrt(n) h^(s/d) = {:.3})",
                bw.h, adm.nh, adm.bias_scale
            ));
        }
        let inner_terms = ModelSmoothing::new(&model, &kernel, &bw, &interior)?;
        let full_terms = ModelSmoothing::new(&model, &kernel, &bw, &full)?;
        let cells = par_map(config.replicates, |r| {
            let seed = replicate_seed(config, STREAM_SAMPLE, ni, r);
            let sample = model.sample(n, seed)?;
            let inner = decompose_with(&sample, &kernel, &bw, &inner_terms, &interior)?;
            let whole = decompose_with(&sample, &kernel, &bw, &full_terms, &full)?;
            let t = inner.sup_terms();
            let mut rec = Record::new(n, r, seed, inner.sup_difference());
            (rec.nabla1, rec.nabla2, rec.nabla3, rec.nabla4) =
                (Some(t[0]), Some(t[1]), Some(t[2]), Some(t[3]));
            rec.full_grid = Some(whole.sup_difference());
            Ok(rec)
        })?;
        let column =
            |k: usize| -> Vec<f64> { cells.iter().map(|c| c.nabla().unwrap()[k]).collect() };
        let values: Vec<f64> = cells.iter().map(|c| c.value).collect();
        let full_values: Vec<f64> = cells.iter().map(|c| c.full_grid.unwrap()).collect();
        levels.push(Level {
            n,
            value: Dispersed::of(&values),
            comparison: None,
            smoothing: Some(SmoothingLevel {
                h: bw.h,
                nh: adm.nh,
                bias_scale: adm.bias_scale,
                admissible: adm.is_admissible(),
                terms: [0, 1, 2, 3].map(|k| Dispersed::of(&column(k))),
                full_grid: Dispersed::of(&full_values),
            }),
            rankstat: None,
        });
        records.extend(cells);
    }

    let medians: Vec<f64> = levels.iter().map(|l| l.value.median).collect();
    out.checks.push(Check::new(
        "sup_difference_decreasing",
        config.ladder.len() > 1 && medians.windows(2).all(|w| w[1] < w[0]),
        format!(
            "median sup|Â_n - A_n| along the ladder {}",
            fmt_list(&medians)
        ),
    ));
    for k in 0..4 {
        let m: Vec<f64> = levels
            .iter()
            .map(|l| l.smoothing.as_ref().unwrap().terms[k].median)
            .collect();
        out.checks.push(Check::new(
            &format!("nabla{}_decreasing", k + 1),
            config.ladder.len() > 1 && vanishing(&m),
            format!(
                "median sup|nabla_{}| along the ladder {}",
                k + 1,
                fmt_list(&m)
            ),
        ));
    }
    out.records = records;
    out.levels = levels;
    Ok(out)
}
