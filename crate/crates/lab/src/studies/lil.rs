use copula_core::empirical::{model_on_grid, sup_deviation};
use copula_core::rank::lil_rho;
use copula_core::rng::stream;
use copula_core::{Copula, Grid, Sample, SampleKind, TiePolicy};
use sha2::{Digest, Sha256};

use super::{par_map, replicate_seed, Outcome, STREAM_SAMPLE};
use crate::config::StudyConfig;
use crate::error::Result;
use crate::result::{Check, Dispersed, LilSummary, Record, StudyResult};

pub fn run_lil(config: &StudyConfig) -> Result<StudyResult> {
    super::run_study(config)
}

/// Hex SHA-256 of the little-endian bytes of `data`.
pub fn hash_prefix(data: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in data {
        h.update(x.to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

/// `(n / (2 log log n))^{1/2}`.
pub fn lil_scale(n: usize) -> f64 {
    let nf = n as f64;
    (nf / (2.0 * nf.ln().ln())).sqrt()
}

struct Path {
    records: Vec<Record>,
    prefixes_ok: bool,
}

/// One growing sample per replicate: the rows at ladder step `k` are the
/// rows of step `k - 1` followed by fresh draws from the same stream.
pub(super) fn body(config: &StudyConfig) -> Result<Outcome> {
    let model = config.model.build()?;
    let grid = Grid::uniform(model.dim(), config.grid)?;
    let truth = model_on_grid(&model, &grid);
    let rho = lil_rho(&model, &grid)?;
    let d = model.dim();

    let paths = par_map(config.replicates, |r| {
        let seed = replicate_seed(config, STREAM_SAMPLE, 0, r);
        let mut rng = stream(seed);
        let mut data = Vec::with_capacity(config.ladder.last().unwrap() * d);
        let mut records = Vec::with_capacity(config.ladder.len());
        let mut prefixes_ok = true;
        let mut prev: Option<(usize, String)> = None;
        for &n in &config.ladder {
            model.sample_rows(&mut rng, n - data.len() / d, &mut data);
            if let Some((m, h)) = &prev {
                prefixes_ok &= hash_prefix(&data[..m * d]) == *h;
            }
            let sample = Sample::new(
                data.clone(),
                d,
                SampleKind::PseudoUniform,
                TiePolicy::Reject,
            )?;
            let sup = sup_deviation(&sample, &truth, &grid)?;
            let hash = hash_prefix(&data);
            let mut rec = Record::new(n, r, seed, lil_scale(n) * sup);
            rec.sup_deviation = Some(sup);
            rec.prefix_hash = Some(hash.clone());
            records.push(rec);
            prev = Some((n, hash));
        }
        Ok(Path {
            records,
            prefixes_ok,
        })
    })?;

    let max_ratio: Vec<f64> = paths
        .iter()
        .map(|p| p.records.iter().fold(0.0f64, |m, r| m.max(r.value)))
        .collect();
    let [lo, hi] = config.lil.corridor;
    let inside = max_ratio
        .iter()
        .filter(|&&m| m >= lo * rho && m <= hi * rho)
        .count();
    let fraction = inside as f64 / max_ratio.len() as f64;

    let mut out = Outcome {
        warnings: super::hypothesis_warnings(&model),
        ..Outcome::default()
    };
    let records: Vec<Record> = paths
        .iter()
        .flat_map(|p| p.records.iter().cloned())
        .collect();
    out.checks.push(Check::new(
        "ratio_finite_positive",
        records.iter().all(|r| r.value.is_finite() && r.value > 0.0),
        "running ratio at every ladder point".into(),
    ));
    out.checks.push(Check::new(
        "prefix_extension",
        paths.iter().all(|p| p.prefixes_ok),
        "each ladder step extends the previous sample (SHA-256 of prefixes)".into(),
    ));
    out.checks.push(Check::new(
        "corridor",
        fraction >= config.lil.coverage,
        format!(
            "{inside}/{} replicates with max ratio in [{lo}, {hi}] x rho = [{:.4}, {:.4}]; required fraction {}",
            max_ratio.len(),
            lo * rho,
            hi * rho,
            config.lil.coverage
        ),
    ));
    // Records are grouped by replicate above; store them ordered by (n, replicate).
    let mut sorted = records;
    sorted.sort_by_key(|r| (r.n, r.replicate));
    out.levels = super::plain_levels(config, &sorted);
    out.records = sorted;
    out.lil = Some(LilSummary {
        rho,
        max_ratio_summary: Dispersed::of(&max_ratio),
        max_ratio,
        corridor: [lo, hi],
        fraction_in_corridor: fraction,
    });
    Ok(out)
}
