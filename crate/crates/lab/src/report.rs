//! CSV, JSON and SVG output for [`StudyResult`].

use std::fs;
use std::path::{Path, PathBuf};

use copula_core::special::norm_quantile;
use copula_core::stats;

use crate::config::{ReportFormat, StudyKind};
use crate::error::{LabError, Result};
use crate::result::StudyResult;
use crate::svg::{Plot, Series, Style};

fn extension(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
        ReportFormat::Svg => "svg",
    }
}

/// Writes `<dir>/<kind>.<ext>` and returns the path.
pub fn emit_report(result: &StudyResult, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let path = dir.join(format!("{}.{}", result.kind.name(), extension(format)));
    let bytes = match format {
        ReportFormat::Csv => to_csv(result)?,
        ReportFormat::Json => to_json(result)?.into_bytes(),
        ReportFormat::Svg => to_svg(result).into_bytes(),
    };
    fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

/// One header row, then one row per record.
pub fn to_csv(result: &StudyResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &result.records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| LabError::Io {
        path: PathBuf::from("<csv buffer>"),
        source: e.into_error(),
    })
}

pub fn to_json(result: &StudyResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn read_json(path: &Path) -> Result<StudyResult> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Log-log rate plot for ladder studies, Q-Q plots for the distributional ones.
pub fn to_svg(result: &StudyResult) -> String {
    match result.kind {
        StudyKind::DistributionComparison => comparison_qq(result),
        StudyKind::RankStatNormality => normal_qq(result),
        _ => rate_plot(result),
    }
    .render()
}

fn rate_plot(result: &StudyResult) -> Plot {
    let pts: Vec<(f64, f64)> = result
        .levels
        .iter()
        .map(|l| (l.n as f64, l.value.median))
        .collect();
    let errors: Vec<f64> = result.levels.iter().map(|l| l.value.mad).collect();
    let y_label = match result.kind {
        StudyKind::Convergence => "median sup|C_n - C|",
        StudyKind::Lil => "median running ratio L(n)",
        StudyKind::Smoothing => "median sup|Â_n - A_n| (interior)",
        _ => "median statistic",
    };
    let mut series = vec![Series {
        label: y_label.into(),
        points: pts.clone(),
        errors: Some(errors),
        style: Style::Line,
    }];
    if let Some(fit) = &result.fit {
        let line = pts
            .iter()
            .map(|&(n, _)| (n, (fit.intercept + fit.slope * n.ln()).exp()))
            .collect();
        series.push(Series {
            label: format!("fit: slope {:.3} ± {:.3}", fit.slope, fit.bootstrap_se),
            points: line,
            errors: None,
            style: Style::Dashed,
        });
    }
    if let Some(first) = pts
        .first()
        .filter(|_| result.kind == StudyKind::Convergence)
    {
        let reference = pts
            .iter()
            .map(|&(n, _)| (n, first.1 * (n / first.0).powf(-0.5)))
            .collect();
        series.push(Series {
            label: "n^(-1/2) reference".into(),
            points: reference,
            errors: None,
            style: Style::Dashed,
        });
    }
    if let Some(lil) = &result.lil {
        let flat = pts.iter().map(|&(n, _)| (n, lil.rho)).collect();
        series.push(Series {
            label: format!("rho = {:.4}", lil.rho),
            points: flat,
            errors: None,
            style: Style::Dashed,
        });
    }
    if result.kind == StudyKind::Smoothing {
        for k in 0..4 {
            let p = result
                .levels
                .iter()
                .filter_map(|l| {
                    l.smoothing
                        .as_ref()
                        .map(|s| (l.n as f64, s.terms[k].median))
                })
                .collect();
            series.push(Series {
                label: format!("nabla_{}", k + 1),
                points: p,
                errors: None,
                style: Style::Line,
            });
        }
    }
    Plot {
        title: format!("{} study", result.kind.name()),
        x_label: "n".into(),
        y_label: y_label.into(),
        log_x: true,
        log_y: result.kind != StudyKind::Lil,
        series,
    }
}

fn comparison_qq(result: &StudyResult) -> Plot {
    let n = result.levels.last().map_or(0, |l| l.n);
    let mut a: Vec<f64> = result
        .records
        .iter()
        .filter(|r| r.n == n)
        .map(|r| r.value)
        .collect();
    let mut b: Vec<f64> = result
        .records
        .iter()
        .filter(|r| r.n == n)
        .filter_map(|r| r.field_sup)
        .collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let m = a.len().min(b.len());
    let probs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let pts: Vec<(f64, f64)> = probs
        .iter()
        .map(|&p| (stats::quantile(&b, p), stats::quantile(&a, p)))
        .collect();
    let lo = pts
        .iter()
        .map(|p| p.0.min(p.1))
        .fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.0.max(p.1))
        .fold(f64::NEG_INFINITY, f64::max);
    Plot {
        title: format!("Q-Q: sup|A_n| (n = {n}) against sup|K*(., 1)|"),
        x_label: "sup|K*| quantile".into(),
        y_label: "sup|A_n| quantile".into(),
        log_x: false,
        log_y: false,
        series: vec![
            Series {
                label: "quantiles".into(),
                points: pts,
                errors: None,
                style: Style::Points,
            },
            Series {
                label: "y = x".into(),
                points: vec![(lo, lo), (hi, hi)],
                errors: None,
                style: Style::Dashed,
            },
        ],
    }
}

fn normal_qq(result: &StudyResult) -> Plot {
    let n = result.levels.last().map_or(0, |l| l.n);
    let mut v: Vec<f64> = result
        .records
        .iter()
        .filter(|r| r.n == n)
        .map(|r| r.value)
        .collect();
    v.sort_by(f64::total_cmp);
    let (m, sd) = (
        stats::mean(&v),
        stats::variance(&v).sqrt().max(f64::MIN_POSITIVE),
    );
    let k = v.len();
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .map(|(i, x)| (norm_quantile((i as f64 + 0.5) / k as f64), (x - m) / sd))
        .collect();
    let lim = pts
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(0.0, f64::max);
    Plot {
        title: format!("normal Q-Q of the standardized statistic (n = {n})"),
        x_label: "normal quantile".into(),
        y_label: "standardized statistic".into(),
        log_x: false,
        log_y: false,
        series: vec![
            Series {
                label: "replicates".into(),
                points: pts,
                errors: None,
                style: Style::Points,
            },
            Series {
                label: "y = x".into(),
                points: vec![(-lim, -lim), (lim, lim)],
                errors: None,
                style: Style::Dashed,
            },
        ],
    }
}
