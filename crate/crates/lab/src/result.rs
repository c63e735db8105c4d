//! Study output records.

use serde::{Deserialize, Serialize};

use crate::config::{Functional, StudyConfig, StudyKind};

/// Median with its median absolute deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersed {
    pub median: f64,
    pub mad: f64,
}

impl Dispersed {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            median: copula_core::stats::median(xs),
            mad: copula_core::stats::mad(xs),
        }
    }
}

/// One `(n, replicate)` cell. Fields not produced by a study stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    /// The study's primary statistic: `sup|C_n - C|`, `sup|A_n|`, the LIL
    /// ratio, `sup|Â_n - A_n|` or the rank statistic.
    pub value: f64,
    pub field_sup: Option<f64>,
    pub sup_deviation: Option<f64>,
    pub nabla1: Option<f64>,
    pub nabla2: Option<f64>,
    pub nabla3: Option<f64>,
    pub nabla4: Option<f64>,
    pub full_grid: Option<f64>,
    pub prefix_hash: Option<String>,
}

impl Record {
    pub fn new(n: usize, replicate: usize, seed: u64, value: f64) -> Self {
        Self {
            n,
            replicate,
            seed,
            value,
            field_sup: None,
            sup_deviation: None,
            nabla1: None,
            nabla2: None,
            nabla3: None,
            nabla4: None,
            full_grid: None,
            prefix_hash: None,
        }
    }

    pub fn nabla(&self) -> Option<[f64; 4]> {
        Some([self.nabla1?, self.nabla2?, self.nabla3?, self.nabla4?])
    }
}

/// Empirical quantiles with bootstrap standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub probs: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonLevel {
    /// KS distance per meta-replicate.
    pub ks: Vec<f64>,
    pub ks_summary: Dispersed,
    /// Asymptotic p-value of the first meta-replicate's distance.
    pub ks_pvalue: f64,
    pub process_quantiles: QuantileTable,
    pub field_quantiles: QuantileTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingLevel {
    pub h: f64,
    pub nh: f64,
    pub bias_scale: f64,
    pub admissible: bool,
    pub terms: [Dispersed; 4],
    pub full_grid: Dispersed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankStatLevel {
    pub mean: f64,
    pub std_error: f64,
    /// Sample sd of `sqrt(n)(S_n - S)`.
    pub scaled_sd: f64,
    pub anderson_darling: f64,
    pub critical: f64,
    pub normality_rejected: bool,
}

/// Per-`n` summary of the replicate records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    pub value: Dispersed,
    pub comparison: Option<ComparisonLevel>,
    pub smoothing: Option<SmoothingLevel>,
    pub rankstat: Option<RankStatLevel>,
}

/// `log median = intercept + slope log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual-based standard error; absent with only two ladder points.
    pub ols_se: Option<f64>,
    /// Standard error from resampling replicates within each `n`.
    pub bootstrap_se: f64,
    pub bootstrap_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilSummary {
    pub rho: f64,
    /// Max over the ladder of the running ratio, per replicate.
    pub max_ratio: Vec<f64>,
    pub max_ratio_summary: Dispersed,
    pub corridor: [f64; 2],
    pub fraction_in_corridor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankStatSummary {
    pub score: String,
    pub functional: Functional,
    /// Model value of the functional.
    pub reference: f64,
    pub reference_se: f64,
    /// Asymptotic sd of `sqrt(n)(S_n - S)` where available.
    pub delta_width: Option<f64>,
}

/// A named pass/fail outcome. Bounds are calibration constants of this
/// harness, not values implied by the asymptotic theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Run metadata that is allowed to differ between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub wall_time_secs: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub version: String,
    pub config: StudyConfig,
    pub records: Vec<Record>,
    pub levels: Vec<Level>,
    pub fit: Option<RateFit>,
    pub lil: Option<LilSummary>,
    pub rankstat: Option<RankStatSummary>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub run: RunInfo,
}

impl StudyResult {
    /// JSON of everything except [`RunInfo`]; identical for identical
    /// config and seed.
    pub fn payload(&self) -> String {
        let mut v = serde_json::to_value(self).expect("result serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("run");
        }
        serde_json::to_string(&v).expect("value serializes")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn medians(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value.median).collect()
    }
}
