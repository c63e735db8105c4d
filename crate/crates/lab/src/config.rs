//! Study configuration files.
//!
//! A config is a small TOML document. Top-level keys describe the run,
//! tables describe the model and the per-study extras:
//!
//! ```toml
//! kind = "convergence"        # convergence | distribution_comparison | lil | smoothing | rank_stat_normality
//! seed = 20240611             # required, there is no clock-based default
//! grid = 21                   # points per axis, 0 and 1 included
//! ladder = [100, 400, 1600, 6400]
//! replicates = 200
//!
//! [model]
//! family = "independence"     # independence | clayton | gumbel | frank | gaussian | fgm
//! dim = 2
//! params = []
//!
//! [comparison]                # distribution_comparison only
//! field_draws = 500           # defaults to `replicates`
//! meta_replicates = 1
//! ks_bound = 0.12
//!
//! [lil]
//! corridor = [0.5, 2.0]       # multiples of rho
//!
//! [smoothing]                 # required for kind = "smoothing"
//! kernel = "epanechnikov"     # epanechnikov | quartic | gaussian | polynomial
//! order = 2                   # only read for "polynomial"
//! h = 0.5                     # fixed bandwidth; omit for n^(-d/2s)/ln n
//! trim = 0.05                 # interior margin of the evaluation grid
//!
//! [rankstat]
//! score = "spearman"          # spearman | kendall | custom
//! functional = "spearman"     # custom only: S(C) = int J du dv, or "kendall" for T(C) = int J dC
//! terms = [{ coef = 12.0, c = 1 }, { coef = -3.0 }]   # custom only: J = sum coef u^a v^b z^c
//!
//! [output]
//! dir = "out"
//! formats = ["json", "csv", "svg"]
//! ```

use std::path::{Path, PathBuf};

use copula_core::kernel::{Kernel, Profile};
use copula_core::rank::{ScoreFunction, ScoreTerm};
use copula_core::{CopulaModel, Family};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    DistributionComparison,
    Lil,
    Smoothing,
    RankStatNormality,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Convergence => "convergence",
            StudyKind::DistributionComparison => "distribution_comparison",
            StudyKind::Lil => "lil",
            StudyKind::Smoothing => "smoothing",
            StudyKind::RankStatNormality => "rank_stat_normality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl ModelSpec {
    pub fn independence(dim: usize) -> Self {
        Self {
            family: "independence".into(),
            dim,
            params: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<CopulaModel, ConfigError> {
        let family = Family::parse(&self.family)
            .ok_or_else(|| ConfigError::UnknownFamily(self.family.clone()))?;
        CopulaModel::new(family, self.dim, &self.params)
            .map_err(|e| ConfigError::InvalidModel(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSpec {
    pub field_draws: Option<usize>,
    #[serde(default = "one")]
    pub meta_replicates: usize,
    #[serde(default = "default_ks_bound")]
    pub ks_bound: f64,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        Self {
            field_draws: None,
            meta_replicates: 1,
            ks_bound: default_ks_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilSpec {
    #[serde(default = "default_corridor")]
    pub corridor: [f64; 2],
    #[serde(default = "default_coverage")]
    pub coverage: f64,
}

impl Default for LilSpec {
    fn default() -> Self {
        Self {
            corridor: default_corridor(),
            coverage: default_coverage(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSpec {
    pub kernel: String,
    #[serde(default = "two")]
    pub order: usize,
    /// Fixed volume bandwidth; `None` uses the default rule at every `n`.
    pub h: Option<f64>,
    /// Multiplies the kernel, for mis-normalized negative controls.
    pub kernel_scale: Option<f64>,
    #[serde(default = "default_trim")]
    pub trim: f64,
}

impl SmoothingSpec {
    pub fn kernel(&self, dim: usize) -> Result<Kernel, ConfigError> {
        let profile = Profile::parse(&self.kernel, self.order)
            .ok_or_else(|| ConfigError::UnknownKernel(self.kernel.clone()))?;
        let k = Kernel::new(profile, dim).map_err(|e| ConfigError::InvalidKernel(e.to_string()))?;
        Ok(match self.kernel_scale {
            Some(s) => k.scaled(s),
            None => k,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreName {
    Spearman,
    Kendall,
    Custom,
}

impl ScoreName {
    pub fn name(self) -> &'static str {
        match self {
            ScoreName::Spearman => "spearman",
            ScoreName::Kendall => "kendall",
            ScoreName::Custom => "custom",
        }
    }
}

/// Which integral a score enters: `S(C) = int J(u, v, C) du dv` or
/// `T(C) = int J(u, v, C) dC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Spearman,
    Kendall,
}

/// `coef * u^a * v^b * z^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    #[serde(default)]
    pub a: u32,
    #[serde(default)]
    pub b: u32,
    #[serde(default)]
    pub c: u32,
}

/// Highest exponent accepted in a custom score term.
pub const MAX_SCORE_EXPONENT: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankStatSpec {
    pub score: ScoreName,
    /// Custom scores only; defaults to the Spearman-type integral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    /// Custom scores only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSpec>,
    /// Custom scores only; overrides the numerical `sup |dJ/dz|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_derivative_bound: Option<f64>,
}

impl RankStatSpec {
    pub fn functional(&self) -> Functional {
        match self.score {
            ScoreName::Spearman => Functional::Spearman,
            ScoreName::Kendall => Functional::Kendall,
            ScoreName::Custom => self.functional.unwrap_or(Functional::Spearman),
        }
    }

    pub fn score_function(&self) -> Result<ScoreFunction, ConfigError> {
        let custom_only = self.functional.is_some()
            || !self.terms.is_empty()
            || self.z_derivative_bound.is_some();
        match self.score {
            ScoreName::Spearman | ScoreName::Kendall if custom_only => Err(ConfigError::Score(format!(
                "functional, terms and z_derivative_bound only apply to score = \"custom\", not {:?}",
                self.score.name()
            ))),
            ScoreName::Spearman => Ok(ScoreFunction::spearman()),
            ScoreName::Kendall => Ok(ScoreFunction::kendall()),
            ScoreName::Custom => {
                if self.terms.is_empty() {
                    return Err(ConfigError::Score("custom score needs at least one term".into()));
                }
                if let Some(t) = self.terms.iter().find(|t| t.a.max(t.b).max(t.c) > MAX_SCORE_EXPONENT) {
                    return Err(ConfigError::Score(format!(
                        "exponents above {MAX_SCORE_EXPONENT} are not supported: {t:?}"
                    )));
                }
                let terms = self.terms.iter().map(|t| ScoreTerm::new(t.coef, t.a, t.b, t.c)).collect();
                let f = ScoreFunction::polynomial(terms).map_err(|e| ConfigError::Score(e.to_string()))?;
                match self.z_derivative_bound {
                    Some(b) if !(b.is_finite() && b >= 0.0) => {
                        Err(ConfigError::Score(format!("z_derivative_bound must be finite and >= 0, got {b}")))
                    }
                    Some(b) => Ok(f.with_z_derivative_bound(b)),
                    None => Ok(f),
                }
            }
        }
    }
}

impl Default for RankStatSpec {
    fn default() -> Self {
        Self {
            score: ScoreName::Spearman,
            functional: None,
            terms: Vec::new(),
            z_derivative_bound: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            formats: all_formats(),
        }
    }
}

/// A validated study description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub seed: Option<u64>,
    pub grid: usize,
    pub ladder: Vec<usize>,
    pub replicates: usize,
    pub model: ModelSpec,
    #[serde(default)]
    pub comparison: ComparisonSpec,
    #[serde(default)]
    pub lil: LilSpec,
    pub smoothing: Option<SmoothingSpec>,
    #[serde(default)]
    pub rankstat: RankStatSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn default_ks_bound() -> f64 {
    0.12
}
fn default_corridor() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_coverage() -> f64 {
    0.9
}
fn default_trim() -> f64 {
    0.05
}
fn all_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg]
}

impl StudyConfig {
    /// A config with default extras; callers fill in the rest.
    pub fn new(
        kind: StudyKind,
        model: ModelSpec,
        grid: usize,
        ladder: Vec<usize>,
        replicates: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind,
            seed: Some(seed),
            grid,
            ladder,
            replicates,
            model,
            comparison: ComparisonSpec::default(),
            lil: LilSpec::default(),
            smoothing: None,
            rankstat: RankStatSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: StudyConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, crate::error::LabError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| crate::error::LabError::io(path, e))?;
        Ok(Self::from_toml(&text)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn field_draws(&self) -> usize {
        self.comparison.field_draws.unwrap_or(self.replicates)
    }

    /// Checks every invariant; the first violation is returned.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seed.is_none() {
            return Err(ConfigError::MissingSeed);
        }
        if self.ladder.is_empty() {
            return Err(ConfigError::EmptyLadder);
        }
        if let Some(&n) = self.ladder.iter().find(|&&n| n == 0) {
            return Err(ConfigError::SampleSize(n));
        }
        if let Some(k) = self.ladder.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ConfigError::LadderNotIncreasing {
                index: k + 1,
                prev: self.ladder[k],
                next: self.ladder[k + 1],
            });
        }
        if self.replicates == 0 {
            return Err(ConfigError::ZeroReplicates);
        }
        if self.grid < 2 {
            return Err(ConfigError::GridTooCoarse(self.grid));
        }
        self.model.build()?;
        match self.kind {
            StudyKind::DistributionComparison => {
                if self.field_draws() == 0 {
                    return Err(ConfigError::ZeroFieldDraws);
                }
                if self.comparison.meta_replicates == 0 {
                    return Err(ConfigError::ZeroMetaReplicates);
                }
            }
            StudyKind::Lil => {
                if let Some(&n) = self.ladder.iter().find(|&&n| n < 3) {
                    return Err(ConfigError::LilSampleSize(n));
                }
                let [lo, hi] = self.lil.corridor;
                if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                    return Err(ConfigError::Corridor(lo, hi));
                }
            }
            StudyKind::Smoothing => {
                let spec = self
                    .smoothing
                    .as_ref()
                    .ok_or(ConfigError::MissingSmoothing)?;
                spec.kernel(self.model.dim)?;
                if let Some(h) = spec.h {
                    if !(h.is_finite() && h > 0.0) {
                        return Err(ConfigError::Bandwidth(h));
                    }
                }
                if !(0.0..0.5).contains(&spec.trim) {
                    return Err(ConfigError::Trim(spec.trim));
                }
                if self.ladder[0] < 2 {
                    return Err(ConfigError::SampleSize(self.ladder[0]));
                }
            }
            StudyKind::RankStatNormality => {
                if self.model.dim != 2 {
                    return Err(ConfigError::InvalidModel(
                        "rank statistics need a bivariate model".into(),
                    ));
                }
                if self.ladder[0] < 2 {
                    return Err(ConfigError::SampleSize(self.ladder[0]));
                }
                self.rankstat.score_function()?;
            }
            StudyKind::Convergence => {}
        }
        Ok(())
    }
}
