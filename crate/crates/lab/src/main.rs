use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use copula_core::empirical::{copula_process, empirical_copula_on_grid, model_on_grid};
use copula_core::fields::{build_factor, kstar_variance_sup, KStarSampler};
use copula_core::kernel::{verify_order, Bandwidth};
use copula_core::rank::{
    delta_method_width, kendall_functional, kendall_functional_empirical, kendall_tau, lil_rho,
    spearman_functional, spearman_functional_empirical, spearman_rho,
};
use copula_core::rng::derive_seed;
use copula_core::smoothing::{decompose_smoothing_error, smoothed_copula_on_grid};
use copula_core::{Copula, CopulaModel, Grid, Sample, SampleKind, TiePolicy};
use copula_lab::config::{
    Functional, ModelSpec, RankStatSpec, ReportFormat, ScoreName, SmoothingSpec, StudyConfig,
};
use copula_lab::error::{ConfigError, LabError, Result};
use copula_lab::{emit_report, io, run_study_with_threads, thread_count};
use serde::Deserialize;
use serde_json::{json, Value};

const STUDY_HELP: &str = "\
Config keys (TOML):
  kind        convergence | distribution_comparison | lil | smoothing | rank_stat_normality
  seed        u64, required
  grid        points per axis including 0 and 1 (>= 2)
  ladder      strictly increasing sample sizes
  replicates  >= 1
  [model]       family, dim, params
  [comparison]  field_draws (default: replicates), meta_replicates (1), ks_bound (0.12)
  [lil]         corridor ([0.5, 2.0], multiples of rho), coverage (0.9)
  [smoothing]   kernel (epanechnikov | quartic | gaussian | polynomial), order (2),
                h (fixed; omit for n^(-d/2s)/ln n), kernel_scale, trim (0.05)
  [rankstat]    score (spearman | kendall | custom); for custom also
                functional (spearman | kendall), terms ([{coef, a, b, c}], J = sum coef u^a v^b z^c),
                z_derivative_bound
  [output]      dir, formats ([\"json\", \"csv\", \"svg\"])

Environment: COPULA_LAB_THREADS caps the number of worker threads.
Exit codes: 0 success, 1 IO error, 2 config error, 3 numerical failure.";

const RANKSTAT_HELP: &str = "\
Custom scores are read from the [rankstat] table of --config, e.g.

  [rankstat]
  score = \"custom\"
  functional = \"spearman\"
  terms = [{ coef = 12.0, a = 1, b = 1 }, { coef = -3.0 }]

A full study config file works too; other keys are ignored.";

#[derive(Parser)]
#[command(
    name = "copula-lab",
    version,
    about = "Empirical copula processes, smoothed copulas and their Gaussian limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an i.i.d. sample from a parametric copula as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical copula C_n on a grid, and A_n when a model is given, as JSON.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[command(flatten)]
        model: OptionalModelArgs,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kernel-smoothed empirical copula on a grid, with the four error terms
    /// when a model is given, as JSON.
    Smooth {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value = "epanechnikov")]
        kernel: String,
        /// Kernel order, read for the polynomial kernel.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Volume bandwidth; defaults to n^(-d/2s)/ln n.
        #[arg(long)]
        h: Option<f64>,
        #[command(flatten)]
        model: OptionalModelArgs,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample Gaussian fields (bridge, Kiefer or K*) on a grid as CSV rows
    /// (replicate, u1..ud, value).
    Field {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Process::Kstar)]
        process: Process,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Time index (Kiefer and K*).
        #[arg(long, default_value_t = 1)]
        time: u64,
        #[arg(long)]
        seed: u64,
        /// Also print sup Var K*(u, 1) and the iterated-logarithm constant on stderr.
        #[arg(long)]
        rho: bool,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman-type, Kendall-type or custom rank statistic of a bivariate sample, as JSON.
    #[command(after_long_help = RANKSTAT_HELP)]
    Rankstat {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = Stat::Spearman)]
        stat: Stat,
        /// File with a [rankstat] table; required for --stat custom.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: OptionalModelArgs,
        /// Seed of the randomized QMC rule for the model value of Kendall-type statistics.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo study from a config file and write its reports.
    #[command(after_long_help = STUDY_HELP)]
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides [output].dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (capped by COPULA_LAB_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Copula family: independence | clayton | gumbel | frank | gaussian | fgm.
    #[arg(long, alias = "model")]
    copula: String,
    /// Family parameter; omit for independence.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

fn model_spec(family: &str, dim: usize, theta: Option<f64>) -> ModelSpec {
    ModelSpec {
        family: family.into(),
        dim,
        params: theta.into_iter().collect(),
    }
}

impl ModelArgs {
    fn build(&self) -> Result<CopulaModel> {
        Ok(model_spec(&self.copula, self.dim, self.theta).build()?)
    }
}

#[derive(Args)]
struct OptionalModelArgs {
    /// Reference copula family for A_n and model values; dimension follows the data.
    #[arg(long, alias = "model")]
    copula: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
}

impl OptionalModelArgs {
    fn build(&self, dim: usize) -> Result<Option<CopulaModel>> {
        match &self.copula {
            None if self.theta.is_some() => {
                Err(ConfigError::Argument("--theta needs --copula".into()).into())
            }
            None => Ok(None),
            Some(f) => Ok(Some(model_spec(f, dim, self.theta).build()?)),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// CSV file, one observation per row, optional header.
    #[arg(long)]
    input: PathBuf,
    /// Treat the data as raw observations instead of pseudo-uniforms.
    #[arg(long)]
    raw: bool,
    /// Break ties with seeded jitter instead of failing.
    #[arg(long)]
    jitter: Option<u64>,
}

impl InputArgs {
    fn load(&self) -> Result<Sample> {
        let kind = if self.raw {
            SampleKind::Raw
        } else {
            SampleKind::PseudoUniform
        };
        let ties = self
            .jitter
            .map_or(TiePolicy::Reject, |seed| TiePolicy::Jitter { seed });
        io::read_sample(&self.input, kind, ties)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Process {
    Bridge,
    Kiefer,
    Kstar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stat {
    Spearman,
    Kendall,
    Custom,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LabError::io(path, e))
}

/// Opens `out`, or stdout when `None`.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json(value: &Value, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    let path = out.unwrap_or(Path::new("<stdout>"));
    writeln!(w)
        .and_then(|()| w.flush())
        .map_err(|e| LabError::io(path, e))
}

fn points(grid: &Grid) -> Vec<Vec<f64>> {
    grid.points().map(<[f64]>::to_vec).collect()
}

fn sup_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn model_json(m: &CopulaModel) -> Value {
    json!({ "family": m.family().name(), "dim": m.dim(), "params": m.params() })
}

fn input_json(sample: &Sample) -> Value {
    match sample.kind() {
        SampleKind::PseudoUniform => {
            json!({ "kind": "pseudo_uniform", "jittered": sample.was_jittered() })
        }
        // Ranks stand in for the unknown margins.
        SampleKind::Raw => json!({
            "kind": "raw",
            "jittered": sample.was_jittered(),
            "approximate": true,
            "note": "margins replaced by ranks; A_n and model comparisons are approximate",
        }),
    }
}

fn simulate(model: &ModelArgs, n: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    if n == 0 {
        return Err(ConfigError::SampleSize(0).into());
    }
    let sample = model.build()?.sample(n, seed)?;
    io::write_sample(sink(out)?, &sample)
}

fn estimate(
    input: &InputArgs,
    grid: usize,
    model: &OptionalModelArgs,
    out: Option<&Path>,
) -> Result<()> {
    let sample = input.load()?;
    let g = Grid::uniform(sample.dim(), grid)?;
    let mut doc = json!({
        "n": sample.n(),
        "dim": sample.dim(),
        "input": input_json(&sample),
        "grid": points(&g),
        "c_n": empirical_copula_on_grid(&sample, &g)?,
    });
    if let Some(m) = model.build(sample.dim())? {
        let an = copula_process(&sample, &m, &g)?.values;
        doc["model"] = model_json(&m);
        doc["c"] = json!(model_on_grid(&m, &g));
        doc["sup_abs_a_n"] = json!(sup_abs(&an));
        doc["a_n"] = json!(an);
    }
    write_json(&doc, out)
}

#[allow(clippy::too_many_arguments)]
fn smooth(
    input: &InputArgs,
    grid: usize,
    kernel: &str,
    order: usize,
    h: Option<f64>,
    model: &OptionalModelArgs,
    out: Option<&Path>,
) -> Result<()> {
    let sample = input.load()?;
    let d = sample.dim();
    let spec = SmoothingSpec {
        kernel: kernel.into(),
        order,
        h,
        kernel_scale: None,
        trim: 0.0,
    };
    let k = spec.kernel(d)?;
    let report = verify_order(&k);
    if !report.passed {
        return Err(LabError::KernelOrder(Box::new(report)));
    }
    let bw = match h {
        Some(h) => Bandwidth::new(h, sample.n(), k.order(), d)?,
        None => Bandwidth::default_for(sample.n(), k.order(), d)?,
    };
    let adm = bw.admissibility();
    if !adm.is_admissible() {
        eprintln!(
            "warning: bandwidth h = {:.4e} is not admissible for n = {} (nh = {:.3}, sqrt(n) h^(s/d) = {:.3})",
            bw.h,
            sample.n(),
            adm.nh,
            adm.bias_scale
        );
    }
    let g = Grid::uniform(d, grid)?;
    let mut doc = json!({
        "n": sample.n(),
        "dim": d,
        "input": input_json(&sample),
        "kernel": { "name": k.profile().name(), "order": k.order() },
        "bandwidth": {
            "h": bw.h,
            "nh": adm.nh,
            "bias_scale": adm.bias_scale,
            "admissible": adm.is_admissible(),
        },
        "grid": points(&g),
        "c_n": empirical_copula_on_grid(&sample, &g)?,
    });
    match model.build(d)? {
        None => doc["c_hat"] = json!(smoothed_copula_on_grid(&sample, &k, &bw, &g)?),
        Some(m) => {
            let dec = decompose_smoothing_error(&sample, &k, &bw, &m, &g)?;
            doc["model"] = model_json(&m);
            doc["c_hat"] = json!(dec.smoothed);
            doc["a_n"] = json!(dec.process);
            doc["difference"] = json!(dec.difference);
            doc["nabla"] = json!(dec.terms);
            doc["sup_difference"] = json!(dec.sup_difference());
            doc["sup_nabla"] = json!(dec.sup_terms());
        }
    }
    write_json(&doc, out)
}

#[allow(clippy::too_many_arguments)]
fn field(
    model: &ModelArgs,
    process: Process,
    grid: usize,
    reps: usize,
    time: u64,
    seed: u64,
    rho: bool,
    out: Option<&Path>,
) -> Result<()> {
    let m = model.build()?;
    let g = Grid::uniform(m.dim(), grid)?;
    if rho {
        let (var, at) = kstar_variance_sup(&m, &g)?;
        eprintln!(
            "sup Var K*(u,1) = {var:.6e} at {at:?}; rho = {:.6}",
            lil_rho(&m, &g)?
        );
    }
    let factor = build_factor(&m, &g)?;
    let kstar = match process {
        Process::Kstar => Some(KStarSampler::new(&m, &g)?),
        _ => None,
    };
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut head = vec!["replicate".to_string()];
    head.extend((1..=g.dim()).map(|j| format!("u{j}")));
    head.push("value".into());
    w.write_record(&head)?;
    for r in 0..reps {
        let s = derive_seed(seed, &[r as u64]);
        let values = match (&kstar, process) {
            (Some(k), _) => k.sample(time, s).values,
            (None, Process::Kiefer) => {
                let mut path = factor.sample_kiefer(time, s);
                path.pop().expect("t_max + 1 entries").values
            }
            (None, _) => factor.sample_bridge(s).values,
        };
        for (u, v) in g.points().zip(&values) {
            let mut row = vec![r.to_string()];
            row.extend(u.iter().map(f64::to_string));
            row.push(v.to_string());
            w.write_record(&row)?;
        }
    }
    let path = out.unwrap_or(Path::new("<stdout>"));
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Any TOML document with a `[rankstat]` table.
#[derive(Deserialize)]
struct ScoreFile {
    rankstat: RankStatSpec,
}

fn score_spec(stat: Stat, config: Option<&Path>) -> Result<RankStatSpec> {
    let mut spec = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| LabError::io(p, e))?;
            toml::from_str::<ScoreFile>(&text)
                .map_err(|e| ConfigError::Parse(e.to_string()))?
                .rankstat
        }
        None => RankStatSpec::default(),
    };
    spec.score = match stat {
        Stat::Spearman => ScoreName::Spearman,
        Stat::Kendall => ScoreName::Kendall,
        Stat::Custom => ScoreName::Custom,
    };
    if spec.score != ScoreName::Custom {
        spec.functional = None;
        spec.terms.clear();
        spec.z_derivative_bound = None;
    } else if config.is_none() {
        return Err(ConfigError::Argument(
            "--stat custom needs --config with a [rankstat] table".into(),
        )
        .into());
    }
    Ok(spec)
}

fn rankstat(
    input: &InputArgs,
    stat: Stat,
    config: Option<&Path>,
    model: &OptionalModelArgs,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let spec = score_spec(stat, config)?;
    let f = spec.score_function()?;
    let functional = spec.functional();
    let sample = input.load()?;
    let mut doc = json!({
        "n": sample.n(),
        "input": input_json(&sample),
        "stat": spec.score.name(),
        "functional": functional,
    });
    doc["statistic"] = json!(match functional {
        Functional::Spearman => spearman_functional_empirical(&sample, &f)?,
        Functional::Kendall => kendall_functional_empirical(&sample, &f)?,
    });
    match spec.score {
        ScoreName::Spearman => doc["classical"] = json!(spearman_rho(&sample)?),
        ScoreName::Kendall => doc["classical"] = json!(kendall_tau(&sample)?),
        ScoreName::Custom => {}
    }
    if let Some(m) = model.build(sample.dim())? {
        doc["model"] = model_json(&m);
        match functional {
            Functional::Spearman => {
                doc["model_value"] = json!(spearman_functional(&m, &f)?);
                doc["delta_width"] = json!(delta_method_width(&f, &m)?);
            }
            Functional::Kendall => {
                let e = kendall_functional(&m, &f, seed)?;
                doc["model_value"] = json!(e.value);
                doc["model_std_error"] = json!(e.std_error);
            }
        }
    }
    write_json(&doc, out)
}

fn study(config: &Path, out: Option<&Path>, threads: Option<usize>) -> Result<()> {
    let cfg = StudyConfig::load(config)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let result = run_study_with_threads(&cfg, thread_count(threads))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for c in &result.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let formats = if cfg.output.formats.is_empty() {
        vec![ReportFormat::Json]
    } else {
        cfg.output.formats.clone()
    };
    for f in formats {
        let p = emit_report(&result, f, &dir)?;
        println!("wrote {}", p.display());
    }
    println!(
        "wall time {:.2} s on {} thread(s)",
        result.run.wall_time_secs, result.run.threads
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            model,
            n,
            seed,
            out,
        } => simulate(&model, n, seed, out.as_deref()),
        Command::Estimate {
            input,
            grid,
            model,
            out,
        } => estimate(&input, grid, &model, out.as_deref()),
        Command::Smooth {
            input,
            grid,
            kernel,
            order,
            h,
            model,
            out,
        } => smooth(&input, grid, &kernel, order, h, &model, out.as_deref()),
        Command::Field {
            model,
            process,
            grid,
            reps,
            time,
            seed,
            rho,
            out,
        } => field(&model, process, grid, reps, time, seed, rho, out.as_deref()),
        Command::Rankstat {
            input,
            stat,
            config,
            model,
            seed,
            out,
        } => rankstat(
            &input,
            stat,
            config.as_deref(),
            &model,
            seed,
            out.as_deref(),
        ),
        Command::Study {
            config,
            out,
            threads,
        } => study(&config, out.as_deref(), threads),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let LabError::KernelOrder(report) = &e {
                for c in report.failures() {
                    eprintln!(
                        "  moment {:?}: value {:.3e}, residual {:.3e}",
                        c.exponents, c.value, c.residual
                    );
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
