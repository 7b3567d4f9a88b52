//! `nongauss` — command-line front end for the non-Gaussian data generator
//! and its training experiments.
//!
//! Every run is deterministic in `--seed`: repeated identical invocations
//! produce byte-identical output files.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nongauss_core as core;
use nongauss_core::{
    expand_activation, model_mean_cov, preset_config, run_experiment, series_cumulants,
    solve_coefficients, CumulantVector, ExperimentConfig, Fig2Options, Fig2Panel, GenModelParams,
    HermiteSeries, Preset, Scale, TrainConfig,
};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "nongauss",
    version,
    about = "Cumulant-controllable non-Gaussian data model and two-layer network training experiments",
    propagate_version = true
)]
struct Cli {
    /// Base seed for all randomness (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (output directory for `experiment`); stdout if omitted
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,

    /// Suppress progress messages on stderr
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand a named activation in Hermite polynomials (JSON series out)
    Expand(ExpandArgs),
    /// Find series coefficients whose cumulants hit the given targets
    Solve(SolveArgs),
    /// Cumulants of a Hermite series in closed form
    Cumulants(CumulantsArgs),
    /// Draw rows from a model parameter file (CSV out)
    Generate(GenerateArgs),
    /// Exact mean and covariance of the model (JSON out)
    MeanCov(MeanCovArgs),
    /// One online-SGD training run; checkpoint losses as CSV
    Train(TrainArgs),
    /// Multi-seed experiment; writes trace/summary/plot/config bundle
    Experiment(ExperimentArgs),
    /// Inspect named presets and emit template parameter files
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Activation {
    Tanh,
    Relu,
    Sign,
    Sigmoid,
}

impl Activation {
    fn func(self) -> fn(f64) -> f64 {
        match self {
            Activation::Tanh => |u| u.tanh(),
            Activation::Relu => |u| u.max(0.0),
            Activation::Sign => |u| {
                if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            },
            Activation::Sigmoid => |u| 1.0 / (1.0 + (-u).exp()),
        }
    }
}

#[derive(Args)]
struct ExpandArgs {
    /// Activation to expand
    #[arg(long, value_enum)]
    activation: Activation,
    /// Truncation degree ℓ
    #[arg(long)]
    degree: usize,
    /// Quadrature order (default: max(200, degree+1))
    #[arg(long)]
    quad_order: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Target cumulants κ₁,κ₂,…,κ_{ℓ+1} (comma-separated)
    #[arg(long)]
    targets: String,
    /// Series degree ℓ
    #[arg(long)]
    degree: usize,
    /// Certified worst-case cumulant error
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Restart budget for the damped Newton search
    #[arg(long, default_value_t = 20)]
    max_restarts: u32,
}

#[derive(Args)]
struct CumulantsArgs {
    /// Hermite series JSON file
    #[arg(long, conflicts_with = "coeffs")]
    series: Option<PathBuf>,
    /// Inline coefficients c₀,c₁,… (comma-separated)
    #[arg(long)]
    coeffs: Option<String>,
    /// Number of cumulants to report (default: degree + 1)
    #[arg(long)]
    orders: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateKind {
    /// Rows of the non-Gaussian model
    Model,
    /// Rows of the moment-matched Gaussian surrogate
    GaussEquiv,
    /// Raw latent Gaussian draws
    Latent,
    /// Shuffled two-class set: standard normal (−1) vs model (+1)
    Labeled,
}

#[derive(Args)]
struct GenerateArgs {
    /// Model parameter JSON file
    #[arg(long)]
    params: PathBuf,
    /// Number of rows (per class for `labeled`)
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = GenerateKind::Model)]
    kind: GenerateKind,
}

#[derive(Args)]
struct MeanCovArgs {
    /// Model parameter JSON file
    #[arg(long)]
    params: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Model parameter JSON file
    #[arg(long)]
    params: PathBuf,
    /// Training configuration JSON file (flags below override it)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name: fig1a, fig1b, fig1c, fig1d, fig2-template
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Shrink to desk scale (small model, 2·10⁴ steps)
    #[arg(long)]
    desk: bool,
    /// fig2-template panel: zeroed, c5zero, full
    #[arg(long)]
    panel: Option<String>,
    /// Model parameter file (required by fig2-template)
    #[arg(long)]
    params: Option<PathBuf>,
    /// Run a previously emitted config.json verbatim
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PresetArgs {
    #[command(subcommand)]
    cmd: PresetCmd,
}

#[derive(Subcommand)]
enum PresetCmd {
    /// List preset names
    List,
    /// Print the full experiment configuration of a preset
    Show {
        name: String,
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        panel: Option<String>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Emit a parameter file for fig2-template: identity mixing, scaled
    /// random orthogonal features, zero bias, tanh-derived series
    TemplateParams {
        /// Data / latent dimension
        #[arg(long, default_value_t = 32)]
        dim: usize,
    },
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {what} entry {t:?}"))
        })
        .collect()
}

fn read_params(path: &Path) -> Result<GenModelParams> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read parameter file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed parameter file {}", path.display()))
}

fn read_series(path: &Path) -> Result<HermiteSeries> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read series file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed series file {}", path.display()))
}

/// Write to `--out` when given, otherwise to stdout.
fn deliver(out: &Option<PathBuf>, bytes: &[u8], quiet: bool, what: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(path, bytes)?;
            if !quiet {
                eprintln!("wrote {what} to {}", path.display());
            }
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Feature-matrix CSV: header `x0..x{d−1}`, one row per draw, shortest
/// round-trip float formatting.
fn rows_csv(rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64) -> Vec<u8> {
    let mut buf = Vec::new();
    let header: Vec<String> = (0..cols).map(|j| format!("x{j}")).collect();
    let _ = writeln!(buf, "{}", header.join(","));
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| get(i, j).to_string()).collect();
        let _ = writeln!(buf, "{}", line.join(","));
    }
    buf
}

fn cmd_expand(cli: &Cli, a: &ExpandArgs) -> Result<()> {
    let order = a.quad_order.unwrap_or_else(|| 200.max(a.degree + 1));
    let series = expand_activation(a.activation.func(), a.degree, order)?;
    let mut json = serde_json::to_string_pretty(&series)?;
    json.push('\n');
    deliver(&cli.out, json.as_bytes(), cli.quiet, "Hermite series")
}

fn cmd_solve(cli: &Cli, a: &SolveArgs) -> Result<()> {
    let targets = CumulantVector::new(parse_floats(&a.targets, "target")?)?;
    let seed = cli.seed.unwrap_or(0);
    match solve_coefficients(&targets, a.degree, a.tol, a.max_restarts, seed) {
        Ok(report) => {
            if !cli.quiet {
                eprintln!(
                    "converged: residual {:.3e} after {} iterations, {} restarts",
                    report.residual_norm, report.iterations, report.restarts_used
                );
            }
            let mut json = serde_json::to_string_pretty(&report.series)?;
            json.push('\n');
            deliver(&cli.out, json.as_bytes(), cli.quiet, "Hermite series")
        }
        Err(e) => {
            // Non-convergence must surface the best residual and exit nonzero.
            Err(anyhow!(e))
        }
    }
}

fn cmd_cumulants(cli: &Cli, a: &CumulantsArgs) -> Result<()> {
    let series = match (&a.series, &a.coeffs) {
        (Some(path), None) => read_series(path)?,
        (None, Some(text)) => HermiteSeries::new(parse_floats(text, "coefficient")?)?,
        _ => bail!("provide exactly one of --series or --coeffs"),
    };
    let m = a.orders.unwrap_or(series.degree() + 1);
    let kappa = series_cumulants(&series, m)?;
    let mut json = serde_json::to_string_pretty(&kappa)?;
    json.push('\n');
    deliver(&cli.out, json.as_bytes(), cli.quiet, "cumulants")
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let seed = cli.seed.unwrap_or(0);
    let bytes = match a.kind {
        GenerateKind::Model => {
            let m = core::generate(&params, a.n, seed)?;
            rows_csv(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        }
        GenerateKind::GaussEquiv => {
            let m = core::gaussian_equivalent(&params, a.n, seed)?;
            rows_csv(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        }
        GenerateKind::Latent => {
            let m = core::sample_latent(&params, a.n, seed)?;
            rows_csv(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        }
        GenerateKind::Labeled => {
            let ds = core::build_train_dataset(&params, a.n, seed)?;
            let mut buf = Vec::new();
            ds.write_csv(&mut buf)?;
            buf
        }
    };
    deliver(&cli.out, &bytes, cli.quiet, "dataset CSV")
}

fn cmd_mean_cov(cli: &Cli, a: &MeanCovArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let ms = model_mean_cov(&params)?;
    #[derive(serde::Serialize)]
    struct Out {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    }
    let out = Out {
        mean: ms.mean.iter().copied().collect(),
        cov: ms
            .cov
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&out)?;
    json.push('\n');
    deliver(&cli.out, json.as_bytes(), cli.quiet, "moments")
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let seed = cli.seed.unwrap_or(0);
    let mut cfg: TrainConfig = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("malformed config {}", path.display()))?
        }
        None => TrainConfig {
            learning_rate: 0.01,
            steps: 20_000,
            checkpoints: core::log_spaced_checkpoints(20_000, 25),
            n_test: 2000,
            seeds: vec![seed],
            hidden: 128,
            init_scale: 1.0,
        },
    };
    if let Some(v) = a.steps {
        cfg.steps = v;
        cfg.checkpoints = core::log_spaced_checkpoints(v, 25);
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = a.n_test {
        cfg.n_test = v;
    }
    if let Some(v) = a.init_scale {
        cfg.init_scale = v;
    }
    let trace = core::train_online(&params, &cfg, seed)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    deliver(&cli.out, &buf, cli.quiet, "training trace CSV")
}

fn build_preset_config(
    name: &str,
    desk: bool,
    panel: Option<&str>,
    params: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let preset = Preset::from_str(name)?;
    let scale = if desk { Scale::Desk } else { Scale::Paper };
    let fig2 = if preset == Preset::Fig2Template {
        let path = params.ok_or_else(|| {
            anyhow!("fig2-template needs --params FILE (see `preset template-params`)")
        })?;
        let panel = match panel {
            Some(p) => Fig2Panel::from_str(p)?,
            None => Fig2Panel::Full,
        };
        Some(Fig2Options {
            params: read_params(path)?,
            panel,
        })
    } else {
        if panel.is_some() {
            bail!("--panel only applies to fig2-template");
        }
        if params.is_some() {
            bail!("--params only applies to fig2-template");
        }
        None
    };
    let mut cfg = preset_config(preset, scale, fig2)?;
    if let Some(base) = seed {
        let n = cfg.train.seeds.len() as u64;
        cfg.train.seeds = (base..base + n).collect();
    }
    Ok(cfg)
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs) -> Result<()> {
    let cfg = match (&a.preset, &a.config) {
        (Some(name), None) => build_preset_config(
            name,
            a.desk,
            a.panel.as_deref(),
            a.params.as_deref(),
            cli.seed,
        )?,
        (None, Some(path)) => {
            if a.desk || a.panel.is_some() || a.params.is_some() {
                bail!("--config runs the file verbatim; preset flags are not allowed");
            }
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("malformed config {}", path.display()))?
        }
        _ => bail!("provide exactly one of --preset or --config"),
    };
    if !cli.quiet {
        eprintln!(
            "running {}: {} seeds × {} steps (d={}, h={})",
            cfg.label,
            cfg.train.seeds.len(),
            cfg.train.steps,
            cfg.params.d(),
            cfg.train.hidden
        );
    }
    let result = run_experiment(&cfg, cli.out.as_deref())?;
    if cli.out.is_none() {
        // No directory: print the summary table instead.
        let mut buf = Vec::new();
        writeln!(buf, "{}", core::experiment::SUMMARY_CSV_HEADER)?;
        for r in &result.rows {
            writeln!(
                buf,
                "{},{},{},{},{}",
                r.step, r.non_gauss_mean, r.non_gauss_std, r.gauss_eq_mean, r.gauss_eq_std
            )?;
        }
        std::io::stdout().write_all(&buf)?;
    } else if !cli.quiet {
        eprintln!(
            "done in {:.1}s (config hash {})",
            result.wall_time_secs, result.config_hash
        );
    }
    Ok(())
}

fn cmd_preset(cli: &Cli, a: &PresetArgs) -> Result<()> {
    match &a.cmd {
        PresetCmd::List => {
            let mut buf = Vec::new();
            for p in Preset::ALL {
                let _ = writeln!(buf, "{}", p.name());
            }
            deliver(&cli.out, &buf, cli.quiet, "preset list")
        }
        PresetCmd::Show {
            name,
            desk,
            panel,
            params,
        } => {
            let cfg =
                build_preset_config(name, *desk, panel.as_deref(), params.as_deref(), cli.seed)?;
            let mut json = serde_json::to_string_pretty(&cfg)?;
            json.push('\n');
            deliver(&cli.out, json.as_bytes(), cli.quiet, "experiment config")
        }
        PresetCmd::TemplateParams { dim } => {
            let params = core::fig2_template_params(*dim, cli.seed.unwrap_or(0))?;
            let mut json = serde_json::to_string_pretty(&params)?;
            json.push('\n');
            deliver(&cli.out, json.as_bytes(), cli.quiet, "parameter file")
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Expand(a) => cmd_expand(&cli, a),
        Cmd::Solve(a) => cmd_solve(&cli, a),
        Cmd::Cumulants(a) => cmd_cumulants(&cli, a),
        Cmd::Generate(a) => cmd_generate(&cli, a),
        Cmd::MeanCov(a) => cmd_mean_cov(&cli, a),
        Cmd::Train(a) => cmd_train(&cli, a),
        Cmd::Experiment(a) => cmd_experiment(&cli, a),
        Cmd::Preset(a) => cmd_preset(&cli, a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
