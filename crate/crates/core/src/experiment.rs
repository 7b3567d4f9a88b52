//! Multi-seed experiment runner: trains the network once per seed (in
//! parallel), aggregates the checkpoint losses across seeds, and writes a
//! reproducible bundle of artifacts (`trace.csv`, `summary.csv`,
//! `config.json`, `run_meta.json`, `plot.svg`) to an output directory.
//!
//! Named presets pin the configurations used by the shipped figures. Every
//! byte of `trace.csv` and `summary.csv` is a pure function of the
//! configuration; wall-clock time lives only in `run_meta.json`.

use crate::error::{Error, Result};
use crate::hermite::{expand_activation, HermiteSeries};
use crate::model::{random_orthogonal, GenModelParams, MatrixSpec};
use crate::par;
use crate::rng::{substream, Role};
use crate::train::{log_spaced_checkpoints, train_online, TrainConfig, TrainTrace};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// Complete, self-contained description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Human-readable experiment label (appears in `run_meta.json`).
    pub label: String,
    /// Generative-model parameters shared by all seeds.
    pub params: GenModelParams,
    /// Training hyperparameters, including the list of run seeds.
    pub train: TrainConfig,
}

/// Aggregated losses at one checkpoint: mean and population standard
/// deviation across seeds, for both evaluation sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub step: u64,
    pub non_gauss_mean: f64,
    pub non_gauss_std: f64,
    pub gauss_eq_mean: f64,
    pub gauss_eq_std: f64,
}

/// Everything produced by one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<TrainTrace>,
    /// FNV-1a hash of the canonical JSON form of the configuration.
    pub config_hash: String,
    pub wall_time_secs: f64,
}

pub const TRACE_CSV: &str = "trace.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CONFIG_JSON: &str = "config.json";
pub const RUN_META_JSON: &str = "run_meta.json";
pub const PLOT_SVG: &str = "plot.svg";
pub const ERROR_MANIFEST_JSON: &str = "error_manifest.json";

pub const SUMMARY_CSV_HEADER: &str = "step,nonGauss_mean,nonGauss_std,gaussEq_mean,gaussEq_std";

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of the canonical JSON encoding of a configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(format!("{:016x}", fnv1a(&bytes)))
}

/// Pointwise mean and population standard deviation across traces. All
/// traces must share one checkpoint grid.
pub fn aggregate(traces: &[TrainTrace]) -> Result<Vec<SummaryRow>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParameter("no traces to aggregate".into()))?;
    let grid: Vec<u64> = first.points.iter().map(|p| p.step).collect();
    for t in traces {
        let g: Vec<u64> = t.points.iter().map(|p| p.step).collect();
        if g != grid {
            return Err(Error::InvalidParameter(format!(
                "trace for seed {} has a different checkpoint grid",
                t.seed
            )));
        }
    }
    let n = traces.len() as f64;
    let mean_std = |values: Vec<f64>| -> (f64, f64) {
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    Ok((0..grid.len())
        .map(|i| {
            let (ng_mean, ng_std) =
                mean_std(traces.iter().map(|t| t.points[i].loss_non_gaussian).collect());
            let (ge_mean, ge_std) =
                mean_std(traces.iter().map(|t| t.points[i].loss_gauss_equiv).collect());
            SummaryRow {
                step: grid[i],
                non_gauss_mean: ng_mean,
                non_gauss_std: ng_std,
                gauss_eq_mean: ge_mean,
                gauss_eq_std: ge_std,
            }
        })
        .collect())
}

fn write_trace_csv(path: &Path, traces: &[TrainTrace]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", TrainTrace::CSV_HEADER)?;
    for t in traces {
        t.write_csv_rows(&mut buf)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{SUMMARY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            buf,
            "{},{},{},{},{}",
            r.step, r.non_gauss_mean, r.non_gauss_std, r.gauss_eq_mean, r.gauss_eq_std
        )?;
    }
    fs::write(path, buf)?;
    Ok(())
}

#[derive(Serialize)]
struct RunMeta<'a> {
    label: &'a str,
    config_hash: &'a str,
    wall_time_secs: f64,
    learning_rate: f64,
    steps: u64,
    hidden: usize,
    init_scale: f64,
    n_test: usize,
    seeds: &'a [u64],
}

#[derive(Serialize)]
struct ErrorManifest {
    completed_seeds: Vec<u64>,
    failed: Vec<FailedSeed>,
}

#[derive(Serialize)]
struct FailedSeed {
    seed: u64,
    error: String,
}

/// Train once per seed (in parallel), aggregate, and — when `out_dir` is
/// given — write the artifact bundle. If any seed fails, the traces that did
/// complete are still written alongside an error manifest, and the first
/// failure is returned.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    cfg.train.validate()?;
    let hash = config_hash(cfg)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_JSON), serde_json::to_string_pretty(cfg)?)?;
    }
    let start = Instant::now();
    let seeds = cfg.train.seeds.clone();
    let outcomes: Vec<(u64, Result<TrainTrace>)> = par::map_indexed(seeds.len(), |i| {
        (seeds[i], train_online(&cfg.params, &cfg.train, seeds[i]))
    });
    let wall = start.elapsed().as_secs_f64();

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(FailedSeed {
                seed,
                error: e.to_string(),
            }),
        }
    }
    if !failures.is_empty() {
        let failed_seed = failures[0].seed;
        let message = failures[0].error.clone();
        if let Some(dir) = out_dir {
            write_trace_csv(&dir.join(TRACE_CSV), &traces)?;
            let manifest = ErrorManifest {
                completed_seeds: traces.iter().map(|t| t.seed).collect(),
                failed: failures,
            };
            fs::write(
                dir.join(ERROR_MANIFEST_JSON),
                serde_json::to_string_pretty(&manifest)?,
            )?;
        }
        return Err(Error::InvalidParameter(format!(
            "seed {failed_seed} failed: {message}"
        )));
    }

    let rows = aggregate(&traces)?;
    if let Some(dir) = out_dir {
        write_trace_csv(&dir.join(TRACE_CSV), &traces)?;
        write_summary_csv(&dir.join(SUMMARY_CSV), &rows)?;
        let meta = RunMeta {
            label: &cfg.label,
            config_hash: &hash,
            wall_time_secs: wall,
            learning_rate: cfg.train.learning_rate,
            steps: cfg.train.steps,
            hidden: cfg.train.hidden,
            init_scale: cfg.train.init_scale,
            n_test: cfg.train.n_test,
            seeds: &cfg.train.seeds,
        };
        fs::write(
            dir.join(RUN_META_JSON),
            serde_json::to_string_pretty(&meta)?,
        )?;
        let mut svg = Vec::new();
        crate::plot::emit_plot(&rows, &mut svg)?;
        fs::write(dir.join(PLOT_SVG), svg)?;
    }
    Ok(ExperimentResult {
        rows,
        traces,
        config_hash: hash,
        wall_time_secs: wall,
    })
}

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
    Fig2Template,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1a,
        Preset::Fig1b,
        Preset::Fig1c,
        Preset::Fig1d,
        Preset::Fig2Template,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig1c => "fig1c",
            Preset::Fig1d => "fig1d",
            Preset::Fig2Template => "fig2-template",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Run size: `Paper` reproduces the published figures; `Desk` shrinks the
/// model and step count so the full suite finishes on a laptop while keeping
/// the qualitative separation between the two curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

/// Which coefficients of the tanh-derived series the template keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig2Panel {
    /// Zero both c₃ and c₅ (matched mean/variance only).
    Zeroed,
    /// Keep c₃, zero c₅.
    C5Zero,
    /// Keep the full degree-5 expansion.
    Full,
}

impl Fig2Panel {
    pub fn name(self) -> &'static str {
        match self {
            Fig2Panel::Zeroed => "zeroed",
            Fig2Panel::C5Zero => "c5zero",
            Fig2Panel::Full => "full",
        }
    }
}

impl FromStr for Fig2Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeroed" => Ok(Fig2Panel::Zeroed),
            "c5zero" => Ok(Fig2Panel::C5Zero),
            "full" => Ok(Fig2Panel::Full),
            other => Err(Error::InvalidParameter(format!(
                "unknown panel {other:?}; expected zeroed, c5zero, or full"
            ))),
        }
    }
}

/// User-supplied inputs for the `fig2-template` preset: the mixing and
/// feature maps come from a parameter file, the series is derived from tanh.
#[derive(Debug, Clone)]
pub struct Fig2Options {
    pub params: GenModelParams,
    pub panel: Fig2Panel,
}

const PAPER_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const CHECKPOINT_COUNT: usize = 25;

fn fig1_series(preset: Preset) -> Vec<f64> {
    match preset {
        Preset::Fig1a => vec![0.4, 0.5, 0.0, 0.0],
        Preset::Fig1b => vec![0.4, 0.5, 0.2, 0.0],
        Preset::Fig1c => vec![0.4, 0.5, 0.0, 0.2],
        Preset::Fig1d => vec![0.4, 0.5, 0.2, 0.2],
        Preset::Fig2Template => unreachable!(),
    }
}

/// Degree-5 expansion of tanh used by the template preset, with the panel's
/// coefficients zeroed.
pub fn fig2_series(panel: Fig2Panel) -> Result<HermiteSeries> {
    let series = expand_activation(|u: f64| u.tanh(), 5, 200)?;
    Ok(match panel {
        Fig2Panel::Zeroed => series.with_zeroed(&[3, 5]),
        Fig2Panel::C5Zero => series.with_zeroed(&[5]),
        Fig2Panel::Full => series,
    })
}

/// Parameter file for the template preset: identity mixing, a scaled random
/// orthogonal feature map (so every data coordinate sees latent variance
/// 1.5), zero bias, and the tanh-derived series.
pub fn fig2_template_params(dim: usize, seed: u64) -> Result<GenModelParams> {
    let mut rng = substream(seed, Role::Template, 0);
    let q = random_orthogonal(dim, &mut rng);
    let scale = 1.5f64.sqrt();
    let f_rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| scale * q[(i, j)]).collect())
        .collect();
    GenModelParams::build(
        dim,
        dim,
        dim,
        MatrixSpec::Identity,
        MatrixSpec::Dense(f_rows),
        None,
        None,
        MatrixSpec::Identity,
        fig2_series(Fig2Panel::Full)?,
    )
}

/// Build the configuration for a named preset at the requested scale.
/// `fig2` must be provided (and is only consulted) for `fig2-template`.
pub fn preset_config(
    preset: Preset,
    scale: Scale,
    fig2: Option<Fig2Options>,
) -> Result<ExperimentConfig> {
    match preset {
        Preset::Fig2Template => {
            let opts = fig2.ok_or_else(|| {
                Error::InvalidParameter(
                    "fig2-template needs a parameter file for W, F, and b".into(),
                )
            })?;
            let params = opts.params.with_series(fig2_series(opts.panel)?);
            let (steps, learning_rate, hidden, init_scale) = match scale {
                Scale::Paper => (1_000_000, 3e-4, 512, 1.0),
                Scale::Desk => (20_000, 0.006, 128, 0.3),
            };
            Ok(ExperimentConfig {
                label: format!("fig2-template/{}", opts.panel.name()),
                params,
                train: TrainConfig {
                    learning_rate,
                    steps,
                    checkpoints: log_spaced_checkpoints(steps, CHECKPOINT_COUNT),
                    n_test: 2000,
                    seeds: PAPER_SEEDS.to_vec(),
                    hidden,
                    init_scale,
                },
            })
        }
        _ => {
            if fig2.is_some() {
                return Err(Error::InvalidParameter(format!(
                    "preset {preset} does not take a parameter file"
                )));
            }
            let (dim, steps, learning_rate, hidden, init_scale) = match scale {
                Scale::Paper => (128, 100_000, 0.1, 512, 1.0),
                Scale::Desk => (32, 20_000, 0.01, 128, 0.3),
            };
            let params = GenModelParams::build(
                dim,
                dim,
                dim,
                MatrixSpec::Identity,
                MatrixSpec::Identity,
                None,
                None,
                MatrixSpec::Identity,
                HermiteSeries::new(fig1_series(preset))?,
            )?;
            Ok(ExperimentConfig {
                label: preset.name().to_string(),
                params,
                train: TrainConfig {
                    learning_rate,
                    steps,
                    checkpoints: log_spaced_checkpoints(steps, CHECKPOINT_COUNT),
                    n_test: 2000,
                    seeds: PAPER_SEEDS.to_vec(),
                    hidden,
                    init_scale,
                },
            })
        }
    }
}
