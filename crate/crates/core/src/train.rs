//! Online SGD on the two-layer ReLU network against the generative model.
//!
//! Each training step draws one fresh example: a fair ±1 label, then either a
//! standard-Gaussian input (label −1) or a draw from the generative model
//! (label +1). The squared error is minimised with batch-size-1 SGD, and the
//! test error is recorded on two fixed evaluation sets — one whose positive
//! class comes from the full model, one whose positive class comes from the
//! Gaussian surrogate with the same mean and covariance — at a log-spaced
//! grid of checkpoints.

use crate::error::{Error, Result};
use crate::model::{build_eval_pair, Dataset, GenModelParams, RowSampler};
use crate::net::init_net;
use crate::rng::{substream, Role};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Hyperparameters for one training run (shared across the seeds of an
/// experiment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// SGD step size η.
    pub learning_rate: f64,
    /// Total number of SGD steps.
    pub steps: u64,
    /// Steps after which the test losses are recorded; strictly increasing,
    /// ending at or before `steps`.
    pub checkpoints: Vec<u64>,
    /// Evaluation-set size per class.
    pub n_test: usize,
    /// Run seeds; each seed yields one independent trace.
    pub seeds: Vec<u64>,
    /// Hidden width h.
    pub hidden: usize,
    /// Scale of the Gaussian parameter initialisation.
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be finite and ≥ 0, got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be ≥ 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one checkpoint is required".into(),
            ));
        }
        if self.checkpoints[0] == 0 {
            return Err(Error::InvalidParameter("checkpoints start at 1".into()));
        }
        if self.checkpoints.windows(2).any(|ab| ab[0] >= ab[1]) {
            return Err(Error::InvalidParameter(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if *self.checkpoints.last().unwrap() > self.steps {
            return Err(Error::InvalidParameter(format!(
                "last checkpoint {} exceeds steps {}",
                self.checkpoints.last().unwrap(),
                self.steps
            )));
        }
        if self.n_test == 0 {
            return Err(Error::InvalidParameter("n_test must be ≥ 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one run seed is required".into(),
            ));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidParameter("hidden width must be ≥ 1".into()));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "init_scale must be finite and ≥ 0, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// `count` roughly log-spaced integers from 1 to `steps` inclusive
/// (duplicates collapse, so fewer may be returned for tiny ranges).
pub fn log_spaced_checkpoints(steps: u64, count: usize) -> Vec<u64> {
    assert!(steps >= 1 && count >= 1);
    let ln_max = (steps as f64).ln();
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = if count == 1 {
                1.0
            } else {
                i as f64 / (count - 1) as f64
            };
            (t * ln_max).exp().round() as u64
        })
        .map(|s| s.clamp(1, steps))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Losses recorded at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: u64,
    /// Mean squared error on the evaluation set whose positive class is the
    /// full generative model.
    pub loss_non_gaussian: f64,
    /// Mean squared error on the evaluation set whose positive class is the
    /// matched Gaussian surrogate.
    pub loss_gauss_equiv: f64,
}

/// Checkpoint curve of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub seed: u64,
    pub points: Vec<TracePoint>,
}

impl TrainTrace {
    pub const CSV_HEADER: &'static str = "step,loss_non_gaussian,loss_gauss_equiv,seed";

    /// Append this trace's rows in CSV form (no header).
    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> Result<()> {
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{}",
                p.step, p.loss_non_gaussian, p.loss_gauss_equiv, self.seed
            )?;
        }
        Ok(())
    }

    /// Full CSV document: header plus this trace's rows.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        self.write_csv_rows(w)
    }
}

/// Fixed pair of evaluation sets for one run seed.
pub struct EvalPair {
    pub non_gaussian: Dataset,
    pub gauss_equiv: Dataset,
}

/// Run one online-SGD training session and record both test losses at each
/// checkpoint. All randomness (evaluation sets, parameter initialisation,
/// per-step labels and samples) derives from `run_seed` through disjoint
/// substreams, so identical inputs give bit-identical traces.
pub fn train_online(
    params: &GenModelParams,
    cfg: &TrainConfig,
    run_seed: u64,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let (eval_model, eval_equiv) = build_eval_pair(params, cfg.n_test, run_seed)?;
    train_online_with_eval(
        params,
        cfg,
        run_seed,
        &EvalPair {
            non_gaussian: eval_model,
            gauss_equiv: eval_equiv,
        },
    )
}

/// Same as [`train_online`] but with caller-supplied evaluation sets (the
/// experiment layer reuses one pair across all of a variant's seeds only if
/// configured to; by default each seed builds its own pair).
pub fn train_online_with_eval(
    params: &GenModelParams,
    cfg: &TrainConfig,
    run_seed: u64,
    eval: &EvalPair,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let d = params.d();
    if eval.non_gaussian.dim() != d || eval.gauss_equiv.dim() != d {
        return Err(Error::InvalidParameter(format!(
            "evaluation sets have dimension {} / {}, model emits {}",
            eval.non_gaussian.dim(),
            eval.gauss_equiv.dim(),
            d
        )));
    }
    let mut net = init_net(d, cfg.hidden, cfg.init_scale, run_seed)?;
    let sampler = RowSampler::new(params)?;
    let mut points = Vec::with_capacity(cfg.checkpoints.len());
    let mut next_cp = 0usize;
    let mut x = vec![0.0; d];
    for step in 1..=cfg.steps {
        let positive = substream(run_seed, Role::TrainLabel, step).gen::<bool>();
        let y = if positive { 1.0 } else { -1.0 };
        let mut rng = substream(run_seed, Role::TrainSample, step);
        if positive {
            sampler.draw_into(&mut rng, &mut x);
        } else {
            for xi in x.iter_mut() {
                *xi = rng.sample(StandardNormal);
            }
        }
        let err = net.sgd_step(&x, y, cfg.learning_rate);
        if !err.is_finite() {
            return Err(Error::TrainingDiverged { step });
        }
        while next_cp < cfg.checkpoints.len() && cfg.checkpoints[next_cp] == step {
            let loss_ng = net.mean_loss(&eval.non_gaussian);
            let loss_ge = net.mean_loss(&eval.gauss_equiv);
            if !loss_ng.is_finite() || !loss_ge.is_finite() {
                return Err(Error::TrainingDiverged { step });
            }
            points.push(TracePoint {
                step,
                loss_non_gaussian: loss_ng,
                loss_gauss_equiv: loss_ge,
            });
            next_cp += 1;
        }
    }
    Ok(TrainTrace {
        seed: run_seed,
        points,
    })
}
