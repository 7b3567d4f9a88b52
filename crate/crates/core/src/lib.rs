//! Core library for a cumulant-controllable non-Gaussian generative model
//! and the training experiments built on top of it.
//!
//! The data model draws a latent Gaussian `z ~ N(μ, Σ)` in ℝᵖ, pushes it
//! through an affine map and a degree-ℓ Hermite-series activation applied
//! coordinate-wise, and mixes the result linearly:
//!
//! ```text
//! x = W·σ_ℓ(F·z + b),      σ_ℓ(u) = Σᵢ₌₀..ℓ cᵢ·Heᵢ(u).
//! ```
//!
//! Because the `Heᵢ` are orthogonal under the Gaussian measure, the
//! coefficients `cᵢ` control the cumulants of each pre-mixing coordinate in
//! closed form, which makes it possible to dial in a target mean, variance,
//! skewness, and kurtosis exactly — and to construct a *Gaussian equivalent*
//! dataset with the same mean and covariance but all higher cumulants erased.
//!
//! Module map:
//! - [`hermite`]: Hermite polynomials, Gauss–Hermite quadrature, activation
//!   expansion.
//! - [`moments`]: series → moments/cumulants in closed form, unbiased sample
//!   cumulants, and the exact mean/covariance of the generative model.
//! - [`solver`]: inverse problem — find series coefficients realizing target
//!   cumulants.
//! - [`model`]: dataset generation (non-Gaussian, Gaussian-equivalent,
//!   labelled two-class mixes).
//! - [`net`] / [`train`]: two-layer ReLU network and its online SGD loop.
//! - [`experiment`]: multi-seed experiment runner, presets, CSV/JSON output.
//! - [`plot`]: minimal SVG learning-curve rendering.
//! - [`rng`]: deterministic stream-splitting RNG so results are bit-stable
//!   under any parallelism.
//! - [`par`]: indexed parallel map with a sequential fallback (feature
//!   `parallel`, on by default).

pub mod error;
pub mod experiment;
pub mod hermite;
pub mod model;
pub mod moments;
pub mod net;
pub mod par;
pub mod plot;
pub mod rng;
pub mod solver;
pub mod train;

pub use error::{Error, Result};
pub use experiment::{
    fig2_template_params, preset_config, run_experiment, ExperimentConfig, ExperimentResult,
    Fig2Options, Fig2Panel, Preset, Scale, SummaryRow,
};
pub use hermite::{expand_activation, gauss_hermite, he_eval, HermiteSeries, QuadratureRule};
pub use model::{
    build_eval_pair, build_train_dataset, gaussian_equivalent, generate, sample_latent, Dataset,
    GenModelParams, MatrixSpec,
};
pub use moments::{
    model_mean_cov, sample_cumulants, series_covariance, series_cumulants, series_moment,
    CumulantVector, MomentSummary,
};
pub use net::{grad_mse, init_net, NetGradient, TwoLayerNet};
pub use plot::emit_plot;
pub use solver::{solve_coefficients, SolveReport};
pub use train::{log_spaced_checkpoints, train_online, TracePoint, TrainConfig, TrainTrace};
