//! Inverse problem: find Hermite coefficients `(c₀,…,c_ℓ)` whose pushforward
//! `σ_ℓ(Z)`, `Z ~ N(0,1)`, attains ℓ+1 target cumulants κ₁…κ_{ℓ+1}.
//!
//! The forward map `g(c) = (κ₁,…,κ_{ℓ+1})` is polynomial (evaluated exactly
//! by quadrature in [`crate::moments::series_cumulants`]), so the solver runs
//! damped Newton on `g(c) − κ` with a central-difference Jacobian and
//! seeded multi-start. A candidate is accepted only after *recomputing* its
//! cumulants and checking the worst-case error — Newton's own convergence
//! claim is never trusted.
//!
//! The system is generically multi-valued (e.g. `c₁ ↦ −c₁` leaves all
//! even-order cumulants fixed at ℓ = 1), so selection is canonical: the
//! first certified solution with `c₁ ≥ 0` wins; failing that, the certified
//! candidate with minimal Σᵢcᵢ² (closest to Gaussian); failing everything,
//! an error carrying the best residual found. Restarts run sequentially, so
//! identical inputs give bit-identical reports.

use crate::error::{Error, Result};
use crate::hermite::HermiteSeries;
use crate::moments::{series_cumulants, CumulantVector};
use crate::rng::{substream, Role};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Default acceptance tolerance on the worst cumulant error.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of perturbed restarts after the unperturbed attempt.
pub const DEFAULT_MAX_RESTARTS: u32 = 20;

const MAX_NEWTON_ITERS: u32 = 60;
const MAX_BACKTRACKS: u32 = 30;
const FD_STEP: f64 = 1e-6;
const RESTART_NOISE: f64 = 0.3;

/// Outcome of a coefficient solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// The accepted coefficients.
    pub series: HermiteSeries,
    /// Worst absolute cumulant error of `series`, recomputed independently.
    pub residual_norm: f64,
    /// Total Newton iterations spent across all attempts.
    pub iterations: u32,
    /// Restarts executed before returning (0 = first attempt sufficed).
    pub restarts_used: u32,
}

struct Attempt {
    coeffs: DVector<f64>,
    iterations: u32,
}

/// Worst-case absolute cumulant error of coefficients `c` against targets,
/// or `None` when the coefficients or their cumulants are non-finite.
fn residual(c: &DVector<f64>, targets: &[f64]) -> Option<DVector<f64>> {
    if c.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let s = HermiteSeries::new(c.iter().copied().collect()).ok()?;
    let kappa = series_cumulants(&s, targets.len()).ok()?;
    let r = DVector::from_iterator(
        targets.len(),
        kappa.values().iter().zip(targets).map(|(g, t)| g - t),
    );
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One damped-Newton run from a fixed initial point.
fn newton_attempt(init: DVector<f64>, targets: &[f64], tol: f64) -> Attempt {
    let dim = init.len();
    let mut c = init;
    let mut iterations = 0;
    let (mut best_c, mut best_rn) = (c.clone(), f64::INFINITY);

    let Some(mut r) = residual(&c, targets) else {
        return Attempt {
            coeffs: best_c,
            iterations,
        };
    };
    let mut rn = norm_inf(&r);

    while rn > tol && iterations < MAX_NEWTON_ITERS {
        if rn < best_rn {
            best_rn = rn;
            best_c = c.clone();
        }
        // Central-difference Jacobian of the cumulant map.
        let mut jac = DMatrix::zeros(dim, dim);
        let mut broke = false;
        for i in 0..dim {
            let h = FD_STEP * c[i].abs().max(1.0);
            let mut cp = c.clone();
            cp[i] += h;
            let mut cm = c.clone();
            cm[i] -= h;
            match (residual(&cp, targets), residual(&cm, targets)) {
                (Some(rp), Some(rm)) => jac.set_column(i, &((rp - rm) / (2.0 * h))),
                _ => {
                    broke = true;
                    break;
                }
            }
        }
        if broke {
            break;
        }
        let Some(step) = jac.lu().solve(&(-&r)) else {
            break; // singular Jacobian: give up on this start
        };

        // Backtracking line search on the worst-case error.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let trial = &c + alpha * &step;
            if let Some(rt) = residual(&trial, targets) {
                let rtn = norm_inf(&rt);
                if rtn < rn {
                    c = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break; // stalled
        }
    }
    if rn < best_rn {
        best_c = c;
    }
    Attempt {
        coeffs: best_c,
        iterations,
    }
}

/// Find `(c₀,…,c_ℓ)` with cumulants κ₁…κ_{ℓ+1} equal to `targets` within
/// `tol` (worst absolute error). See the module docs for the selection rule
/// among multiple solutions and the failure contract.
pub fn solve_coefficients(
    targets: &CumulantVector,
    degree: usize,
    tol: f64,
    max_restarts: u32,
    seed: u64,
) -> Result<SolveReport> {
    if targets.order() != degree + 1 {
        return Err(Error::InvalidParameter(format!(
            "degree {degree} needs {} target cumulants, got {}",
            degree + 1,
            targets.order()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if targets.order() >= 2 && targets.kappa(2) < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target variance must be non-negative, got {}",
            targets.kappa(2)
        )));
    }
    let t = targets.values();

    // Moment-matched Gaussian start: mean in c₀, √variance in c₁, rest 0.
    let mut base = DVector::zeros(degree + 1);
    base[0] = t[0];
    if degree >= 1 {
        base[1] = t[1].max(0.0).sqrt();
    }

    let mut total_iterations = 0;
    let mut certified: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut best_failed: Option<(DVector<f64>, f64)> = None;
    let mut restarts_used = 0;

    for attempt_idx in 0..=max_restarts {
        restarts_used = attempt_idx;
        let init = if attempt_idx == 0 {
            base.clone()
        } else {
            let mut rng = substream(seed, Role::SolverRestart, attempt_idx as u64);
            base.map(|v| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                v + RESTART_NOISE * noise
            })
        };
        let attempt = newton_attempt(init, t, tol);
        total_iterations += attempt.iterations;

        // Certify post hoc: recompute the cumulants of the claimed solution.
        let rn = residual(&attempt.coeffs, t)
            .map(|r| norm_inf(&r))
            .unwrap_or(f64::INFINITY);
        if rn <= tol {
            let c1 = if degree >= 1 { attempt.coeffs[1] } else { 0.0 };
            if c1 >= 0.0 {
                return Ok(SolveReport {
                    series: HermiteSeries::new(attempt.coeffs.iter().copied().collect())?,
                    residual_norm: rn,
                    iterations: total_iterations,
                    restarts_used,
                });
            }
            certified.push((attempt.coeffs, rn));
        } else if best_failed
            .as_ref()
            .map(|(_, b)| rn < *b)
            .unwrap_or(true)
        {
            best_failed = Some((attempt.coeffs, rn));
        }
    }

    // No certified solution had c₁ ≥ 0: take the closest-to-Gaussian one.
    if let Some((coeffs, rn)) = certified
        .into_iter()
        .min_by(|a, b| a.0.norm_squared().total_cmp(&b.0.norm_squared()))
    {
        return Ok(SolveReport {
            series: HermiteSeries::new(coeffs.iter().copied().collect())?,
            residual_norm: rn,
            iterations: total_iterations,
            restarts_used,
        });
    }

    let (coeffs, rn) = best_failed.expect("at least one attempt always runs");
    Err(Error::SolverDidNotConverge {
        restarts: restarts_used as usize,
        best_residual: rn,
        best_series: HermiteSeries::new(
            coeffs.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect(),
        )?,
    })
}
