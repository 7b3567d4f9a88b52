//! Probabilist's Hermite polynomials, Gauss–Hermite quadrature under the
//! standard Gaussian measure, and Hermite-coefficient extraction.
//!
//! Throughout the crate `Heₙ` denotes the probabilist's polynomials defined
//! by the recurrence
//!
//! ```text
//! He₀(z) = 1,   He₁(z) = z,   He_{n+1}(z) = z·Heₙ(z) − n·He_{n−1}(z),
//! ```
//!
//! which are orthogonal under `Z ~ N(0,1)` with `E[Heₘ(Z)Heₙ(Z)] = n!·δₘₙ`.
//! A square-integrable activation σ therefore has the L² expansion
//! `σ = Σᵢ cᵢHeᵢ` with `cᵢ = E[σ(Z)Heᵢ(Z)]/i!`; truncating at degree ℓ gives
//! the polynomial activations used by the generative model in this crate.
//!
//! Quadrature nodes are the roots of `Heₙ` and the weights are normalized to
//! sum to one, so an n-node rule integrates polynomials of degree ≤ 2n−1
//! exactly against the Gaussian measure. Root-finding and weights run on the
//! *orthonormal* recurrence `p₀ = 1, p₁ = z,
//! p_{k+1} = (z·p_k − √k·p_{k−1})/√(k+1)` (with `p_n' = √n·p_{n−1}` and
//! `wᵢ = 1/(n·p_{n−1}(xᵢ)²)`), which stays inside f64 range up to several
//! hundred nodes where the raw `Heₙ` and `n!` would overflow.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;
/// 171! overflows f64; coefficient extraction divides by i!.
const MAX_EXPANSION_DEGREE: usize = 160;

/// Evaluate `Heₙ(z)` by the upward recurrence.
pub fn he_eval(n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = z;
    for k in 1..n {
        let next = z * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Evaluate `He₀(z)…He_ℓ(z)` in one recurrence pass.
fn he_all(l: usize, z: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(1.0);
    if l == 0 {
        return out;
    }
    out.push(z);
    for k in 1..l {
        let next = z * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// Evaluate the orthonormal pair `(pₙ(x), p_{n−1}(x))`, `n ≥ 1`.
fn orthonormal_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// A truncated Hermite series `σ_ℓ(z) = Σᵢ cᵢHeᵢ(z)`.
///
/// Serialized as `{"degree": ℓ, "coeffs": [c₀, …, c_ℓ]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct HermiteSeries {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    degree: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<SeriesRepr> for HermiteSeries {
    type Error = Error;
    fn try_from(r: SeriesRepr) -> Result<Self> {
        if r.coeffs.len() != r.degree + 1 {
            return Err(Error::InvalidParameter(format!(
                "series declares degree {} but carries {} coefficients",
                r.degree,
                r.coeffs.len()
            )));
        }
        HermiteSeries::new(r.coeffs)
    }
}

impl From<HermiteSeries> for SeriesRepr {
    fn from(s: HermiteSeries) -> Self {
        SeriesRepr {
            degree: s.degree(),
            coeffs: s.coeffs,
        }
    }
}

impl HermiteSeries {
    /// Build a series from coefficients `c₀…c_ℓ` (so `degree = len − 1`).
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "a Hermite series needs at least the constant coefficient".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite Hermite coefficient {bad}"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `cᵢ`, zero beyond the truncation degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Evaluate `σ_ℓ(z)` in a single recurrence pass.
    pub fn eval(&self, z: f64) -> f64 {
        let c = &self.coeffs;
        let mut acc = c[0];
        if c.len() == 1 {
            return acc;
        }
        let mut prev = 1.0;
        let mut cur = z;
        acc += c[1] * cur;
        for k in 1..c.len() - 1 {
            let next = z * cur - k as f64 * prev;
            prev = cur;
            cur = next;
            acc += c[k + 1] * cur;
        }
        acc
    }

    /// Copy with the given coefficients forced to zero (used by experiment
    /// presets that switch off individual orders).
    pub fn with_zeroed(&self, indices: &[usize]) -> Self {
        let mut coeffs = self.coeffs.clone();
        for &i in indices {
            if i < coeffs.len() {
                coeffs[i] = 0.0;
            }
        }
        Self { coeffs }
    }
}

/// Nodes and probability weights of a Gauss–Hermite rule under `N(0,1)`.
///
/// Nodes are strictly increasing and symmetric about zero with matched
/// weights summing to one. At orders beyond ~350 the outermost true weights
/// fall below the smallest positive f64 and are stored as `+0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Expectation of `f` under `N(0,1)` by this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Build the n-node Gauss–Hermite rule (exact for polynomial degree ≤ 2n−1).
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "quadrature order must be at least 1".into(),
        ));
    }
    let positive = n / 2; // strictly positive roots; odd n adds the exact 0 node
    let mut pos_desc: Vec<f64> = Vec::with_capacity(positive);
    // Roots are found in descending order by Newton iteration with Maehly
    // deflation of every root already found (including the mirrored negative
    // roots and, for odd n, the exact root at 0). Each search starts above
    // its target — the first from the rigorous all-roots upper bound
    // √(4n+2), later ones a guarded fraction of the local spacing below the
    // previous root — where the deflated Newton map descends monotonically
    // onto the next root instead of hopping basins.
    let sqrt_n = (n as f64).sqrt();
    let upper = (4.0 * n as f64 + 2.0).sqrt();
    for i in 0..positive {
        let (mut x, ceiling) = if i == 0 {
            (upper, f64::INFINITY)
        } else {
            let gap = if i == 1 {
                upper - pos_desc[0]
            } else {
                pos_desc[i - 2] - pos_desc[i - 1]
            };
            (pos_desc[i - 1] - 0.35 * gap, pos_desc[i - 1])
        };
        let deflation = |x: f64| -> f64 {
            let mut s = 0.0;
            for &r in &pos_desc {
                s += 1.0 / (x - r) + 1.0 / (x + r);
            }
            if n % 2 == 1 {
                s += 1.0 / x;
            }
            s
        };
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (pn, pn1) = orthonormal_pair(n, x);
            let dx = pn / (sqrt_n * pn1 - pn * deflation(x));
            let mut next = x - dx;
            // Safeguards; with the monotone start these should never fire.
            if next >= ceiling {
                next = 0.5 * (x + ceiling);
            }
            if next <= 0.0 {
                next = 0.5 * x;
            }
            let moved = (next - x).abs();
            x = next;
            if moved <= NEWTON_TOL * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureConvergence {
                order: n,
                index: i,
                max_iter: NEWTON_MAX_ITER,
            });
        }
        pos_desc.push(x);
    }
    if pos_desc.windows(2).any(|ab| ab[0] <= ab[1]) {
        return Err(Error::QuadratureConvergence {
            order: n,
            index: positive,
            max_iter: NEWTON_MAX_ITER,
        });
    }

    let weight_at = |x: f64| -> f64 {
        let (_, pn1) = orthonormal_pair(n, x);
        1.0 / (n as f64 * pn1 * pn1)
    };

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &x in &pos_desc {
        nodes.push(-x);
        weights.push(weight_at(x)); // p_{n−1}(−x)² = p_{n−1}(x)², shared weight
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight_at(0.0));
    }
    for i in (0..positive).rev() {
        nodes.push(pos_desc[i]);
        weights.push(weights[i]);
    }

    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Project an activation onto `He₀…He_ℓ`: `cᵢ = E[σ(Z)Heᵢ(Z)]/i!`.
///
/// Node pairs `±x` are summed together, so exactly odd (or even) activations
/// get exactly-zero even (odd) coefficients instead of rounding noise.
pub fn expand_activation<F>(sigma: F, degree: usize, quad_order: usize) -> Result<HermiteSeries>
where
    F: Fn(f64) -> f64,
{
    if quad_order < degree + 1 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order {quad_order} cannot resolve a degree-{degree} expansion (need at least {})",
            degree + 1
        )));
    }
    if degree > MAX_EXPANSION_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "expansion degree {degree} exceeds the supported maximum {MAX_EXPANSION_DEGREE}"
        )));
    }
    let rule = gauss_hermite(quad_order)?;
    let nodes = rule.nodes();
    let weights = rule.weights();
    let n = nodes.len();

    let eval_sigma = |x: f64| -> Result<f64> {
        let v = sigma(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteActivation { node: x, value: v })
        }
    };

    let mut acc = vec![0.0; degree + 1];
    for j in 0..n / 2 {
        let x = nodes[n - 1 - j]; // positive member of the pair; nodes[j] == −x
        let w = weights[j];
        let s_pos = eval_sigma(x)?;
        let s_neg = eval_sigma(-x)?;
        let he = he_all(degree, x);
        for (i, acc_i) in acc.iter_mut().enumerate() {
            // Heᵢ(−x) = (−1)ⁱ·Heᵢ(x)
            let mirrored = if i % 2 == 0 { s_neg } else { -s_neg };
            *acc_i += w * he[i] * (s_pos + mirrored);
        }
    }
    if n % 2 == 1 {
        let w = weights[n / 2];
        let s0 = eval_sigma(0.0)?;
        let he = he_all(degree, 0.0);
        for (i, acc_i) in acc.iter_mut().enumerate() {
            *acc_i += w * s0 * he[i];
        }
    }

    let mut fact = 1.0;
    let coeffs = acc
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            if i > 0 {
                fact *= i as f64;
            }
            a / fact
        })
        .collect();
    HermiteSeries::new(coeffs)
}
