//! Moments and cumulants: exact values for Hermite series under Gaussian
//! inputs, unbiased sample estimators (k-statistics), and the analytic mean
//! and covariance of the full generative model.
//!
//! Everything analytic here reduces to Gaussian expectations of polynomials,
//! which Gauss–Hermite quadrature of sufficient order evaluates *exactly*
//! (an n-node rule integrates degree ≤ 2n−1), so these routines serve as
//! ground-truth oracles for the sampled data.

use crate::error::{Error, Result};
use crate::hermite::{gauss_hermite, HermiteSeries};
use crate::model::GenModelParams;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Cumulants κ₁…κ_m of a scalar law (κ₁ mean, κ₂ variance, then higher
/// orders). Serialized as `{"order": m, "values": [κ₁, …, κ_m]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CumulantRepr", into = "CumulantRepr")]
pub struct CumulantVector {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CumulantRepr {
    order: usize,
    values: Vec<f64>,
}

impl TryFrom<CumulantRepr> for CumulantVector {
    type Error = Error;
    fn try_from(r: CumulantRepr) -> Result<Self> {
        if r.values.len() != r.order {
            return Err(Error::InvalidParameter(format!(
                "cumulant vector declares order {} but carries {} values",
                r.order,
                r.values.len()
            )));
        }
        CumulantVector::new(r.values)
    }
}

impl From<CumulantVector> for CumulantRepr {
    fn from(c: CumulantVector) -> Self {
        CumulantRepr {
            order: c.order(),
            values: c.values,
        }
    }
}

impl CumulantVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "a cumulant vector needs at least the mean".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite cumulant {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// κ_r, 1-based (`kappa(1)` is the mean).
    pub fn kappa(&self, r: usize) -> f64 {
        assert!(r >= 1 && r <= self.values.len(), "cumulant order {r} out of range");
        self.values[r - 1]
    }
}

/// Analytic mean vector and covariance matrix of a d-dimensional law.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Raw moment `E[σ_ℓ(mean_shift + scale·Z)^r]`, `Z ~ N(0,1)`, exact up to
/// floating point: the integrand is a polynomial of degree r·ℓ, integrated
/// with an internally chosen rule of order ≥ ⌈(r·ℓ+1)/2⌉.
pub fn series_moment(s: &HermiteSeries, r: u32, mean_shift: f64, scale: f64) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidParameter("moment order must be ≥ 1".into()));
    }
    let order = exact_order(r as usize * s.degree());
    let rule = gauss_hermite(order)?;
    Ok(rule.integrate(|z| s.eval(mean_shift + scale * z).powi(r as i32)))
}

/// Smallest quadrature order integrating polynomial degree `deg` exactly.
fn exact_order(deg: usize) -> usize {
    (deg / 2 + 1).max(1)
}

/// Cumulants κ₁…κ_m of `σ_ℓ(Z)`, `Z ~ N(0,1)`, from exact raw moments via
/// the recursion `κ_n = m_n − Σ_{j=1}^{n−1} C(n−1, j−1)·κ_j·m_{n−j}`.
pub fn series_cumulants(s: &HermiteSeries, m: usize) -> Result<CumulantVector> {
    if m == 0 {
        return Err(Error::InvalidParameter("cumulant order must be ≥ 1".into()));
    }
    // One rule exact for the highest power; accumulate all m raw moments in
    // a single sweep with running powers of σ(z).
    let rule = gauss_hermite(exact_order(m * s.degree()))?;
    let mut raw = vec![0.0; m];
    for (&z, &w) in rule.nodes().iter().zip(rule.weights()) {
        let v = s.eval(z);
        let mut p = 1.0;
        for raw_r in raw.iter_mut() {
            p *= v;
            *raw_r += w * p;
        }
    }
    CumulantVector::new(cumulants_from_raw(&raw))
}

/// Moment-to-cumulant recursion on raw moments `m₁…m_m` (1-based orders).
fn cumulants_from_raw(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    // Pascal's triangle: binom[n][k] = C(n,k) for n,k < m.
    let mut binom = vec![vec![0.0f64; m.max(1)]; m.max(1)];
    for n in 0..m {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    let mut kap = vec![0.0; m];
    for n in 1..=m {
        let mut v = raw[n - 1];
        for j in 1..n {
            v -= binom[n - 1][j - 1] * kap[j - 1] * raw[n - j - 1];
        }
        kap[n - 1] = v;
    }
    kap
}

/// Unbiased k-statistics k₁…k_m (m ≤ 4) of a scalar sample: E[k_r] = κ_r.
///
/// With `m_r` the r-th central sample moment and n the sample size:
/// `k₁ = mean`, `k₂ = n·m₂/(n−1)`, `k₃ = n²·m₃/((n−1)(n−2))`,
/// `k₄ = n²·((n+1)·m₄ − 3(n−1)·m₂²)/((n−1)(n−2)(n−3))`.
pub fn sample_cumulants(data: &[f64], m: usize) -> Result<CumulantVector> {
    if m == 0 || m > 4 {
        return Err(Error::InvalidParameter(format!(
            "k-statistics are provided for orders 1–4, got {m}"
        )));
    }
    let n = data.len();
    if n <= m {
        return Err(Error::InsufficientSample { len: n, order: m });
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let mut c2 = 0.0;
    let mut c3 = 0.0;
    let mut c4 = 0.0;
    for &x in data {
        let d = x - mean;
        let d2 = d * d;
        c2 += d2;
        c3 += d2 * d;
        c4 += d2 * d2;
    }
    let (m2, m3, m4) = (c2 / nf, c3 / nf, c4 / nf);
    let mut out = vec![mean];
    if m >= 2 {
        out.push(nf * m2 / (nf - 1.0));
    }
    if m >= 3 {
        out.push(nf * nf * m3 / ((nf - 1.0) * (nf - 2.0)));
    }
    if m >= 4 {
        out.push(
            nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
                / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)),
        );
    }
    CumulantVector::new(out)
}

/// Covariance of `σ_ℓ(U)` and `σ_ℓ(V)` for standard bivariate Gaussian
/// `(U,V)` with correlation ρ: the orthogonality of the Hermite basis gives
/// `Cov = Σ_{r≥1} c_r²·r!·ρ^r`. Used as an independent cross-check of the
/// two-dimensional quadrature in [`model_mean_cov`].
pub fn series_covariance(s: &HermiteSeries, rho: f64) -> f64 {
    let mut fact = 1.0;
    let mut rho_pow = 1.0;
    let mut acc = 0.0;
    for r in 1..=s.degree() {
        fact *= r as f64;
        rho_pow *= rho;
        let c = s.coeff(r);
        acc += c * c * fact * rho_pow;
    }
    acc
}

/// Exact mean `E[x] = W·E[Θ]` and covariance `Cov(x) = W·Cov(Θ)·Wᵀ` of the
/// generative model `x = W·σ_ℓ(Fz + b)`, `z ~ N(μ, Σ)`.
///
/// Each pre-mixing coordinate is `σ_ℓ(uᵢ)` with `uᵢ ~ N(bᵢ + (Fμ)ᵢ, Aᵢᵢ)`,
/// `A = FΣFᵀ`; means and variances use one-dimensional quadrature, pairwise
/// covariances a two-point tensor rule over the whitened pair
/// `(uᵢ, uⱼ) = shift + (sᵢt₁, sⱼ(ρt₁ + √(1−ρ²)t₂))`. Degenerate coordinates
/// (sᵢ = 0) are the constant `σ_ℓ(shiftᵢ)`; near-perfectly correlated pairs
/// collapse to a one-dimensional rule.
pub fn model_mean_cov(params: &GenModelParams) -> Result<MomentSummary> {
    let s = params.series();
    let k = params.k();
    let rule = gauss_hermite(s.degree() + 1)?;
    let nodes = rule.nodes();
    let weights = rule.weights();

    let a = params.f() * params.sigma() * params.f().transpose();
    let shift = params.f() * params.mu() + params.b();
    let sd: Vec<f64> = (0..k).map(|i| a[(i, i)].max(0.0).sqrt()).collect();

    // Per-coordinate σ values at the 1-D nodes, reused by the pair loop.
    let sigma_at: Vec<Vec<f64>> = (0..k)
        .map(|i| nodes.iter().map(|&z| s.eval(shift[i] + sd[i] * z)).collect())
        .collect();
    let mean_theta: Vec<f64> = (0..k)
        .map(|i| sigma_at[i].iter().zip(weights).map(|(&v, &w)| w * v).sum())
        .collect();

    let mut cov_theta = DMatrix::zeros(k, k);
    for i in 0..k {
        let e2: f64 = sigma_at[i]
            .iter()
            .zip(weights)
            .map(|(&v, &w)| w * v * v)
            .sum();
        cov_theta[(i, i)] = e2 - mean_theta[i] * mean_theta[i];
        for j in i + 1..k {
            let entry = if sd[i] == 0.0 || sd[j] == 0.0 {
                0.0
            } else {
                let rho = (a[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0);
                let ortho_sq = (1.0 - rho * rho).max(0.0);
                let e_prod = if ortho_sq < 1e-12 {
                    // Rank-one pair: uⱼ is (up to sign) a deterministic
                    // affine function of uᵢ.
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(&t1, &w)| {
                            w * s.eval(shift[i] + sd[i] * t1)
                                * s.eval(shift[j] + sd[j] * rho * t1)
                        })
                        .sum::<f64>()
                } else {
                    let ortho = ortho_sq.sqrt();
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(&t1, &w1)| {
                            let inner: f64 = nodes
                                .iter()
                                .zip(weights)
                                .map(|(&t2, &w2)| {
                                    w2 * s.eval(shift[j] + sd[j] * (rho * t1 + ortho * t2))
                                })
                                .sum();
                            w1 * s.eval(shift[i] + sd[i] * t1) * inner
                        })
                        .sum::<f64>()
                };
                e_prod - mean_theta[i] * mean_theta[j]
            };
            cov_theta[(i, j)] = entry;
            cov_theta[(j, i)] = entry;
        }
    }

    let mean = params.w() * DVector::from_vec(mean_theta);
    let cov_raw = params.w() * cov_theta * params.w().transpose();
    // W·C·Wᵀ is symmetric in exact arithmetic; absorb rounding.
    let cov = 0.5 * (&cov_raw + cov_raw.transpose());
    Ok(MomentSummary { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::expand_activation;
    use crate::model::{GenModelParams, MatrixSpec};
    use approx::assert_abs_diff_eq;

    fn series(c: &[f64]) -> HermiteSeries {
        HermiteSeries::new(c.to_vec()).unwrap()
    }

    #[test]
    fn series_moment_examples() {
        let s = series(&[0.4, 0.5]);
        assert_abs_diff_eq!(series_moment(&s, 1, 0.0, 1.0).unwrap(), 0.4, epsilon = 1e-14);

        let s = series(&[0.4, 0.5, 0.2, 0.2]);
        assert_abs_diff_eq!(series_moment(&s, 2, 0.0, 1.0).unwrap(), 0.73, epsilon = 1e-13);

        let he2 = series(&[0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(series_moment(&he2, 3, 0.0, 1.0).unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn series_moment_handles_shift_and_scale() {
        // σ(u) = u with u ~ N(2, 9): E[u²] = 4 + 9.
        let id = series(&[0.0, 1.0]);
        assert_abs_diff_eq!(series_moment(&id, 2, 2.0, 3.0).unwrap(), 13.0, epsilon = 1e-12);
        // Degenerate scale: constant σ(shift).
        let s = series(&[0.4, 0.5, 0.2, 0.2]);
        let c = s.eval(1.7);
        assert_abs_diff_eq!(series_moment(&s, 2, 1.7, 0.0).unwrap(), c * c, epsilon = 1e-13);
    }

    #[test]
    fn series_cumulants_examples() {
        let g = series_cumulants(&series(&[0.4, 0.5]), 4).unwrap();
        let want = [0.4, 0.25, 0.0, 0.0];
        for (r, &w) in want.iter().enumerate() {
            assert_abs_diff_eq!(g.kappa(r + 1), w, epsilon = 1e-12);
        }

        let he2 = series_cumulants(&series(&[0.0, 0.0, 1.0]), 4).unwrap();
        assert_abs_diff_eq!(he2.kappa(1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(he2.kappa(2), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(he2.kappa(3), 8.0, epsilon = 1e-11);
        assert_abs_diff_eq!(he2.kappa(4), 48.0, epsilon = 1e-10);

        let one = series_cumulants(&series(&[0.37, 0.2, -0.4]), 1).unwrap();
        assert_eq!(one.values(), &[0.37]);
    }

    #[test]
    fn series_cumulants_pinned_values() {
        // Degree-3 series: closed-form κ for (c₀, c₁, c₂, c₃) evaluated with
        // 50-digit arithmetic and frozen here.
        let cases: [(&[f64], [f64; 4]); 4] = [
            (&[0.4, 0.5, 0.2, 0.0], [0.4, 0.33, 0.364, 0.5568]),
            (&[0.4, 0.5, 0.0, 0.2], [0.4, 0.49, 0.0, 13.128]),
            (&[0.4, 0.5, 0.2, 0.2], [0.4, 0.57, 1.948, 19.4448]),
            (&[0.0, 0.5, 0.3, 0.0], [0.0, 0.43, 0.666, 1.4688]),
        ];
        for (coeffs, want) in cases {
            let got = series_cumulants(&series(coeffs), 4).unwrap();
            for (r, &w) in want.iter().enumerate() {
                assert_abs_diff_eq!(got.kappa(r + 1), w, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tanh_series_cumulants_match_high_precision_oracle() {
        let s = expand_activation(f64::tanh, 5, 200).unwrap();
        let k = series_cumulants(&s, 6).unwrap();
        assert_abs_diff_eq!(k.kappa(1), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k.kappa(2), 0.392824956699, epsilon = 1e-9);
        assert_abs_diff_eq!(k.kappa(3), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.kappa(4), -0.180289514689, epsilon = 1e-9);
        assert_abs_diff_eq!(k.kappa(6), 4.41483717366, epsilon = 1e-8);
        // Same activation fed with N(0, 1.5): variance pinned by the oracle.
        let m1 = series_moment(&s, 1, 0.0, 1.5f64.sqrt()).unwrap();
        let m2 = series_moment(&s, 2, 0.0, 1.5f64.sqrt()).unwrap();
        assert_abs_diff_eq!(m2 - m1 * m1, 0.481804654, epsilon = 1e-8);
    }

    #[test]
    fn sample_cumulants_examples() {
        let k = sample_cumulants(&[5.0; 8], 2).unwrap();
        assert_eq!(k.values(), &[5.0, 0.0]);

        let k = sample_cumulants(&[-1.0, 1.0, -1.0, 1.0], 2).unwrap();
        assert_abs_diff_eq!(k.kappa(1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.kappa(2), 4.0 / 3.0, epsilon = 1e-15);

        assert!(matches!(
            sample_cumulants(&[1.0, 2.0, 3.0], 3),
            Err(Error::InsufficientSample { len: 3, order: 3 })
        ));
        assert!(matches!(
            sample_cumulants(&[1.0, 2.0, 3.0], 5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn kstats_match_known_small_sample() {
        // Exact rational values for the sample {0,1,2,4,6}: mean 13/5,
        // central moments m₂ = 116/25, m₃ = 504/125, m₄ = 23732/625, giving
        // k₂ = 29/5, k₃ = 42/5, k₄ = −159/5.
        let data = [0.0, 1.0, 2.0, 4.0, 6.0];
        let k = sample_cumulants(&data, 4).unwrap();
        assert_abs_diff_eq!(k.kappa(1), 2.6, epsilon = 1e-14);
        assert_abs_diff_eq!(k.kappa(2), 5.8, epsilon = 1e-13);
        assert_abs_diff_eq!(k.kappa(3), 8.4, epsilon = 1e-13);
        assert_abs_diff_eq!(k.kappa(4), -31.8, epsilon = 1e-12);
    }

    #[test]
    fn cumulant_serde_round_trip() {
        let c = CumulantVector::new(vec![0.4, 0.25, 0.0, 0.2]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"order":4,"values":[0.4,0.25,0.0,0.2]}"#);
        let back: CumulantVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let bad: std::result::Result<CumulantVector, _> =
            serde_json::from_str(r#"{"order":3,"values":[0.4]}"#);
        assert!(bad.is_err());
    }

    fn identity_params(series_coeffs: &[f64], dim: usize) -> GenModelParams {
        GenModelParams::build(
            dim,
            dim,
            dim,
            MatrixSpec::Identity,
            MatrixSpec::Identity,
            None,
            None,
            MatrixSpec::Identity,
            series(series_coeffs),
        )
        .unwrap()
    }

    #[test]
    fn model_mean_cov_diagonal_case() {
        let p = identity_params(&[0.4, 0.5, 0.2, 0.2], 3);
        let ms = model_mean_cov(&p).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(ms.mean[i], 0.4, epsilon = 1e-12);
            for j in 0..3 {
                let want = if i == j { 0.57 } else { 0.0 };
                assert_abs_diff_eq!(ms.cov[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn model_mean_cov_constant_series() {
        let w = MatrixSpec::Dense(vec![vec![2.0, 0.0], vec![1.0, -1.0]]);
        let p = GenModelParams::build(
            2,
            2,
            2,
            w,
            MatrixSpec::Identity,
            None,
            None,
            MatrixSpec::Identity,
            series(&[0.7]),
        )
        .unwrap();
        let ms = model_mean_cov(&p).unwrap();
        assert_abs_diff_eq!(ms.mean[0], 1.4, epsilon = 1e-14);
        assert_abs_diff_eq!(ms.mean[1], 0.0, epsilon = 1e-14);
        assert!(ms.cov.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn model_mean_cov_orthogonal_rows_decorrelate() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let f = MatrixSpec::Dense(vec![vec![inv, inv, 0.0], vec![inv, -inv, 0.0]]);
        let p = GenModelParams::build(
            2,
            2,
            3,
            MatrixSpec::Identity,
            f,
            None,
            None,
            MatrixSpec::Identity,
            series(&[0.4, 0.5, 0.2, 0.2]),
        )
        .unwrap();
        let ms = model_mean_cov(&p).unwrap();
        assert_abs_diff_eq!(ms.cov[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ms.cov[(0, 0)], 0.57, epsilon = 1e-12);
    }

    #[test]
    fn pairwise_quadrature_matches_correlation_expansion() {
        // Rows with unit variance and correlation ρ: the 2-D tensor rule
        // must reproduce Σ_r c_r²·r!·ρ^r.
        let s = series(&[0.1, 0.6, -0.3, 0.25, 0.05, -0.02]);
        for rho in [-0.95, -0.4, 0.0, 0.3, 0.7, 0.999] {
            let f = MatrixSpec::Dense(vec![
                vec![1.0, 0.0],
                vec![rho, (1.0 - rho * rho).sqrt()],
            ]);
            let p = GenModelParams::build(
                2,
                2,
                2,
                MatrixSpec::Identity,
                f,
                None,
                None,
                MatrixSpec::Identity,
                s.clone(),
            )
            .unwrap();
            let ms = model_mean_cov(&p).unwrap();
            assert_abs_diff_eq!(ms.cov[(0, 1)], series_covariance(&s, rho), epsilon = 1e-9);
        }
    }

    #[test]
    fn rank_one_pair_falls_back_to_1d() {
        // Identical rows: ρ = 1 exactly; covariance equals the variance.
        let f = MatrixSpec::Dense(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let s = series(&[0.4, 0.5, 0.2, 0.2]);
        let p = GenModelParams::build(
            2,
            2,
            2,
            MatrixSpec::Identity,
            f,
            None,
            None,
            MatrixSpec::Identity,
            s,
        )
        .unwrap();
        let ms = model_mean_cov(&p).unwrap();
        assert_abs_diff_eq!(ms.cov[(0, 1)], 0.57, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_coordinate_is_constant() {
        // Second row of F is zero: u₂ ≡ b₂, so its variance and covariances
        // vanish and its mean is σ(b₂).
        let f = MatrixSpec::Dense(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let s = series(&[0.4, 0.5, 0.2, 0.2]);
        let b = vec![0.0, 1.3];
        let p = GenModelParams::build(
            2,
            2,
            2,
            MatrixSpec::Identity,
            f,
            Some(b),
            None,
            MatrixSpec::Identity,
            s.clone(),
        )
        .unwrap();
        let ms = model_mean_cov(&p).unwrap();
        assert_abs_diff_eq!(ms.mean[1], s.eval(1.3), epsilon = 1e-12);
        assert_abs_diff_eq!(ms.cov[(1, 1)], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ms.cov[(0, 1)], 0.0, epsilon = 1e-13);
    }
}
