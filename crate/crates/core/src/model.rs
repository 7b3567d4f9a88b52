//! The generative data model `x = W·σ_ℓ(Fz + b)` with latent `z ~ N(μ, Σ)`,
//! its moment-matched Gaussian twin, and labelled two-class datasets.
//!
//! The non-Gaussian class is the pushforward of the latent Gaussian through
//! the Hermite-series activation; the *Gaussian-equivalent* sampler draws
//! from `N(mean, cov)` with the exact model mean and covariance, so the two
//! laws agree in first and second moments and differ only from the third
//! cumulant up. Class −1 is always a standard Gaussian in output space ℝᵈ.
//!
//! All randomness flows through [`crate::rng::substream`], one substream per
//! row, so datasets are bit-identical for a given seed regardless of thread
//! count, and the two halves of an evaluation pair share their class −1 rows
//! and shuffle exactly.

use crate::error::{Error, Result};
use crate::hermite::HermiteSeries;
use crate::moments::model_mean_cov;
use crate::par;
use crate::rng::{substream, Role};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Matrix entry in a parameter file: explicit rows, or the token
/// `"identity"` for a square identity matrix of the declared size.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    Identity,
    Dense(Vec<Vec<f64>>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixSpecRepr {
    Token(String),
    Rows(Vec<Vec<f64>>),
}

impl Serialize for MatrixSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MatrixSpec::Identity => ser.serialize_str("identity"),
            MatrixSpec::Dense(rows) => rows.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for MatrixSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match MatrixSpecRepr::deserialize(de)? {
            MatrixSpecRepr::Token(t) if t == "identity" => Ok(MatrixSpec::Identity),
            MatrixSpecRepr::Token(t) => Err(serde::de::Error::custom(format!(
                "unknown matrix token {t:?} (only \"identity\" is accepted)"
            ))),
            MatrixSpecRepr::Rows(rows) => Ok(MatrixSpec::Dense(rows)),
        }
    }
}

impl MatrixSpec {
    /// Materialize as an `nrows × ncols` matrix, validating shape and
    /// finiteness. `Identity` requires `nrows == ncols`.
    fn materialize(&self, name: &str, nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Identity => {
                if nrows != ncols {
                    return Err(Error::InvalidParameter(format!(
                        "{name}: \"identity\" needs a square shape, got {nrows}×{ncols}"
                    )));
                }
                Ok(DMatrix::identity(nrows, ncols))
            }
            MatrixSpec::Dense(rows) => {
                if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::InvalidParameter(format!(
                        "{name}: expected {nrows}×{ncols}, got {}×{:?}",
                        rows.len(),
                        rows.first().map(|r| r.len())
                    )));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "{name}: non-finite entry"
                    )));
                }
                Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
            }
        }
    }
}

/// Validated parameters of the generative model.
///
/// Serialized as
/// `{"d":…, "k":…, "p":…, "W":…, "F":…, "b":…, "mu":…, "Sigma":…, "series":…}`
/// where `W`, `F`, `Sigma` accept the `"identity"` shorthand and `b`, `mu`
/// default to zero vectors when omitted. Output always writes matrices in
/// explicit row form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct GenModelParams {
    d: usize,
    k: usize,
    p: usize,
    w: DMatrix<f64>,
    f: DMatrix<f64>,
    b: DVector<f64>,
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    series: HermiteSeries,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    d: usize,
    k: usize,
    p: usize,
    #[serde(rename = "W")]
    w: MatrixSpec,
    #[serde(rename = "F")]
    f: MatrixSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
    #[serde(rename = "Sigma")]
    sigma: MatrixSpec,
    series: HermiteSeries,
}

impl TryFrom<ParamsRepr> for GenModelParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        GenModelParams::build(r.d, r.k, r.p, r.w, r.f, r.b, r.mu, r.sigma, r.series)
    }
}

impl From<GenModelParams> for ParamsRepr {
    fn from(p: GenModelParams) -> Self {
        let dense = |m: &DMatrix<f64>| {
            MatrixSpec::Dense(m.row_iter().map(|r| r.iter().copied().collect()).collect())
        };
        ParamsRepr {
            d: p.d,
            k: p.k,
            p: p.p,
            w: dense(&p.w),
            f: dense(&p.f),
            b: Some(p.b.iter().copied().collect()),
            mu: Some(p.mu.iter().copied().collect()),
            sigma: dense(&p.sigma),
            series: p.series,
        }
    }
}

/// Eigenvalues may round slightly negative; beyond this they are rejected.
const PSD_TOLERANCE: f64 = 1e-8;
/// A covariance square root may clip at most this fraction of the trace.
const CLIP_FRACTION: f64 = 1e-6;

impl GenModelParams {
    /// Validate and assemble model parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        d: usize,
        k: usize,
        p: usize,
        w: MatrixSpec,
        f: MatrixSpec,
        b: Option<Vec<f64>>,
        mu: Option<Vec<f64>>,
        sigma: MatrixSpec,
        series: HermiteSeries,
    ) -> Result<Self> {
        if d == 0 || k == 0 || p == 0 {
            return Err(Error::InvalidParameter(format!(
                "dimensions must be positive, got d={d}, k={k}, p={p}"
            )));
        }
        let w = w.materialize("W", d, k)?;
        let f = f.materialize("F", k, p)?;
        let sigma = sigma.materialize("Sigma", p, p)?;
        let vector = |name: &str, v: Option<Vec<f64>>, len: usize| -> Result<DVector<f64>> {
            match v {
                None => Ok(DVector::zeros(len)),
                Some(v) if v.len() == len && v.iter().all(|x| x.is_finite()) => {
                    Ok(DVector::from_vec(v))
                }
                Some(v) => Err(Error::InvalidParameter(format!(
                    "{name}: expected {len} finite entries, got {}",
                    v.len()
                ))),
            }
        };
        let b = vector("b", b, k)?;
        let mu = vector("mu", mu, p)?;

        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "Sigma asymmetric: max |Σ−Σᵀ| entry {asym:e}"
            )));
        }
        let eig = sigma.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: min_eig,
                tolerance: PSD_TOLERANCE,
            });
        }
        Ok(Self {
            d,
            k,
            p,
            w,
            f,
            b,
            mu,
            sigma,
            series,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn series(&self) -> &HermiteSeries {
        &self.series
    }

    /// Copy of these parameters with a different activation series.
    pub fn with_series(&self, series: HermiteSeries) -> Self {
        Self {
            series,
            ..self.clone()
        }
    }
}

/// Square root of a symmetric matrix: Cholesky factor when positive
/// definite, otherwise the symmetric eigen-root with negative eigenvalues
/// clipped to zero. Returns the root and the clipped (negative) mass.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok((chol.l(), 0.0));
    }
    let eig = m.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite {
            eigenvalue: min_eig,
            tolerance: PSD_TOLERANCE,
        });
    }
    let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok((root, clipped))
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Reusable per-row sampler for the non-Gaussian model: draws
/// `x = W·σ_ℓ(F(μ + Lε) + b)` from one RNG stream.
pub(crate) struct RowSampler<'a> {
    params: &'a GenModelParams,
    latent_root: DMatrix<f64>,
}

impl<'a> RowSampler<'a> {
    pub(crate) fn new(params: &'a GenModelParams) -> Result<Self> {
        let (latent_root, _) = psd_sqrt(params.sigma())?;
        Ok(Self {
            params,
            latent_root,
        })
    }

    pub(crate) fn latent(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let eps = standard_normal_vec(rng, self.params.p);
        self.params.mu() + &self.latent_root * eps
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = self.latent(rng);
        let u = self.params.f() * z + self.params.b();
        let theta = u.map(|v| self.params.series().eval(v));
        self.params.w() * theta
    }

    /// Draw one row directly into a caller-provided buffer of length `d`.
    pub(crate) fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let x = self.draw(rng);
        out.copy_from_slice(x.as_slice());
    }
}

/// Reusable per-row sampler for the moment-matched Gaussian:
/// `x = mean + Cε` with `CCᵀ = cov` from the analytic model moments.
pub(crate) struct EquivalentSampler {
    mean: DVector<f64>,
    cov_root: DMatrix<f64>,
}

impl EquivalentSampler {
    pub(crate) fn new(params: &GenModelParams) -> Result<Self> {
        let ms = model_mean_cov(params)?;
        let (cov_root, clipped) = psd_sqrt(&ms.cov)?;
        let trace: f64 = ms.cov.diagonal().iter().sum::<f64>().max(0.0);
        if clipped > CLIP_FRACTION * trace.max(f64::MIN_POSITIVE) {
            return Err(Error::ExcessiveClipping { clipped, trace });
        }
        Ok(Self {
            mean: ms.mean,
            cov_root,
        })
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let eps = standard_normal_vec(rng, self.mean.len());
        &self.mean + &self.cov_root * eps
    }
}

/// Flatten parallel per-row draws into an `n × width` matrix.
fn rows_to_matrix(n: usize, width: usize, rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    DMatrix::from_row_slice(n, width, &flat)
}

/// `n` i.i.d. latent draws `z = μ + Lε` as an `n × p` matrix.
pub fn sample_latent(params: &GenModelParams, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be ≥ 1".into()));
    }
    let sampler = RowSampler::new(params)?;
    let rows = par::map_indexed(n, |i| {
        let mut rng = substream(seed, Role::Latent, i as u64);
        sampler.latent(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    Ok(rows_to_matrix(n, params.p(), rows))
}

/// `n` i.i.d. model draws `x = W·σ_ℓ(Fz + b)` as an `n × d` matrix.
pub fn generate(params: &GenModelParams, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be ≥ 1".into()));
    }
    let sampler = RowSampler::new(params)?;
    let rows = par::map_indexed(n, |i| {
        let mut rng = substream(seed, Role::Latent, i as u64);
        sampler.draw(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    Ok(rows_to_matrix(n, params.d(), rows))
}

/// `n` i.i.d. draws from `N(mean, cov)` with the exact model mean and
/// covariance, as an `n × d` matrix.
pub fn gaussian_equivalent(params: &GenModelParams, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be ≥ 1".into()));
    }
    let sampler = EquivalentSampler::new(params)?;
    let rows = par::map_indexed(n, |i| {
        let mut rng = substream(seed, Role::GaussEquiv, i as u64);
        sampler.draw(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    Ok(rows_to_matrix(n, params.d(), rows))
}

/// A labelled sample: `n` feature rows in ℝᵈ with labels in {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>, // row-major n × dim
    labels: Vec<f64>,
}

impl Dataset {
    fn from_classes(dim: usize, class_rows: Vec<(Vec<f64>, f64)>, perm: &[usize]) -> Self {
        let mut features = Vec::with_capacity(class_rows.len() * dim);
        let mut labels = Vec::with_capacity(class_rows.len());
        for &src in perm {
            let (row, label) = &class_rows[src];
            features.extend_from_slice(row);
            labels.push(*label);
        }
        Self {
            dim,
            features,
            labels,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// All values of feature coordinate `j` whose row has the given label.
    pub fn column_where(&self, j: usize, label: f64) -> Vec<f64> {
        (0..self.n())
            .filter(|&i| self.labels[i] == label)
            .map(|i| self.row(i)[j])
            .collect()
    }

    /// CSV with header `x0,…,x{d−1},label`; numbers in shortest
    /// round-trip decimal form, so output is byte-stable.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for j in 0..self.dim {
            write!(out, "{}x{}", if j == 0 { "" } else { "," }, j)?;
        }
        writeln!(out, ",label")?;
        for i in 0..self.n() {
            for (j, v) in self.row(i).iter().enumerate() {
                write!(out, "{}{}", if j == 0 { "" } else { "," }, v)?;
            }
            writeln!(out, ",{}", self.labels[i])?;
        }
        Ok(())
    }
}

fn fisher_yates(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

fn negative_rows(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    par::map_indexed(n, |i| {
        let mut rng = substream(seed, Role::ClassNeg, i as u64);
        (0..d).map(|_| rng.sample(StandardNormal)).collect()
    })
}

/// Balanced training set: `n_per_class` standard-Gaussian rows (label −1)
/// and `n_per_class` model rows (label +1), deterministically shuffled.
pub fn build_train_dataset(
    params: &GenModelParams,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidParameter(
            "per-class count must be ≥ 1".into(),
        ));
    }
    let d = params.d();
    let neg = negative_rows(d, n_per_class, seed);
    let sampler = RowSampler::new(params)?;
    let pos = par::map_indexed(n_per_class, |i| {
        let mut rng = substream(seed, Role::Latent, i as u64);
        sampler.draw(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    let rows: Vec<(Vec<f64>, f64)> = neg
        .into_iter()
        .map(|r| (r, -1.0))
        .chain(pos.into_iter().map(|r| (r, 1.0)))
        .collect();
    let perm = fisher_yates(rows.len(), &mut substream(seed, Role::Shuffle, 0));
    Ok(Dataset::from_classes(d, rows, &perm))
}

/// The two evaluation sets of one experiment: non-Gaussian (class +1 from
/// [`generate`]) and Gaussian-equivalent (class +1 from
/// [`gaussian_equivalent`]). Both share bit-identical class −1 rows and the
/// identical shuffle, so they differ only in the +1 class law.
pub fn build_eval_pair(
    params: &GenModelParams,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if n_test == 0 {
        return Err(Error::InvalidParameter(
            "per-class count must be ≥ 1".into(),
        ));
    }
    let d = params.d();
    let neg = negative_rows(d, n_test, seed);
    let row_sampler = RowSampler::new(params)?;
    let pos_model = par::map_indexed(n_test, |i| {
        let mut rng = substream(seed, Role::Latent, i as u64);
        row_sampler.draw(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    let equiv_sampler = EquivalentSampler::new(params)?;
    let pos_equiv = par::map_indexed(n_test, |i| {
        let mut rng = substream(seed, Role::GaussEquiv, i as u64);
        equiv_sampler.draw(&mut rng).iter().copied().collect::<Vec<_>>()
    });
    let perm = fisher_yates(2 * n_test, &mut substream(seed, Role::Shuffle, 0));
    let with_pos = |pos: Vec<Vec<f64>>| {
        let rows: Vec<(Vec<f64>, f64)> = neg
            .iter()
            .cloned()
            .map(|r| (r, -1.0))
            .chain(pos.into_iter().map(|r| (r, 1.0)))
            .collect();
        Dataset::from_classes(d, rows, &perm)
    };
    Ok((with_pos(pos_model), with_pos(pos_equiv)))
}

/// Uniformly random orthogonal `p × p` matrix: QR of a Gaussian matrix with
/// the sign convention fixed by the diagonal of R (Haar-distributed).
pub fn random_orthogonal(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..p {
        if r_diag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(c: &[f64]) -> HermiteSeries {
        HermiteSeries::new(c.to_vec()).unwrap()
    }

    fn simple_params(dim: usize, coeffs: &[f64]) -> GenModelParams {
        GenModelParams::build(
            dim,
            dim,
            dim,
            MatrixSpec::Identity,
            MatrixSpec::Identity,
            None,
            None,
            MatrixSpec::Identity,
            series(coeffs),
        )
        .unwrap()
    }

    #[test]
    fn params_json_with_shorthand_and_defaults() {
        let json = r#"{
            "d": 2, "k": 2, "p": 3,
            "W": "identity",
            "F": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            "Sigma": "identity",
            "series": {"degree": 1, "coeffs": [0.0, 1.0]}
        }"#;
        let p: GenModelParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.d(), 2);
        assert_eq!(p.b(), &DVector::zeros(2));
        assert_eq!(p.mu(), &DVector::zeros(3));
        assert_eq!(p.w(), &DMatrix::identity(2, 2));

        let round: GenModelParams =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn params_validation_rejects_bad_inputs() {
        // identity W with d ≠ k
        let json = r#"{"d":2,"k":3,"p":3,"W":"identity","F":"identity","Sigma":"identity",
                       "series":{"degree":0,"coeffs":[0.1]}}"#;
        assert!(serde_json::from_str::<GenModelParams>(json).is_err());

        // asymmetric Sigma
        let bad_sigma = GenModelParams::build(
            1,
            1,
            2,
            MatrixSpec::Identity,
            MatrixSpec::Dense(vec![vec![1.0, 0.0]]),
            None,
            None,
            MatrixSpec::Dense(vec![vec![1.0, 0.5], vec![0.0, 1.0]]),
            series(&[0.0, 1.0]),
        );
        assert!(matches!(bad_sigma, Err(Error::InvalidParameter(_))));

        // indefinite Sigma
        let indef = GenModelParams::build(
            1,
            1,
            2,
            MatrixSpec::Identity,
            MatrixSpec::Dense(vec![vec![1.0, 0.0]]),
            None,
            None,
            MatrixSpec::Dense(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            series(&[0.0, 1.0]),
        );
        assert!(matches!(indef, Err(Error::NotPositiveSemidefinite { .. })));

        // unknown matrix token
        assert!(serde_json::from_str::<MatrixSpec>(r#""diagonal""#).is_err());
    }

    #[test]
    fn latent_degenerate_covariance_returns_mu() {
        let p = GenModelParams::build(
            2,
            2,
            2,
            MatrixSpec::Identity,
            MatrixSpec::Identity,
            None,
            Some(vec![1.5, -2.0]),
            MatrixSpec::Dense(vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            series(&[0.0, 1.0]),
        )
        .unwrap();
        let z = sample_latent(&p, 5, 7).unwrap();
        for i in 0..5 {
            assert_eq!(z[(i, 0)], 1.5);
            assert_eq!(z[(i, 1)], -2.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = simple_params(3, &[0.4, 0.5, 0.2, 0.2]);
        assert_eq!(generate(&p, 16, 42).unwrap(), generate(&p, 16, 42).unwrap());
        assert_ne!(generate(&p, 16, 42).unwrap(), generate(&p, 16, 43).unwrap());
        assert_eq!(
            gaussian_equivalent(&p, 16, 42).unwrap(),
            gaussian_equivalent(&p, 16, 42).unwrap()
        );
        assert_eq!(
            sample_latent(&p, 16, 9).unwrap(),
            sample_latent(&p, 16, 9).unwrap()
        );
    }

    #[test]
    fn constant_latent_gives_constant_rows() {
        let w = MatrixSpec::Dense(vec![vec![1.0, 2.0], vec![0.0, -1.0]]);
        let p = GenModelParams::build(
            2,
            2,
            2,
            w,
            MatrixSpec::Identity,
            None,
            None,
            MatrixSpec::Dense(vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            series(&[0.4, 0.5, 0.2, 0.2]),
        )
        .unwrap();
        let x = generate(&p, 4, 11).unwrap();
        let s0 = p.series().eval(0.0); // = 0.4 − 0.2 = 0.2
        for i in 0..4 {
            assert_abs_diff_eq!(x[(i, 0)], 3.0 * s0, epsilon = 1e-15);
            assert_abs_diff_eq!(x[(i, 1)], -s0, epsilon = 1e-15);
        }
    }

    #[test]
    fn output_shape_matches_dimensions() {
        let p = simple_params(128, &[0.4, 0.5, 0.0, 0.2]);
        let x = generate(&p, 3, 1).unwrap();
        assert_eq!((x.nrows(), x.ncols()), (3, 128));
        let g = gaussian_equivalent(&p, 1, 1).unwrap();
        assert_eq!((g.nrows(), g.ncols()), (1, 128));
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_series_equivalent_is_exact_mean() {
        // cov = 0 ⇒ every equivalent-Gaussian row is exactly the mean.
        let p = simple_params(2, &[0.7]);
        let g = gaussian_equivalent(&p, 3, 5).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(g[(i, 0)], 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(g[(i, 1)], 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn train_dataset_is_balanced_and_deterministic() {
        let p = simple_params(3, &[0.4, 0.5, 0.2, 0.2]);
        let ds = build_train_dataset(&p, 100, 3).unwrap();
        assert_eq!(ds.n(), 200);
        assert_eq!(ds.dim(), 3);
        let pos = ds.labels().iter().filter(|&&l| l == 1.0).count();
        let neg = ds.labels().iter().filter(|&&l| l == -1.0).count();
        assert_eq!((pos, neg), (100, 100));
        assert_eq!(ds, build_train_dataset(&p, 100, 3).unwrap());
        assert_ne!(ds, build_train_dataset(&p, 100, 4).unwrap());
    }

    #[test]
    fn eval_pair_shares_negatives_and_shuffle() {
        let p = simple_params(3, &[0.4, 0.5, 0.2, 0.2]);
        let (a, b) = build_eval_pair(&p, 50, 9).unwrap();
        assert_eq!(a.n(), 100);
        assert_eq!(a.labels(), b.labels()); // identical shuffle
        let mut pos_rows_differ = 0;
        for i in 0..a.n() {
            if a.label(i) == -1.0 {
                assert_eq!(a.row(i), b.row(i)); // bit-identical negatives
            } else if a.row(i) != b.row(i) {
                pos_rows_differ += 1;
            }
        }
        assert!(pos_rows_differ > 45, "positive classes should differ in law");
        // Determinism of the whole pair.
        let (a2, b2) = build_eval_pair(&p, 50, 9).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }

    #[test]
    fn csv_export_is_stable() {
        let p = GenModelParams::build(
            2,
            2,
            2,
            MatrixSpec::Identity,
            MatrixSpec::Identity,
            None,
            None,
            MatrixSpec::Dense(vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            series(&[0.5]),
        )
        .unwrap();
        let ds = build_train_dataset(&p, 2, 1).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x0,x1,label"));
        assert_eq!(text.lines().count(), 5);
        // +1 rows are the constant σ(0) = 0.5.
        assert!(text.lines().skip(1).any(|l| l == "0.5,0.5,1"));
        let mut buf2 = Vec::new();
        ds.write_csv(&mut buf2).unwrap();
        assert_eq!(text.as_bytes(), buf2.as_slice());
    }

    #[test]
    fn random_orthogonal_is_orthogonal_and_deterministic() {
        let mut rng = substream(7, Role::Template, 0);
        let q = random_orthogonal(8, &mut rng);
        let qtq = q.transpose() * &q;
        let defect = (&qtq - DMatrix::identity(8, 8)).abs().max();
        assert!(defect < 1e-12, "QᵀQ defect {defect}");
        let mut rng2 = substream(7, Role::Template, 0);
        assert_eq!(q, random_orthogonal(8, &mut rng2));
    }
}
