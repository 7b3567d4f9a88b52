//! Two-layer ReLU network `f(x) = Σⱼ aⱼ·max(0, Vⱼ·x + uⱼ)` with squared
//! error `L = (f(x) − y)²` and its exact gradient.
//!
//! The first-layer weights are stored row-major so the per-unit dot products
//! in the training hot loop run over contiguous slices. The ReLU subgradient
//! at 0 is taken as 0 (a unit sitting exactly on its kink does not move).

use crate::error::{Error, Result};
use crate::rng::{substream, Role};
use rand::Rng;
use rand_distr::StandardNormal;

/// Width-h network on d-dimensional inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    d: usize,
    h: usize,
    /// First-layer weights, row-major h×d (row j = unit j).
    v: Vec<f64>,
    /// First-layer biases, length h.
    u: Vec<f64>,
    /// Second-layer weights, length h.
    a: Vec<f64>,
}

/// Gradient of the squared error, same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradient {
    pub dv: Vec<f64>,
    pub du: Vec<f64>,
    pub da: Vec<f64>,
}

/// Fresh network: `V ~ N(0, init_scale²/d)`, `a ~ N(0, init_scale²/h)`,
/// `u = 0`, all draws from one dedicated substream of `seed`.
pub fn init_net(d: usize, h: usize, init_scale: f64, seed: u64) -> Result<TwoLayerNet> {
    if d == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "network dimensions must be positive, got d={d}, h={h}"
        )));
    }
    if !init_scale.is_finite() || init_scale < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "init_scale must be finite and ≥ 0, got {init_scale}"
        )));
    }
    let mut rng = substream(seed, Role::NetInit, 0);
    let sv = init_scale / (d as f64).sqrt();
    let sa = init_scale / (h as f64).sqrt();
    let mut draw = |s: f64| -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        s * g
    };
    let v: Vec<f64> = (0..h * d).map(|_| draw(sv)).collect();
    let a: Vec<f64> = (0..h).map(|_| draw(sa)).collect();
    Ok(TwoLayerNet {
        d,
        h,
        v,
        u: vec![0.0; h],
        a,
    })
}

impl TwoLayerNet {
    /// Build from explicit parameters (row-major `v` of length h·d).
    pub fn from_parts(d: usize, h: usize, v: Vec<f64>, u: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if v.len() != h * d || u.len() != h || a.len() != h {
            return Err(Error::InvalidParameter(format!(
                "parameter shapes ({}, {}, {}) do not match d={d}, h={h}",
                v.len(),
                u.len(),
                a.len()
            )));
        }
        if v.iter().chain(&u).chain(&a).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite network parameter".into(),
            ));
        }
        Ok(Self { d, h, v, u, a })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Pre-activation of unit `j`: `Vⱼ·x + uⱼ`.
    #[inline]
    fn preactivation(&self, j: usize, x: &[f64]) -> f64 {
        let row = &self.v[j * self.d..(j + 1) * self.d];
        let mut z = self.u[j];
        for (w, xi) in row.iter().zip(x) {
            z += w * xi;
        }
        z
    }

    /// Hidden-layer pre-activations `Vⱼ·x + uⱼ` (before the ReLU).
    pub fn hidden_preactivations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.h).map(|j| self.preactivation(j, x)).collect()
    }

    /// Network output `f(x)`.
    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut f = 0.0;
        for j in 0..self.h {
            let z = self.preactivation(j, x);
            if z > 0.0 {
                f += self.a[j] * z;
            }
        }
        f
    }

    /// Squared error on one example.
    pub fn loss(&self, x: &[f64], y: f64) -> f64 {
        let e = self.forward(x) - y;
        e * e
    }

    /// Mean squared error over a labelled dataset, summed in row order.
    pub fn mean_loss(&self, data: &crate::model::Dataset) -> f64 {
        let losses =
            crate::par::map_indexed(data.n(), |i| self.loss(data.row(i), data.label(i)));
        losses.iter().sum::<f64>() / data.n() as f64
    }

    /// One in-place SGD step on `L = (f(x) − y)²` with rate `eta`; all
    /// partial derivatives are taken at the incoming parameters. Returns the
    /// residual `f(x) − y` evaluated before the update.
    pub fn sgd_step(&mut self, x: &[f64], y: f64, eta: f64) -> f64 {
        let f = self.forward(x);
        let err = f - y;
        let g = 2.0 * err * eta;
        for j in 0..self.h {
            let z = self.preactivation(j, x);
            if z <= 0.0 {
                continue;
            }
            let a_old = self.a[j];
            self.a[j] -= g * z;
            let gv = g * a_old;
            self.u[j] -= gv;
            let row = &mut self.v[j * self.d..(j + 1) * self.d];
            for (w, xi) in row.iter_mut().zip(x) {
                *w -= gv * xi;
            }
        }
        err
    }
}

/// Gradient of `L = (f(x) − y)²` with respect to `(V, u, a)`.
pub fn grad_mse(net: &TwoLayerNet, x: &[f64], y: f64) -> NetGradient {
    let f = net.forward(x);
    let r = 2.0 * (f - y);
    let (d, h) = (net.d, net.h);
    let mut dv = vec![0.0; h * d];
    let mut du = vec![0.0; h];
    let mut da = vec![0.0; h];
    for j in 0..h {
        let z = net.preactivation(j, x);
        if z <= 0.0 {
            continue;
        }
        da[j] = r * z;
        let gv = r * net.a[j];
        du[j] = gv;
        for (slot, xi) in dv[j * d..(j + 1) * d].iter_mut().zip(x) {
            *slot = gv * xi;
        }
    }
    NetGradient { dv, du, da }
}
