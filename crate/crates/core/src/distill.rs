//! Spectral distances between teacher and student feature maps.
//!
//! Feature maps are first brought to a common channel count `M`
//! ([`channel_reduce`]). Two losses then compare them in Fourier space:
//! the L1 distance between transforms ([`fourier_l1`]) and a
//! cross-power-spectrum mismatch ([`cps_loss`]). [`total_loss`] combines
//! them with externally computed cross-entropy and pixel-wise terms.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{dft2, radial_mean, RadialSpectrum, MIN_SIDE};
use crate::tensorio::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Teacher,
    Student,
}

/// An `M`×`H`×`W` feature map with square spatial dims.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFeatureMap {
    tensor: Tensor,
    role: Role,
}

impl ReducedFeatureMap {
    pub fn new(tensor: Tensor, role: Role) -> Result<Self> {
        if tensor.rank() != 3 {
            return Err(Error::shape(format!(
                "feature map must be rank 3 (M x H x W), got {:?}",
                tensor.shape()
            )));
        }
        if tensor.height() != tensor.width() {
            return Err(Error::shape(format!(
                "feature map must be square, got {}x{}",
                tensor.height(),
                tensor.width()
            )));
        }
        Ok(ReducedFeatureMap { tensor, role })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn channels(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn channel(&self, m: usize) -> Tensor {
        self.tensor.plane(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceMethod {
    /// Channel `m` is the mean of the `m`-th consecutive group of `C/M` channels.
    MeanGroup,
    /// Keep the first `M` channels.
    FirstM,
}

impl FromStr for ReduceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-group" => Ok(ReduceMethod::MeanGroup),
            "first-m" | "first-M" => Ok(ReduceMethod::FirstM),
            other => Err(Error::InvalidArgument(format!("unknown reduction '{other}'"))),
        }
    }
}

/// Fixed channel reduction from `C` to `m` channels.
pub fn channel_reduce(t: &Tensor, m: usize, method: ReduceMethod, role: Role) -> Result<ReducedFeatureMap> {
    if t.rank() != 3 {
        return Err(Error::shape(format!("expected C x H x W, got {:?}", t.shape())));
    }
    let c = t.shape()[0];
    if m == 0 || m > c {
        return Err(Error::shape(format!("cannot reduce {c} channels to {m}")));
    }
    let plane = t.height() * t.width();
    let data = match method {
        ReduceMethod::FirstM => t.data()[..m * plane].to_vec(),
        ReduceMethod::MeanGroup => {
            if !c.is_multiple_of(m) {
                return Err(Error::shape(format!(
                    "mean-group needs {m} to divide {c} channels"
                )));
            }
            let group = c / m;
            let mut out = vec![0.0; m * plane];
            for (ch, values) in t.data().chunks_exact(plane).enumerate() {
                let dst = &mut out[(ch / group) * plane..(ch / group + 1) * plane];
                for (d, v) in dst.iter_mut().zip(values) {
                    *d += v;
                }
            }
            let scale = 1.0 / group as f64;
            for v in &mut out {
                *v *= scale;
            }
            out
        }
    };
    let tensor = Tensor::with_dtype(vec![m, t.height(), t.width()], data, t.dtype())?;
    ReducedFeatureMap::new(tensor, role)
}

fn check_pair(t: &ReducedFeatureMap, s: &ReducedFeatureMap) -> Result<()> {
    if t.tensor.shape() != s.tensor.shape() {
        return Err(Error::shape(format!(
            "teacher {:?} and student {:?} differ in shape",
            t.tensor.shape(),
            s.tensor.shape()
        )));
    }
    if t.tensor.height() < MIN_SIDE {
        return Err(Error::shape(format!(
            "spatial size must be at least {MIN_SIDE}, got {}",
            t.tensor.height()
        )));
    }
    Ok(())
}

/// Mean over channels of `sum_k |F(T_m)(k) - F(S_m)(k)|`.
pub fn fourier_l1(t: &ReducedFeatureMap, s: &ReducedFeatureMap) -> Result<f64> {
    check_pair(t, s)?;
    let mut total = 0.0;
    for m in 0..t.channels() {
        let ft = dft2(&t.channel(m))?;
        let fs = dft2(&s.channel(m))?;
        total += ft
            .values()
            .iter()
            .zip(fs.values())
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>();
    }
    Ok(total / t.channels() as f64)
}

/// Annulus mean of `Re(conj(F(x)) F(y))`, DC excluded.
pub fn cross_power(x: &Tensor, y: &Tensor) -> Result<RadialSpectrum> {
    let n = x.square_side()?;
    if y.shape() != x.shape() {
        return Err(Error::shape(format!(
            "cross power needs equal shapes, got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let fx = dft2(x)?;
    let fy = dft2(y)?;
    Ok(cross_of(fx.values(), fy.values(), n))
}

fn cross_of(fx: &[Complex64], fy: &[Complex64], n: usize) -> RadialSpectrum {
    let values: Vec<f64> = fx.iter().zip(fy).map(|(a, b)| (a.conj() * b).re).collect();
    radial_mean(&values, n, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpsVariant {
    /// `1 - P_TS / (P_TT * P_SS + eps)`.
    Paper,
    /// `1 - P_TS / (sqrt(P_TT * P_SS) + eps)`; zero for identical inputs.
    Normalized,
}

impl fmt::Display for CpsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CpsVariant::Paper => "paper",
            CpsVariant::Normalized => "normalized",
        })
    }
}

impl FromStr for CpsVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(CpsVariant::Paper),
            "normalized" => Ok(CpsVariant::Normalized),
            other => Err(Error::InvalidArgument(format!("unknown cps variant '{other}'"))),
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Cross-power-spectrum loss, averaged over radii and then over channels.
pub fn cps_loss(t: &ReducedFeatureMap, s: &ReducedFeatureMap, variant: CpsVariant, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    check_pair(t, s)?;
    let n = t.tensor.height();
    let mut total = 0.0;
    for m in 0..t.channels() {
        let ft = dft2(&t.channel(m))?;
        let fs = dft2(&s.channel(m))?;
        let pts = cross_of(ft.values(), fs.values(), n);
        let ptt = cross_of(ft.values(), ft.values(), n);
        let pss = cross_of(fs.values(), fs.values(), n);
        let terms = pts
            .power
            .iter()
            .zip(&ptt.power)
            .zip(&pss.power)
            .map(|((&ts, &tt), &ss)| {
                let denom = match variant {
                    CpsVariant::Paper => tt * ss + epsilon,
                    CpsVariant::Normalized => (tt * ss).sqrt() + epsilon,
                };
                1.0 - ts / denom
            });
        total += terms.sum::<f64>() / pts.len() as f64;
    }
    Ok(total / t.channels() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LossWeights {
    /// Weights used for the CIFAR-100 experiments: `alpha = beta = 1e-4`,
    /// `gamma = 0.01`.
    pub const CIFAR: LossWeights = LossWeights {
        alpha: 1e-4,
        beta: 1e-4,
        gamma: 0.01,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l1_fourier: f64,
    pub cps: f64,
    pub ce: Option<f64>,
    pub overhaul: Option<f64>,
    pub total: f64,
    pub weights: LossWeights,
    pub variant: Option<CpsVariant>,
    pub epsilon: Option<f64>,
}

impl LossReport {
    /// Records how the CPS term was computed.
    pub fn with_cps_settings(mut self, variant: CpsVariant, epsilon: f64) -> Self {
        self.variant = Some(variant);
        self.epsilon = Some(epsilon);
        self
    }
}

/// `ce + alpha * overhaul + beta * l1 + gamma * cps`, absent terms counted as 0.
pub fn total_loss(ce: Option<f64>, overhaul: Option<f64>, l1: f64, cps: f64, weights: LossWeights) -> LossReport {
    let total = ce.unwrap_or(0.0)
        + weights.alpha * overhaul.unwrap_or(0.0)
        + weights.beta * l1
        + weights.gamma * cps;
    LossReport {
        l1_fourier: l1,
        cps,
        ce,
        overhaul,
        total,
        weights,
        variant: None,
        epsilon: None,
    }
}
