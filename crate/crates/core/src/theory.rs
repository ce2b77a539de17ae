//! How a 3×3 convolution reshapes a power spectrum.
//!
//! A periodic convolution multiplies every Fourier coefficient by the
//! kernel's transform, so each layer multiplies the power grid by
//! `|W(k)|²` and adds `ln |W(k)|²` to the log-power. Stacking `d` identical
//! layers adds `d` times that amount, which is what [`depth_simulation`]
//! measures on an ensemble.
//!
//! Kernel offsets are `(dx, dy)` with `dx` along columns and `dy` along rows,
//! both in `{-1, 0, 1}`, centre at `(0, 0)`. All boundaries are periodic.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scaling::ensure_structure;
use crate::spectrum::{
    bin_map, dft2, ensemble_power, fit_power_law, radial_average, ComplexGrid,
    PowerLawFit, RadialSpectrum, MIN_SIDE,
};
use crate::spectrum::fit::least_squares_line;
use crate::tensorio::Tensor;

/// A 3×3 kernel. Rows run `dy = -1, 0, 1`, columns `dx = -1, 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Kernel3x3 {
    rows: [[f64; 3]; 3],
}

impl TryFrom<[[f64; 3]; 3]> for Kernel3x3 {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Kernel3x3::new(rows)
    }
}

impl From<Kernel3x3> for [[f64; 3]; 3] {
    fn from(k: Kernel3x3) -> Self {
        k.rows
    }
}

impl Kernel3x3 {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("kernel weights must be finite".into()));
        }
        Ok(Kernel3x3 { rows })
    }

    pub fn identity() -> Self {
        let mut rows = [[0.0; 3]; 3];
        rows[1][1] = 1.0;
        Kernel3x3 { rows }
    }

    /// All nine weights equal to 1/9.
    pub fn normalized_box() -> Self {
        Kernel3x3 {
            rows: [[1.0 / 9.0; 3]; 3],
        }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.rows
    }

    /// Weight at offset `(dx, dy)`.
    pub fn at(&self, dx: i32, dy: i32) -> f64 {
        self.rows[(dy + 1) as usize][(dx + 1) as usize]
    }

    /// The kernel rotated by 90 degrees.
    pub fn rotated(&self) -> Self {
        let mut rows = [[0.0; 3]; 3];
        for dy in -1..=1 {
            for dx in -1..=1 {
                rows[(dx + 1) as usize][(1 - dy) as usize] = self.at(dx, dy);
            }
        }
        Kernel3x3 { rows }
    }

    fn offsets(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        (-1..=1).flat_map(move |dy| (-1..=1).map(move |dx| (dx, dy, self.at(dx, dy))))
    }
}

/// The three radial frequency modes of a 3×3 kernel: the centre weight, the
/// sum of the four axis neighbours and the sum of the four diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelModes {
    pub w00: f64,
    #[serde(rename = "W1")]
    pub w1: f64,
    #[serde(rename = "Wsqrt2")]
    pub w_sqrt2: f64,
}

impl KernelModes {
    /// Rotationally averaged transfer `w00 + e^{ik} W1 + e^{i sqrt(2) k} Wsqrt2`.
    pub fn transfer(&self, k: f64) -> Complex64 {
        Complex64::new(self.w00, 0.0)
            + Complex64::from_polar(self.w1, k)
            + Complex64::from_polar(self.w_sqrt2, SQRT_2 * k)
    }
}

pub fn kernel_radial_modes(k: &Kernel3x3) -> KernelModes {
    KernelModes {
        w00: k.at(0, 0),
        w1: k.at(0, 1) + k.at(0, -1) + k.at(1, 0) + k.at(-1, 0),
        w_sqrt2: k.at(1, 1) + k.at(1, -1) + k.at(-1, 1) + k.at(-1, -1),
    }
}

fn check_side(n: usize) -> Result<()> {
    if n < MIN_SIDE {
        return Err(Error::shape(format!("grid size must be at least {MIN_SIDE}, got {n}")));
    }
    Ok(())
}

/// Transform of the kernel on an `n`×`n` grid as the explicit nine-term sum
/// `sum_{dx,dy} w(dx,dy) exp(-i (kx dx + ky dy))`, with
/// `kx = 2 pi v / n` for column frequency `v` and `ky = 2 pi u / n` for row
/// frequency `u`.
pub fn kernel_spectrum_grid(k: &Kernel3x3, n: usize) -> Result<ComplexGrid> {
    check_side(n)?;
    let step = 2.0 * PI / n as f64;
    let mut values = Vec::with_capacity(n * n);
    for u in 0..n {
        let ky = step * u as f64;
        for v in 0..n {
            let kx = step * v as f64;
            let sum = k
                .offsets()
                .map(|(dx, dy, w)| Complex64::from_polar(w, -(kx * dx as f64 + ky * dy as f64)))
                .sum();
            values.push(sum);
        }
    }
    ComplexGrid::new(n, values)
}

/// The kernel zero-padded to `n`×`n`, centre at the origin, negative
/// offsets wrapped to the far edge.
pub fn zero_padded_kernel(k: &Kernel3x3, n: usize) -> Result<Tensor> {
    check_side(n)?;
    let mut data = vec![0.0; n * n];
    for (dx, dy, w) in k.offsets() {
        let row = (dy + n as i32) as usize % n;
        let col = (dx + n as i32) as usize % n;
        data[row * n + col] = w;
    }
    Tensor::new(vec![n, n], data)
}

/// The kernel transform computed numerically, by running [`dft2`] on the
/// zero-padded kernel.
pub fn kernel_spectrum_zero_padded(k: &Kernel3x3, n: usize) -> Result<ComplexGrid> {
    dft2(&zero_padded_kernel(k, n)?)
}

/// Per-layer power gain `|W(k)|²` on the grid.
pub fn kernel_power_gain(k: &Kernel3x3, n: usize) -> Result<Tensor> {
    let g = kernel_spectrum_grid(k, n)?;
    let data = g.values().iter().map(|c| c.norm_sqr()).collect();
    Tensor::new(vec![n, n], data)
}

/// How an integer bin radius `r` becomes the `|k|` inside the cosine terms
/// of [`predicted_log_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialUnits {
    /// `|k| = r`, the bin index itself.
    Radius,
    /// `|k| = 2 pi r / n`, radians per sample on an `n`×`n` grid. This is the
    /// unit in which the kernel offsets enter the transform.
    GridRadians { n: usize },
}

impl RadialUnits {
    pub fn frequency(self, r: usize) -> f64 {
        match self {
            RadialUnits::Radius => r as f64,
            RadialUnits::GridRadians { n } => 2.0 * PI * r as f64 / n as f64,
        }
    }
}

/// Predicted spectrum after one layer:
///
/// `r * [ (w00² + W1² + Wsqrt2²) + W1 Wsqrt2 cos((1 - sqrt 2) k)
///        + w00 W1 cos(k) + w00 Wsqrt2 cos(k / sqrt 2) ] * input[r]`
///
/// where `k` is the bin radius converted by `units`. The leading `r` is the
/// polar Jacobian. The input is expected to be an annulus-mean spectrum.
pub fn predicted_log_power(m: &KernelModes, input: &RadialSpectrum, units: RadialUnits) -> RadialSpectrum {
    let base = m.w00 * m.w00 + m.w1 * m.w1 + m.w_sqrt2 * m.w_sqrt2;
    let power = input
        .bins
        .iter()
        .zip(&input.power)
        .map(|(&r, &p)| {
            let k = units.frequency(r);
            let gain = base
                + m.w1 * m.w_sqrt2 * ((1.0 - SQRT_2) * k).cos()
                + m.w00 * m.w1 * k.cos()
                + m.w00 * m.w_sqrt2 * (k / SQRT_2).cos();
            r as f64 * gain * p
        })
        .collect();
    RadialSpectrum {
        bins: input.bins.clone(),
        power,
        counts: input.counts.clone(),
        jacobian_applied: true,
    }
}

/// Periodic 3×3 convolution: `g(i, j) = sum w(dx, dy) f(i - dy, j - dx)`.
pub fn convolve_periodic(t: &Tensor, k: &Kernel3x3) -> Result<Tensor> {
    let n = t.square_side()?;
    check_side(n)?;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (dx, dy, w) in k.offsets() {
                if w == 0.0 {
                    continue;
                }
                let si = (i + n).wrapping_add_signed(-dy as isize) % n;
                let sj = (j + n).wrapping_add_signed(-dx as isize) % n;
                acc += w * t.at(si, sj);
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::new(vec![n, n], out)
}

/// Spectra of an ensemble pushed through `0..=depth` identical linear layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthReport {
    pub depths: Vec<usize>,
    pub fits: Vec<PowerLawFit>,
    /// Annulus-mean ensemble spectrum at each depth.
    pub spectra: Vec<RadialSpectrum>,
    /// Mean added log-power per layer, averaged over all layers.
    pub per_layer_log_delta: f64,
    /// Added log-power for each layer `d -> d + 1`, averaged over grid
    /// frequencies inside the fit range.
    pub layer_log_deltas: Vec<f64>,
    pub linear_r2: f64,
    /// Set when the fitted exponents do not vary with depth; `linear_r2` is
    /// then reported as 1.
    pub degenerate: bool,
}

impl DepthReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.alpha).collect()
    }
}

const DEPTH_NOTE: &str = "linear periodic convolutions only: no nonlinearity or normalization between layers";

impl Serialize for DepthReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (k_min, k_max) = self.fits.first().map_or((0, 0), |f| (f.k_min, f.k_max));
        let mut s = serializer.serialize_struct("DepthReport", 10)?;
        s.serialize_field("depths", &self.depths)?;
        s.serialize_field("alphas", &self.alphas())?;
        s.serialize_field("r2s", &self.fits.iter().map(|f| f.r2).collect::<Vec<_>>())?;
        s.serialize_field("per_layer_log_delta", &self.per_layer_log_delta)?;
        s.serialize_field("layer_log_deltas", &self.layer_log_deltas)?;
        s.serialize_field("linear_r2", &self.linear_r2)?;
        s.serialize_field("degenerate", &self.degenerate)?;
        s.serialize_field("k_min", &k_min)?;
        s.serialize_field("k_max", &k_max)?;
        s.serialize_field("note", DEPTH_NOTE)?;
        s.end()
    }
}

/// Cumulative relative gain below which the stacked layers push a frequency
/// into the round-off floor of the spatial convolution.
const SINGULAR_GAIN: f64 = 1e-20;

/// Default depth-simulation fit range, `[k_max/8, k_max/2]`. It stays below
/// `N/3`, where the box kernel's transfer crosses zero.
pub fn default_depth_fit_range(n: usize) -> (usize, usize) {
    let k_max = n / 2;
    ((k_max / 8).max(1), (k_max / 2).max(2))
}

/// Applies `kernel` up to `depth` times to every item and fits the ensemble
/// spectrum at each depth over `fit_range`
/// (default: [`default_depth_fit_range`]).
///
/// Fails with [`Error::SingularKernel`] when, at some grid frequency inside
/// the fit range, `depth` layers attenuate the power by more than `1e-20`
/// relative to the kernel's strongest frequency.
pub fn depth_simulation(
    items: &[Tensor],
    kernel: &Kernel3x3,
    depth: usize,
    fit_range: Option<(usize, usize)>,
) -> Result<DepthReport> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    ensure_structure(items)?;
    let n = items[0].square_side()?;
    check_side(n)?;
    let (lo, hi) = fit_range.unwrap_or_else(|| default_depth_fit_range(n));

    let bins = bin_map(n);
    let in_range = |b: &Option<usize>| b.is_some_and(|r| r >= lo && r <= hi);
    let gain = kernel_power_gain(kernel, n)?;
    let max_gain = gain.data().iter().cloned().fold(0.0, f64::max);
    if max_gain == 0.0 {
        return Err(Error::SingularKernel { radius: lo });
    }
    for (g, b) in gain.data().iter().zip(&bins) {
        if in_range(b) && (*g / max_gain).powi(depth as i32) <= SINGULAR_GAIN {
            return Err(Error::SingularKernel {
                radius: b.expect("in range"),
            });
        }
    }

    let mut current = items.to_vec();
    let mut grids = Vec::with_capacity(depth + 1);
    let mut spectra = Vec::with_capacity(depth + 1);
    let mut fits = Vec::with_capacity(depth + 1);
    for d in 0..=depth {
        if d > 0 {
            current = crate::spectrum::map_items(&current, |t| convolve_periodic(t, kernel))?;
        }
        let grid = ensemble_power(&current)?;
        let spectrum = radial_average(&grid, false)?;
        fits.push(fit_power_law(&spectrum, lo, hi)?);
        spectra.push(spectrum);
        grids.push(grid);
    }

    let layer_log_deltas: Vec<f64> = grids
        .windows(2)
        .map(|pair| {
            let (mut sum, mut count) = (0.0, 0usize);
            for ((a, b), bin) in pair[0].data().iter().zip(pair[1].data()).zip(&bins) {
                if in_range(bin) && *a > 0.0 && *b > 0.0 {
                    sum += b.ln() - a.ln();
                    count += 1;
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    let per_layer_log_delta = layer_log_deltas.iter().sum::<f64>() / layer_log_deltas.len() as f64;

    let depths: Vec<usize> = (0..=depth).collect();
    let alphas: Vec<f64> = fits.iter().map(|f| f.alpha).collect();
    let spread = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let degenerate = spread < 1e-12;
    let linear_r2 = if degenerate {
        1.0
    } else {
        let xs: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
        least_squares_line(&xs, &alphas).r2
    };

    Ok(DepthReport {
        depths,
        fits,
        spectra,
        per_layer_log_delta,
        layer_log_deltas,
        linear_r2,
        degenerate,
    })
}
