//! 2D power spectra, rotational averaging, power-law fits and spatial
//! autocorrelation.
//!
//! Conventions used throughout the crate:
//!
//! * The forward transform is unnormalized, the inverse carries 1/N².
//! * Grids are stored in FFT order. Index `i` along an axis maps to the
//!   signed frequency `i` for `i < ceil(N/2)` and `i - N` otherwise, so
//!   frequencies cover `[-N/2, N/2)` for even `N`.
//! * Radial bin `r` holds every grid point with `round(|k|) == r`, for
//!   `1 <= r <= N/2`. DC and the corners beyond `N/2` are not binned.

mod correlation;
pub(crate) mod fft;
pub(crate) mod fit;

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorio::Tensor;
use fft::Transform2d;

pub use correlation::{autocorrelation, fit_correlation, CorrelationFit, RadialCorrelation};
pub use fit::{default_fit_range, fit_power_law, PowerLawFit};

/// Smallest side length the spectral routines accept.
pub const MIN_SIDE: usize = 4;

/// An N×N grid of complex Fourier coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    n: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(n: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::shape(format!(
                "{} values do not form a {n}x{n} grid",
                values.len()
            )));
        }
        Ok(ComplexGrid { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Coefficient at grid row `u`, column `v` (FFT order).
    pub fn at(&self, u: usize, v: usize) -> Complex64 {
        self.values[u * self.n + v]
    }

    /// Elementwise product, the Fourier-side form of circular convolution.
    pub fn hadamard(&self, other: &ComplexGrid) -> Result<ComplexGrid> {
        if self.n != other.n {
            return Err(Error::shape(format!(
                "grid sizes differ: {} vs {}",
                self.n, other.n
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ComplexGrid { n: self.n, values })
    }
}

/// Signed frequency of FFT-order index `i` on an axis of length `n`.
pub fn signed_frequency(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn check_side(n: usize) -> Result<()> {
    if n < MIN_SIDE {
        return Err(Error::shape(format!(
            "spatial size must be at least {MIN_SIDE}, got {n}"
        )));
    }
    Ok(())
}

/// Unnormalized forward 2D DFT of a square rank-2 tensor.
pub fn dft2(t: &Tensor) -> Result<ComplexGrid> {
    let n = t.square_side()?;
    check_side(n)?;
    let mut values: Vec<Complex64> = t.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Transform2d::new(n).forward(&mut values);
    Ok(ComplexGrid { n, values })
}

/// Inverse of [`dft2`], including the 1/N² factor.
pub fn idft2(g: &ComplexGrid) -> Vec<Complex64> {
    let mut values = g.values.clone();
    Transform2d::new(g.n).inverse(&mut values);
    values
}

/// Elementwise squared magnitude `|G(k)|²`.
pub fn power_grid(g: &ComplexGrid) -> Tensor {
    let data = g.values.iter().map(|c| c.norm_sqr()).collect();
    Tensor::new(vec![g.n, g.n], data).expect("power of a finite grid is finite")
}

/// Power grid of an image, optionally removing its mean first.
pub fn image_power(t: &Tensor, subtract_mean: bool) -> Result<Tensor> {
    if subtract_mean {
        let mean = t.mean();
        Ok(power_grid(&dft2(&t.map(|v| v - mean)?)?))
    } else {
        Ok(power_grid(&dft2(t)?))
    }
}

/// Rotationally averaged spectrum: one value per integer radius.
///
/// `power` holds annulus means. Spectra produced by the cross-power
/// routines may be negative; auto spectra never are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSpectrum {
    pub bins: Vec<usize>,
    pub power: Vec<f64>,
    pub counts: Vec<usize>,
    pub jacobian_applied: bool,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    k: usize,
    power: f64,
    count: usize,
}

impl RadialSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Largest radius present.
    pub fn k_max(&self) -> usize {
        self.bins.last().copied().unwrap_or(0)
    }

    /// Power at radius `r`, if binned.
    pub fn power_at(&self, r: usize) -> Option<f64> {
        self.bins.iter().position(|&b| b == r).map(|i| self.power[i])
    }

    /// Multiplies every bin by `factor`.
    pub fn scaled(&self, factor: f64) -> RadialSpectrum {
        RadialSpectrum {
            power: self.power.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }

    /// Writes `k,power,count` rows with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for ((&k, &power), &count) in self.bins.iter().zip(&self.power).zip(&self.counts) {
            w.serialize(CsvRow { k, power, count })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `k,power,count` table. The Jacobian flag is not stored in the
    /// table and comes back as `false`.
    pub fn read_csv<R: Read>(reader: R) -> Result<RadialSpectrum> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["k", "power", "count"] {
            return Err(Error::InvalidArgument(format!(
                "spectrum csv header must be k,power,count, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut s = RadialSpectrum {
            bins: Vec::new(),
            power: Vec::new(),
            counts: Vec::new(),
            jacobian_applied: false,
        };
        for row in r.deserialize() {
            let row: CsvRow = row?;
            if !row.power.is_finite() {
                return Err(Error::Data(format!("non-finite power at k={}", row.k)));
            }
            s.bins.push(row.k);
            s.power.push(row.power);
            s.counts.push(row.count);
        }
        Ok(s)
    }

    /// `(ln k, ln power)` pairs for log-log plotting; non-positive bins are skipped.
    pub fn log_log(&self) -> Vec<(f64, f64)> {
        self.bins
            .iter()
            .zip(&self.power)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&k, &p)| ((k as f64).ln(), p.ln()))
            .collect()
    }
}

/// Radial bin of every grid point (`None` for DC and the corners).
pub(crate) fn bin_map(n: usize) -> Vec<Option<usize>> {
    let k_max = n / 2;
    let mut map = Vec::with_capacity(n * n);
    for u in 0..n {
        let ky = signed_frequency(u, n) as f64;
        for v in 0..n {
            let kx = signed_frequency(v, n) as f64;
            let r = (kx * kx + ky * ky).sqrt().round() as usize;
            map.push((1..=k_max).contains(&r).then_some(r));
        }
    }
    map
}

/// Annulus mean of an arbitrary real grid in FFT order.
pub(crate) fn radial_mean(values: &[f64], n: usize, jacobian: bool) -> RadialSpectrum {
    let k_max = n / 2;
    let mut sums = vec![0.0; k_max + 1];
    let mut counts = vec![0usize; k_max + 1];
    for (value, bin) in values.iter().zip(bin_map(n)) {
        if let Some(r) = bin {
            sums[r] += value;
            counts[r] += 1;
        }
    }
    let bins: Vec<usize> = (1..=k_max).collect();
    let power = bins
        .iter()
        .map(|&r| {
            let mean = sums[r] / counts[r] as f64;
            if jacobian {
                mean * r as f64
            } else {
                mean
            }
        })
        .collect();
    RadialSpectrum {
        counts: counts[1..].to_vec(),
        bins,
        power,
        jacobian_applied: jacobian,
    }
}

/// Averages a square power grid over annuli of equal integer radius.
///
/// With `jacobian`, each annulus mean is multiplied by its radius.
pub fn radial_average(p: &Tensor, jacobian: bool) -> Result<RadialSpectrum> {
    let n = p.square_side()?;
    check_side(n)?;
    if let Some(v) = p.data().iter().find(|&&v| v < 0.0) {
        return Err(Error::Data(format!("power grid has negative value {v}")));
    }
    Ok(radial_mean(p.data(), n, jacobian))
}

/// Radial power spectrum of a single image.
pub fn image_spectrum(t: &Tensor, jacobian: bool, subtract_mean: bool) -> Result<RadialSpectrum> {
    radial_average(&image_power(t, subtract_mean)?, jacobian)
}

fn ensemble_side(items: &[Tensor]) -> Result<usize> {
    let first = items.first().ok_or(Error::EmptyEnsemble)?;
    let n = first.square_side()?;
    check_side(n)?;
    for (i, t) in items.iter().enumerate() {
        if t.shape() != first.shape() {
            return Err(Error::shape(format!(
                "ensemble item {i} has shape {:?}, expected {:?}",
                t.shape(),
                first.shape()
            )));
        }
    }
    Ok(n)
}

/// Computes `f` for every item, in parallel when enabled, keeping item order.
pub(crate) fn map_items<T, F>(items: &[Tensor], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Tensor) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Mean power grid of an ensemble of equally shaped square images.
///
/// Accumulation runs in item order, so repeated runs are bit-identical.
pub fn ensemble_power(items: &[Tensor]) -> Result<Tensor> {
    let n = ensemble_side(items)?;
    let grids = map_items(items, |t| image_power(t, false))?;
    let mut acc = vec![0.0; n * n];
    for g in &grids {
        for (a, v) in acc.iter_mut().zip(g.data()) {
            *a += v;
        }
    }
    let scale = 1.0 / items.len() as f64;
    for a in &mut acc {
        *a *= scale;
    }
    Tensor::new(vec![n, n], acc)
}

/// Mean radial spectrum of an ensemble of equally shaped square images.
pub fn ensemble_spectrum(items: &[Tensor], jacobian: bool) -> Result<RadialSpectrum> {
    ensemble_side(items)?;
    let spectra = map_items(items, |t| image_spectrum(t, jacobian, false))?;
    let mut out = spectra[0].clone();
    for s in &spectra[1..] {
        for (a, v) in out.power.iter_mut().zip(&s.power) {
            *a += v;
        }
    }
    let scale = 1.0 / items.len() as f64;
    for a in &mut out.power {
        *a *= scale;
    }
    Ok(out)
}
