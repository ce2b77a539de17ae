//! Seeded synthetic ensembles with known spectral statistics.
//!
//! Power-law images are built in the Fourier domain: every non-DC
//! coefficient gets magnitude `|k|^(alpha/2)` and a uniform random phase, and
//! the real part of the inverse transform is kept. The expected annulus-mean
//! power then follows `|k|^alpha` up to a constant, chosen so that pixels
//! have unit expected variance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectrum::fft::Transform2d;
use crate::spectrum::signed_frequency;
use crate::tensorio::Tensor;

fn check(n: usize, count: usize) -> Result<()> {
    if n < crate::spectrum::MIN_SIDE {
        return Err(Error::shape(format!("image size {n} is below the minimum of 4")));
    }
    if count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(())
}

/// Magnitude scale giving unit expected pixel variance: the real part keeps
/// half of the power `sum |k|^alpha`, and the inverse divides by `n²`.
fn unit_variance_scale(n: usize, alpha: f64) -> f64 {
    let mut total = 0.0;
    for u in 0..n {
        let ky = signed_frequency(u, n) as f64;
        for v in 0..n {
            let kx = signed_frequency(v, n) as f64;
            let k2 = kx * kx + ky * ky;
            if k2 > 0.0 {
                total += k2.powf(alpha / 2.0);
            }
        }
    }
    (n * n) as f64 / (total / 2.0).sqrt()
}

fn power_law_image(n: usize, alpha: f64, transform: &Transform2d, rng: &mut impl Rng) -> Tensor {
    let scale = unit_variance_scale(n, alpha);
    let mut coeffs = Vec::with_capacity(n * n);
    for u in 0..n {
        let ky = signed_frequency(u, n) as f64;
        for v in 0..n {
            let kx = signed_frequency(v, n) as f64;
            let k = (kx * kx + ky * ky).sqrt();
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let magnitude = if k == 0.0 { 0.0 } else { scale * k.powf(alpha / 2.0) };
            coeffs.push(Complex64::from_polar(magnitude, phase));
        }
    }
    transform.inverse(&mut coeffs);
    let data = coeffs.iter().map(|c| c.re).collect();
    Tensor::new(vec![n, n], data).expect("finite synthetic image")
}

/// `count` images of size `n`×`n` whose spectra follow `|k|^alpha`.
pub fn power_law_ensemble(n: usize, alpha: f64, count: usize, seed: u64) -> Result<Vec<Tensor>> {
    check(n, count)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be finite, got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transform = Transform2d::new(n);
    Ok((0..count)
        .map(|_| power_law_image(n, alpha, &transform, &mut rng))
        .collect())
}

/// `count` images of i.i.d. standard normal pixels.
pub fn white_noise_ensemble(n: usize, count: usize, seed: u64) -> Result<Vec<Tensor>> {
    check(n, count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let data = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
            Tensor::new(vec![n, n], data).expect("finite noise")
        })
        .collect())
}
