//! Brute-force reference computations shared by the integration tests.
//!
//! Everything here is written directly from the defining sums and does not
//! call into the library's transform or binning code.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_stats::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(n: usize, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// O(N⁴) forward DFT: `F(u, v) = sum_{y,x} f(y, x) exp(-2 pi i (u y + v x) / N)`.
pub fn brute_dft(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..n {
                for x in 0..n {
                    let phase = -2.0 * PI * (((u * y + v * x) % n) as f64) / n as f64;
                    acc += values[y * n + x] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            out.push(acc);
        }
    }
    out
}

fn signed(i: usize, n: usize) -> i64 {
    // FFT order: 0, 1, ..., then the negative half.
    if 2 * i < n + n % 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Groups grid points by `round(|k|)` and averages, keeping radii in `lo..=hi`.
pub fn brute_radial(values: &[f64], n: usize, lo: usize, hi: usize) -> BTreeMap<usize, (f64, usize)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for u in 0..n {
        for v in 0..n {
            let (ky, kx) = (signed(u, n) as f64, signed(v, n) as f64);
            let r = (kx * kx + ky * ky).sqrt().round() as usize;
            if r >= lo && r <= hi {
                let e = acc.entry(r).or_insert((0.0, 0));
                e.0 += values[u * n + v];
                e.1 += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(r, (s, c))| (r, (s / c as f64, c)))
        .collect()
}

/// Direct periodic correlation `C(dy, dx) = mean_p x(p) x(p + d)`.
pub fn brute_correlation_grid(t: &Tensor, subtract_mean: bool) -> Vec<f64> {
    let n = t.height();
    let mean = if subtract_mean { t.data().iter().sum::<f64>() / (n * n) as f64 } else { 0.0 };
    let mut out = vec![0.0; n * n];
    for dy in 0..n {
        for dx in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                for x in 0..n {
                    acc += (t.at(y, x) - mean) * (t.at((y + dy) % n, (x + dx) % n) - mean);
                }
            }
            out[dy * n + dx] = acc / (n * n) as f64;
        }
    }
    out
}

/// Direct periodic convolution with a 3×3 kernel given as rows `dy = -1..=1`.
pub fn brute_convolve(t: &Tensor, rows: [[f64; 3]; 3]) -> Vec<f64> {
    let n = t.height() as i64;
    let mut out = vec![0.0; (n * n) as usize];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (r, row) in rows.iter().enumerate() {
                for (c, w) in row.iter().enumerate() {
                    let (dy, dx) = (r as i64 - 1, c as i64 - 1);
                    let si = (i - dy).rem_euclid(n) as usize;
                    let sj = (j - dx).rem_euclid(n) as usize;
                    acc += w * t.at(si, sj);
                }
            }
            out[(i * n + j) as usize] = acc;
        }
    }
    out
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
