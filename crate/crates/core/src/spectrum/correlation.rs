use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_side, signed_frequency, Transform2d};
use crate::error::{Error, Result};
use crate::tensorio::Tensor;

/// Radially averaged periodic autocorrelation, radii `0..=N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCorrelation {
    pub radii: Vec<usize>,
    pub corr: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Parameters of `C(r) = c1 + c2 * r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
    pub residual: f64,
}

/// Periodic autocorrelation `C(d) = mean_p x(p) x(p + d)` computed through
/// the power grid and averaged over displacements with `round(|d|) == r`.
pub fn autocorrelation(t: &Tensor, subtract_mean: bool) -> Result<RadialCorrelation> {
    let n = t.square_side()?;
    check_side(n)?;
    let mean = if subtract_mean { t.mean() } else { 0.0 };
    let transform = Transform2d::new(n);
    let mut values: Vec<Complex64> = t
        .data()
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();
    transform.forward(&mut values);
    for v in &mut values {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    transform.inverse(&mut values);
    let scale = 1.0 / (n * n) as f64;
    let grid: Vec<f64> = values.iter().map(|c| c.re * scale).collect();
    Ok(radial_displacement_mean(&grid, n))
}

/// Averages a displacement-indexed grid (FFT order) over rings, including r = 0.
pub(crate) fn radial_displacement_mean(grid: &[f64], n: usize) -> RadialCorrelation {
    let r_max = n / 2;
    let mut sums = vec![0.0; r_max + 1];
    let mut counts = vec![0usize; r_max + 1];
    for u in 0..n {
        let dy = signed_frequency(u, n) as f64;
        for v in 0..n {
            let dx = signed_frequency(v, n) as f64;
            let r = (dx * dx + dy * dy).sqrt().round() as usize;
            if r <= r_max {
                sums[r] += grid[u * n + v];
                counts[r] += 1;
            }
        }
    }
    RadialCorrelation {
        radii: (0..=r_max).collect(),
        corr: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
        counts,
    }
}

const EXPONENT_STEPS: i32 = 400;

/// Fits `c1 + c2 * r^e` over `r_min <= r <= r_max`.
///
/// `e` is searched on the grid `-4.00, -3.99, ..., 0.00`; for each candidate
/// `c1` and `c2` come from linear least squares, and the candidate with the
/// smallest sum of squared residuals wins (earliest on ties).
pub fn fit_correlation(c: &RadialCorrelation, r_min: usize, r_max: usize) -> Result<CorrelationFit> {
    if r_min < 1 || r_min > r_max {
        return Err(Error::InvalidArgument(format!(
            "correlation fit range [{r_min}, {r_max}] needs 1 <= r_min <= r_max"
        )));
    }
    let (rs, ys): (Vec<f64>, Vec<f64>) = c
        .radii
        .iter()
        .zip(&c.corr)
        .filter(|(&r, _)| r >= r_min && r <= r_max)
        .map(|(&r, &y)| (r as f64, y))
        .unzip();
    if rs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} correlation samples in [{r_min}, {r_max}], need at least 4",
            rs.len()
        )));
    }
    let m = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / m;
    let var = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / m;
    if var < 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "correlation is flat over [{r_min}, {r_max}] (variance {var:e})"
        )));
    }

    let mut best: Option<CorrelationFit> = None;
    for step in 0..=EXPONENT_STEPS {
        let exponent = f64::from(step - EXPONENT_STEPS) / 100.0;
        let xs: Vec<f64> = rs.iter().map(|r| r.powf(exponent)).collect();
        let mx = xs.iter().sum::<f64>() / m;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        // r^0 is collinear with the constant term.
        if sxx <= 1e-24 {
            continue;
        }
        let c2 = sxy / sxx;
        let c1 = my - c2 * mx;
        let residual: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - c1 - c2 * x;
                e * e
            })
            .sum();
        if best.is_none_or(|b| residual < b.residual) {
            best = Some(CorrelationFit {
                c1,
                c2,
                exponent,
                residual,
            });
        }
    }
    best.ok_or_else(|| Error::DegenerateInput("no identifiable exponent in range".into()))
}
