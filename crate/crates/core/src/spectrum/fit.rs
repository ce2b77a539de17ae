use serde::{Deserialize, Serialize};

use super::RadialSpectrum;
use crate::error::{Error, Result};

/// Least-squares line through `(ln k, ln P)` over a radius range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub log_amplitude: f64,
    pub r2: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Bins in range skipped because their power was not positive.
    #[serde(skip)]
    pub zero_bins_dropped: usize,
}

/// The upper half of the available radii, `[floor(k_max/2), k_max]`.
pub fn default_fit_range(s: &RadialSpectrum) -> (usize, usize) {
    let k_max = s.k_max();
    ((k_max / 2).max(1), k_max)
}

/// Ordinary least squares of `ln(power)` on `ln(r)` for `k_min <= r <= k_max`.
pub fn fit_power_law(s: &RadialSpectrum, k_min: usize, k_max: usize) -> Result<PowerLawFit> {
    if k_min < 1 || k_min >= k_max || k_max > s.k_max() {
        return Err(Error::InvalidArgument(format!(
            "fit range [{k_min}, {k_max}] must satisfy 1 <= k_min < k_max <= {}",
            s.k_max()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for (&r, &p) in s.bins.iter().zip(&s.power) {
        if r < k_min || r > k_max {
            continue;
        }
        if p > 0.0 {
            xs.push((r as f64).ln());
            ys.push(p.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} positive bins in [{k_min}, {k_max}], need at least 3",
            xs.len()
        )));
    }
    let line = least_squares_line(&xs, &ys);
    Ok(PowerLawFit {
        alpha: line.slope,
        log_amplitude: line.intercept,
        r2: line.r2,
        k_min,
        k_max,
        zero_bins_dropped: dropped,
    })
}

pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Simple linear regression. `r2` is 1 when `ys` has no spread.
pub(crate) fn least_squares_line(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Line {
        slope,
        intercept,
        r2,
    }
}
