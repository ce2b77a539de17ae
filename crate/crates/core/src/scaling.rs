//! Block-average pooling and the spectrum's invariance under it.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectrum::{default_fit_range, ensemble_spectrum, fit_power_law, PowerLawFit, RadialSpectrum};
use crate::tensorio::Tensor;

/// Non-overlapping `factor`×`factor` block means of a rank-2 tensor.
pub fn average_pool(t: &Tensor, factor: usize) -> Result<Tensor> {
    if t.rank() != 2 {
        return Err(Error::shape(format!("pooling needs a rank-2 tensor, got {:?}", t.shape())));
    }
    if factor < 2 {
        return Err(Error::InvalidArgument(format!("pooling factor must be >= 2, got {factor}")));
    }
    let (h, w) = (t.height(), t.width());
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::shape(format!("factor {factor} does not divide {h}x{w}")));
    }
    let (oh, ow) = (h / factor, w / factor);
    let mut out = vec![0.0; oh * ow];
    for i in 0..h {
        for j in 0..w {
            out[(i / factor) * ow + j / factor] += t.at(i, j);
        }
    }
    let area = (factor * factor) as f64;
    for v in &mut out {
        *v /= area;
    }
    Tensor::new(vec![oh, ow], out)
}

/// Radius ranges used for the pre- and post-pooling fits. `None` picks the
/// upper half of the available radii.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitRanges {
    pub pre: Option<(usize, usize)>,
    pub post: Option<(usize, usize)>,
}

/// Spectra of an ensemble before and after pooling.
///
/// Both spectra are divided by the squared pixel count of their images, so
/// they describe power per unit image area and can be compared directly.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub factor: usize,
    pub pre: RadialSpectrum,
    pub post: RadialSpectrum,
    /// Mean `|ln P_pre(r) - ln P_post(r)|` over `1 <= r <= floor(k_max_post / 2)`.
    pub low_freq_log_gap: f64,
    pub alpha_pre: PowerLawFit,
    pub alpha_post: PowerLawFit,
    /// `factor^(2 + alpha_pre)`: how much the correlation length is expected
    /// to shrink when pooling by `factor`.
    pub predicted_corr_factor: f64,
}

struct Table<'a>(&'a RadialSpectrum);

impl Serialize for Table<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RadialSpectrum", 3)?;
        s.serialize_field("k", &self.0.bins)?;
        s.serialize_field("power", &self.0.power)?;
        s.serialize_field("count", &self.0.counts)?;
        s.end()
    }
}

impl Serialize for InvarianceReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("InvarianceReport", 7)?;
        s.serialize_field("factor", &self.factor)?;
        s.serialize_field("pre", &Table(&self.pre))?;
        s.serialize_field("post", &Table(&self.post))?;
        s.serialize_field("low_freq_log_gap", &self.low_freq_log_gap)?;
        s.serialize_field("alpha_pre", &self.alpha_pre)?;
        s.serialize_field("alpha_post", &self.alpha_post)?;
        s.serialize_field("predicted_corr_factor", &self.predicted_corr_factor)?;
        s.end()
    }
}

/// Fails when every item is constant: such an ensemble has no power away
/// from DC and no exponent to fit.
pub(crate) fn ensure_structure(items: &[Tensor]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mean_var = items.iter().map(Tensor::variance).sum::<f64>() / items.len() as f64;
    if mean_var < 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "ensemble has no power away from DC (mean variance {mean_var:e})"
        )));
    }
    Ok(())
}

fn fit_in(s: &RadialSpectrum, range: Option<(usize, usize)>) -> Result<PowerLawFit> {
    let (lo, hi) = range.unwrap_or_else(|| default_fit_range(s));
    fit_power_law(s, lo, hi)
}

pub fn pooling_invariance_report(items: &[Tensor], factor: usize, ranges: FitRanges) -> Result<InvarianceReport> {
    ensure_structure(items)?;
    let pooled = items
        .iter()
        .map(|t| average_pool(t, factor))
        .collect::<Result<Vec<_>>>()?;
    let area = |t: &Tensor| {
        let px = (t.height() * t.width()) as f64;
        1.0 / (px * px)
    };
    let pre = ensemble_spectrum(items, false)?.scaled(area(&items[0]));
    let post = ensemble_spectrum(&pooled, false)?.scaled(area(&pooled[0]));

    let shared = post.k_max() / 2;
    let gaps: Vec<f64> = (1..=shared)
        .filter_map(|r| match (pre.power_at(r), post.power_at(r)) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a.ln() - b.ln()).abs()),
            _ => None,
        })
        .collect();
    if gaps.is_empty() {
        return Err(Error::InsufficientData(
            "no shared low-frequency radii with positive power".into(),
        ));
    }
    let low_freq_log_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;

    let alpha_pre = fit_in(&pre, ranges.pre)?;
    let alpha_post = fit_in(&post, ranges.post)?;
    Ok(InvarianceReport {
        factor,
        predicted_corr_factor: (factor as f64).powf(2.0 + alpha_pre.alpha),
        pre,
        post,
        low_freq_log_gap,
        alpha_pre,
        alpha_post,
    })
}
