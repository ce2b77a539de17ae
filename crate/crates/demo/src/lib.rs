//! Browser bindings: each export runs one experiment on a seeded synthetic
//! ensemble and returns JSON for the page to plot.

use serde::Serialize;
use spectral_stats::scaling::{pooling_invariance_report, FitRanges};
use spectral_stats::spectrum::{default_fit_range, ensemble_spectrum, fit_power_law, PowerLawFit, RadialSpectrum};
use spectral_stats::synth::power_law_ensemble;
use spectral_stats::theory::{depth_simulation, Kernel3x3};
use wasm_bindgen::prelude::*;

/// Keeps a slider from asking for more work than a page can do interactively.
const MAX_PIXELS: usize = 64 * 64 * 64;

#[derive(Serialize)]
struct Curve {
    label: String,
    /// `(ln k, ln P)` pairs.
    points: Vec<(f64, f64)>,
}

impl Curve {
    fn new(label: impl Into<String>, s: &RadialSpectrum) -> Self {
        Curve {
            label: label.into(),
            points: s.log_log(),
        }
    }
}

#[derive(Serialize)]
struct SpectrumView {
    curves: Vec<Curve>,
    fit: PowerLawFit,
}

#[derive(Serialize)]
struct DepthView {
    curves: Vec<Curve>,
    alphas: Vec<f64>,
    per_layer_log_delta: f64,
    linear_r2: f64,
}

#[derive(Serialize)]
struct PoolingView {
    curves: Vec<Curve>,
    alpha_pre: f64,
    alpha_post: f64,
    low_freq_log_gap: f64,
    predicted_corr_factor: f64,
}

fn ensemble(alpha: f64, size: usize, count: usize, seed: u64) -> Result<Vec<spectral_stats::Tensor>, String> {
    if size * size * count > MAX_PIXELS {
        return Err(format!("{count} images of {size}x{size} is too much for the demo"));
    }
    power_law_ensemble(size, alpha, count, seed).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Ensemble spectrum of synthetic `|k|^alpha` images with its high-frequency fit.
pub fn spectrum_json(alpha: f64, size: usize, count: usize, seed: u64) -> Result<String, String> {
    let items = ensemble(alpha, size, count, seed)?;
    let s = ensemble_spectrum(&items, false).map_err(|e| e.to_string())?;
    let (lo, hi) = default_fit_range(&s);
    let fit = fit_power_law(&s, lo, hi).map_err(|e| e.to_string())?;
    to_json(&SpectrumView {
        curves: vec![Curve::new("ensemble", &s)],
        fit,
    })
}

/// Spectra after 0..=depth applications of a named 3x3 kernel.
pub fn depth_json(alpha: f64, size: usize, count: usize, depth: usize, kernel: &str, seed: u64) -> Result<String, String> {
    let k = match kernel {
        "box" => Kernel3x3::normalized_box(),
        "identity" => Kernel3x3::identity(),
        "binomial" => Kernel3x3::new([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]].map(|r| r.map(|w| w / 16.0)))
            .map_err(|e| e.to_string())?,
        other => return Err(format!("unknown kernel '{other}'")),
    };
    let items = ensemble(alpha, size, count, seed)?;
    let report = depth_simulation(&items, &k, depth, None).map_err(|e| e.to_string())?;
    to_json(&DepthView {
        curves: report
            .depths
            .iter()
            .zip(&report.spectra)
            .map(|(d, s)| Curve::new(format!("depth {d}"), s))
            .collect(),
        alphas: report.alphas(),
        per_layer_log_delta: report.per_layer_log_delta,
        linear_r2: report.linear_r2,
    })
}

/// Spectra before and after average pooling by `factor`.
pub fn pooling_json(alpha: f64, size: usize, count: usize, factor: usize, seed: u64) -> Result<String, String> {
    let items = ensemble(alpha, size, count, seed)?;
    let r = pooling_invariance_report(&items, factor, FitRanges::default()).map_err(|e| e.to_string())?;
    to_json(&PoolingView {
        curves: vec![Curve::new("original", &r.pre), Curve::new(format!("pooled by {factor}"), &r.post)],
        alpha_pre: r.alpha_pre.alpha,
        alpha_post: r.alpha_post.alpha,
        low_freq_log_gap: r.low_freq_log_gap,
        predicted_corr_factor: r.predicted_corr_factor,
    })
}

#[wasm_bindgen]
pub fn spectrum(alpha: f64, size: usize, count: usize, seed: u32) -> Result<String, JsValue> {
    spectrum_json(alpha, size, count, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn depth(alpha: f64, size: usize, count: usize, depth: usize, kernel: &str, seed: u32) -> Result<String, JsValue> {
    depth_json(alpha, size, count, depth, kernel, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pooling(alpha: f64, size: usize, count: usize, factor: usize, seed: u32) -> Result<String, JsValue> {
    pooling_json(alpha, size, count, factor, seed.into()).map_err(|e| JsValue::from_str(&e))
}
