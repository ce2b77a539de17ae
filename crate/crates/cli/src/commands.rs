use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use spectral_stats::distill::{
    channel_reduce, cps_loss, fourier_l1, total_loss, CpsVariant, LossWeights, ReduceMethod, Role,
};
use spectral_stats::scaling::{pooling_invariance_report, FitRanges};
use spectral_stats::spectrum::{
    autocorrelation, default_fit_range, ensemble_spectrum, fit_correlation, fit_power_law, radial_average,
    CorrelationFit, RadialCorrelation, RadialSpectrum,
};
use spectral_stats::synth::{power_law_ensemble, white_noise_ensemble};
use spectral_stats::tensorio::{read_tensor, write_npy, DatasetManifest, ItemKind, ManifestItem};
use spectral_stats::theory::{
    depth_simulation, kernel_power_gain, kernel_radial_modes, kernel_spectrum_grid, kernel_spectrum_zero_padded,
    predicted_log_power, Kernel3x3, KernelModes, RadialUnits,
};
use spectral_stats::Tensor;

use crate::io::{json_bytes, load_planes, plot_blocks, write_outputs};
use crate::{InputArgs, UsageError};

fn csv_bytes(s: &RadialSpectrum) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    s.write_csv(&mut bytes)?;
    Ok(bytes)
}

/// Output file plus an optional plot-data file.
fn write_with_plot(output: &Path, bytes: Vec<u8>, plot: Option<(&Path, Vec<u8>)>) -> Result<()> {
    let mut files = vec![(output, bytes)];
    files.extend(plot);
    write_outputs(&files)
}

pub fn spectrum(
    input: &InputArgs,
    output: &Path,
    jacobian: bool,
    subtract_mean: bool,
    plot_data: Option<&Path>,
) -> Result<()> {
    let mut planes = load_planes(input)?;
    if subtract_mean {
        planes = planes
            .iter()
            .map(|t| {
                let m = t.mean();
                t.map(|v| v - m)
            })
            .collect::<Result<_, _>>()?;
    }
    let s = ensemble_spectrum(&planes, jacobian)?;
    let plot = plot_data.map(|p| (p, plot_blocks(vec![("spectrum".into(), s.log_log())])));
    write_with_plot(output, csv_bytes(&s)?, plot)
}

pub fn fit(input: &Path, kmin: Option<usize>, kmax: Option<usize>, full_range: bool, output: &Path) -> Result<()> {
    let file = fs::File::open(input).with_context(|| format!("reading {}", input.display()))?;
    let s = RadialSpectrum::read_csv(file)?;
    if s.is_empty() {
        bail!("{} has no spectrum rows", input.display());
    }
    let (lo, hi) = if full_range {
        (1, s.k_max())
    } else {
        let (dlo, dhi) = default_fit_range(&s);
        (kmin.unwrap_or(dlo), kmax.unwrap_or(dhi))
    };
    let fit = fit_power_law(&s, lo, hi)?;
    if fit.zero_bins_dropped > 0 {
        eprintln!("warning: {} non-positive bins skipped", fit.zero_bins_dropped);
    }
    write_outputs(&[(output, json_bytes(&fit)?)])
}

#[derive(Serialize)]
struct CorrelationOutput {
    subtract_mean: bool,
    r_min: usize,
    r_max: usize,
    fit: CorrelationFit,
    correlation: RadialCorrelation,
}

pub fn correlation(
    input: &InputArgs,
    r_min: usize,
    r_max: Option<usize>,
    subtract_mean: bool,
    output: &Path,
    plot_data: Option<&Path>,
) -> Result<()> {
    let planes = load_planes(input)?;
    let mut mean: Option<RadialCorrelation> = None;
    for t in &planes {
        let c = autocorrelation(t, subtract_mean)?;
        match &mut mean {
            None => mean = Some(c),
            Some(m) => {
                if m.radii != c.radii {
                    bail!("inputs have different sizes");
                }
                for (a, b) in m.corr.iter_mut().zip(&c.corr) {
                    *a += b;
                }
            }
        }
    }
    let mut c = mean.expect("at least one plane");
    for v in &mut c.corr {
        *v /= planes.len() as f64;
    }
    let r_max = r_max.unwrap_or((planes[0].height() / 4).max(r_min + 3));
    let fit = fit_correlation(&c, r_min, r_max)?;
    let plot = plot_data.map(|p| {
        let points = c
            .radii
            .iter()
            .zip(&c.corr)
            .filter(|(&r, &v)| r > 0 && v > 0.0)
            .map(|(&r, &v)| ((r as f64).ln(), v.ln()))
            .collect();
        (p, plot_blocks(vec![("correlation".into(), points)]))
    });
    let out = CorrelationOutput {
        subtract_mean,
        r_min,
        r_max,
        fit,
        correlation: c,
    };
    write_with_plot(output, json_bytes(&out)?, plot)
}

pub fn pool_check(
    input: &InputArgs,
    factor: usize,
    ranges: FitRanges,
    output: &Path,
    plot_data: Option<&Path>,
) -> Result<()> {
    let planes = load_planes(input)?;
    let report = pooling_invariance_report(&planes, factor, ranges)?;
    let plot = plot_data.map(|p| {
        (
            p,
            plot_blocks(vec![
                ("before pooling".into(), report.pre.log_log()),
                (format!("after pooling by {factor}"), report.post.log_log()),
            ]),
        )
    });
    write_with_plot(output, json_bytes(&report)?, plot)
}

fn parse_kernel_json(text: &str, origin: &str) -> Result<Kernel3x3> {
    let rows: [[f64; 3]; 3] = serde_json::from_str(text)
        .map_err(|e| UsageError(format!("{origin} is not a 3x3 JSON array: {e}")))?;
    Ok(Kernel3x3::new(rows).map_err(|e| UsageError(e.to_string()))?)
}

/// Inline JSON if it looks like an array, otherwise a path to a JSON file.
fn kernel_from_weights(weights: &str) -> Result<Kernel3x3> {
    if weights.trim_start().starts_with('[') {
        parse_kernel_json(weights, "--weights")
    } else {
        kernel_from_file(Path::new(weights))
    }
}

fn kernel_from_file(path: &Path) -> Result<Kernel3x3> {
    let text = fs::read_to_string(path).with_context(|| format!("reading kernel {}", path.display()))?;
    parse_kernel_json(&text, &path.display().to_string())
}

#[derive(Serialize)]
struct KernelReport {
    size: usize,
    weights: Kernel3x3,
    modes: KernelModes,
    /// Largest difference between the nine-term transform and the FFT of the
    /// zero-padded kernel.
    dual_route_max_abs_diff: f64,
    /// `|transfer(2 pi r / N)|²` from the rotationally averaged modes.
    isotropic_gain: Vec<f64>,
    /// Jacobian-weighted gain predicted from the modes for a flat input.
    predicted_log_power: Vec<f64>,
}

pub fn kernel(
    weights: &str,
    size: usize,
    output: &Path,
    report: Option<&Path>,
    plot_data: Option<&Path>,
) -> Result<()> {
    let k = kernel_from_weights(weights)?;
    let gain = radial_average(&kernel_power_gain(&k, size)?, false)?;
    let mut files = vec![(output, csv_bytes(&gain)?)];
    if let Some(path) = report {
        let closed = kernel_spectrum_grid(&k, size)?;
        let padded = kernel_spectrum_zero_padded(&k, size)?;
        let diff = closed
            .values()
            .iter()
            .zip(padded.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let modes = kernel_radial_modes(&k);
        let units = RadialUnits::GridRadians { n: size };
        let flat = RadialSpectrum {
            power: vec![1.0; gain.len()],
            ..gain.clone()
        };
        let r = KernelReport {
            size,
            weights: k,
            modes,
            dual_route_max_abs_diff: diff,
            isotropic_gain: gain.bins.iter().map(|&r| modes.transfer(units.frequency(r)).norm_sqr()).collect(),
            predicted_log_power: predicted_log_power(&modes, &flat, units).power,
        };
        files.push((path, json_bytes(&r)?));
    }
    if let Some(path) = plot_data {
        files.push((path, plot_blocks(vec![("kernel power gain".into(), gain.log_log())])));
    }
    write_outputs(&files)
}

fn named_kernel(spec: &str) -> Result<Kernel3x3> {
    match spec {
        "box" => Ok(Kernel3x3::normalized_box()),
        "identity" => Ok(Kernel3x3::identity()),
        other => match other.strip_prefix("file:") {
            Some(path) => kernel_from_file(Path::new(path)),
            None => bail!(UsageError(format!(
                "--kernel must be box, identity or file:<path>, got '{other}'"
            ))),
        },
    }
}

pub fn depth_sim(
    input: &InputArgs,
    kernel: &str,
    depth: usize,
    range: Option<(usize, usize)>,
    output: &Path,
    plot_data: Option<&Path>,
) -> Result<()> {
    let k = named_kernel(kernel)?;
    let planes = load_planes(input)?;
    let report = depth_simulation(&planes, &k, depth, range)?;
    let plot = plot_data.map(|p| {
        let series = report
            .depths
            .iter()
            .zip(&report.spectra)
            .map(|(d, s)| (format!("depth {d}"), s.log_log()))
            .collect();
        (p, plot_blocks(series))
    });
    write_with_plot(output, json_bytes(&report)?, plot)
}

pub struct LossArgs<'a> {
    pub teacher: &'a Path,
    pub student: &'a Path,
    pub variant: CpsVariant,
    pub epsilon: f64,
    pub channels: Option<usize>,
    pub reduce: ReduceMethod,
    pub ce: Option<f64>,
    pub overhaul: Option<f64>,
    pub weights: LossWeights,
    pub output: &'a Path,
}

/// Splits a map into `C x H x W` samples: rank 2 is one channel, rank 4 is a batch.
fn samples(t: &Tensor) -> Result<Vec<Tensor>> {
    let (h, w) = (t.height(), t.width());
    Ok(match t.rank() {
        2 => vec![Tensor::new(vec![1, h, w], t.data().to_vec())?],
        3 => vec![t.clone()],
        _ => {
            let (b, c) = (t.shape()[0], t.shape()[1]);
            let len = c * h * w;
            (0..b)
                .map(|i| Tensor::new(vec![c, h, w], t.data()[i * len..(i + 1) * len].to_vec()))
                .collect::<Result<_, _>>()?
        }
    })
}

pub fn loss(args: LossArgs<'_>) -> Result<()> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        bail!(UsageError(format!("--epsilon must be positive, got {}", args.epsilon)));
    }
    let load = |p: &Path| read_tensor(p).with_context(|| format!("reading {}", p.display()));
    let teacher = samples(&load(args.teacher)?)?;
    let student = samples(&load(args.student)?)?;
    if teacher.len() != student.len() {
        bail!("teacher has {} samples, student has {}", teacher.len(), student.len());
    }
    let ct = teacher[0].shape()[0];
    let cs = student[0].shape()[0];
    let m = args.channels.unwrap_or(ct.min(cs));
    let (mut l1, mut cps) = (0.0, 0.0);
    for (t, s) in teacher.iter().zip(&student) {
        let t = channel_reduce(t, m, args.reduce, Role::Teacher)?;
        let s = channel_reduce(s, m, args.reduce, Role::Student)?;
        l1 += fourier_l1(&t, &s)?;
        cps += cps_loss(&t, &s, args.variant, args.epsilon)?;
    }
    let count = teacher.len() as f64;
    let report = total_loss(args.ce, args.overhaul, l1 / count, cps / count, args.weights)
        .with_cps_settings(args.variant, args.epsilon);
    write_outputs(&[(args.output, json_bytes(&report)?)])
}

pub fn synth(dir: &Path, size: usize, count: usize, alpha: Option<f64>, seed: u64) -> Result<()> {
    let images = match alpha {
        Some(a) => power_law_ensemble(size, a, count, seed)?,
        None => white_noise_ensemble(size, count, seed)?,
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let width = count.to_string().len().max(4);
    let mut names = Vec::with_capacity(count);
    let mut blobs = Vec::with_capacity(count + 1);
    for (i, t) in images.iter().enumerate() {
        let name = format!("image_{i:0width$}.npy");
        let mut bytes = Vec::new();
        write_npy(&mut bytes, t)?;
        names.push(name);
        blobs.push(bytes);
    }
    let items = names
        .iter()
        .map(|name| ManifestItem {
            path: name.clone(),
            kind: ItemKind::Image,
            layer: None,
            shape: vec![size, size],
        })
        .collect();
    let manifest = DatasetManifest::new(dir, items);
    let paths: Vec<_> = names.iter().map(|n| dir.join(n)).collect();
    let files: Vec<_> = paths.iter().map(|p| p.as_path()).zip(blobs).collect();
    write_outputs(&files)?;
    // The manifest goes last so a readable manifest always has its files.
    write_outputs(&[(&dir.join("manifest.json"), json_bytes(&manifest)?)])
}
