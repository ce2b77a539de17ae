//! Acceptance gate: one check per primary criterion, one line of output each.
//! Exits non-zero if any check fails.

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;
use spectral_stats::distill::{
    channel_reduce, cps_loss, fourier_l1, total_loss, CpsVariant, LossWeights, ReduceMethod, Role,
};
use spectral_stats::scaling::{pooling_invariance_report, FitRanges};
use spectral_stats::spectrum::{
    autocorrelation, default_fit_range, dft2, ensemble_spectrum, fit_power_law, power_grid,
};
use spectral_stats::synth::{power_law_ensemble, white_noise_ensemble};
use spectral_stats::theory::{
    convolve_periodic, depth_simulation, kernel_power_gain, kernel_spectrum_grid,
    kernel_spectrum_zero_padded, Kernel3x3,
};
use spectral_stats::Tensor;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn random_kernel(rng: &mut impl Rng) -> Kernel3x3 {
    let mut rows = [[0.0; 3]; 3];
    for row in &mut rows {
        for w in row.iter_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
    }
    Kernel3x3::new(rows).unwrap()
}

fn dft_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    for &n in &[4, 8, 16] {
        for _ in 0..50 {
            let t = random_image(n, &mut rng);
            let fast = dft2(&t).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs_diff(fast.values(), &brute_dft(t.data(), n)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("max abs error {worst:.2e}, {secs:.2} s");
    if worst < 1e-9 && secs < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parseval() -> Outcome {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = [4, 8, 16, 32][i % 4];
        let t = random_image(n, &mut rng);
        let spatial: f64 = t.data().iter().map(|v| v * v).sum();
        let spectral: f64 = power_grid(&dft2(&t).unwrap()).data().iter().sum::<f64>() / (n * n) as f64;
        worst = worst.max((spectral - spatial).abs() / spatial);
    }
    let detail = format!("max relative error {worst:.2e}");
    if worst < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exponent_recovery() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [-1.0, -2.0, -3.0] {
        let items = power_law_ensemble(64, alpha, 50, 42).unwrap();
        let s = ensemble_spectrum(&items, false).unwrap();
        let (lo, hi) = default_fit_range(&s);
        let fit = fit_power_law(&s, lo, hi).unwrap();
        ok &= (fit.alpha - alpha).abs() <= 0.1;
        parts.push(format!("{alpha} -> {:.4}", fit.alpha));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn white_noise_flatness() -> Outcome {
    let mut alphas = Vec::new();
    for seed in 0..5 {
        let items = white_noise_ensemble(32, 100, seed).unwrap();
        let s = ensemble_spectrum(&items, false).unwrap();
        let (lo, hi) = default_fit_range(&s);
        alphas.push(fit_power_law(&s, lo, hi).unwrap().alpha);
    }
    let worst = alphas.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
    let detail = format!("alphas {:.4?}, mean {mean:.4}, max |alpha| {worst:.4}", alphas);
    if worst < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kernel_dual_route() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = [8, 16, 32][i % 3];
        let k = random_kernel(&mut rng);
        let closed = kernel_spectrum_grid(&k, n).unwrap();
        let padded = kernel_spectrum_zero_padded(&k, n).unwrap();
        worst = worst.max(max_abs_diff(closed.values(), padded.values()));
    }
    let detail = format!("max abs difference {worst:.2e}");
    if worst < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn convolution_theorem() -> Outcome {
    let mut rng = rng(6);
    let mut worst = 0.0f64;
    for &n in &[4, 8, 16] {
        for _ in 0..20 {
            let t = random_image(n, &mut rng);
            let k = random_kernel(&mut rng);
            let spatial = dft2(&convolve_periodic(&t, &k).unwrap()).unwrap();
            let fourier = dft2(&t).unwrap().hadamard(&kernel_spectrum_grid(&k, n).unwrap()).unwrap();
            worst = worst.max(max_abs_diff(spatial.values(), fourier.values()));
            let direct = brute_convolve(&t, k.rows());
            worst = worst.max(max_abs_diff_real(convolve_periodic(&t, &k).unwrap().data(), &direct));
        }
    }
    let detail = format!("max abs difference {worst:.2e}");
    if worst < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn layer_multiplicativity() -> Outcome {
    let mut rng = rng(7);
    let n = 16;
    let depth: i32 = 8;
    // Centre-dominated kernel so that |W|^(2d) stays well away from zero.
    let mut rows = [[0.0; 3]; 3];
    for row in &mut rows {
        for w in row.iter_mut() {
            *w = rng.random_range(-0.1..0.1);
        }
    }
    rows[1][1] = 1.0;
    let k = Kernel3x3::new(rows).unwrap();
    let gain = kernel_power_gain(&k, n).unwrap();
    let mut worst_rel = 0.0f64;
    let mut worst_log = 0.0f64;
    for _ in 0..10 {
        let t0 = random_image(n, &mut rng);
        let p0 = power_grid(&dft2(&t0).unwrap());
        let mut t = t0.clone();
        for _ in 0..depth {
            t = convolve_periodic(&t, &k).unwrap();
        }
        let pd = power_grid(&dft2(&t).unwrap());
        for ((a, p), g) in pd.data().iter().zip(p0.data()).zip(gain.data()) {
            let expected = g.powi(depth) * p;
            worst_rel = worst_rel.max((a - expected).abs() / expected.abs().max(1e-300));
            if *p > 1e-12 {
                worst_log = worst_log.max(((a.ln() - p.ln()) - depth as f64 * g.ln()).abs());
            }
        }
    }
    let detail = format!("max relative error {worst_rel:.2e}, max log-additivity error {worst_log:.2e}");
    if worst_rel < 1e-7 && worst_log < 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn depth_linearity() -> Outcome {
    let items = power_law_ensemble(64, -2.0, 50, 42).unwrap();
    let report = depth_simulation(&items, &Kernel3x3::normalized_box(), 8, None).map_err(|e| e.to_string())?;
    let alphas = report.alphas();
    let decreasing = alphas.windows(2).all(|w| w[1] < w[0]);
    let detail = format!(
        "alphas {:.3?}, r2 {:.5}, per-layer log delta {:.4}",
        alphas, report.linear_r2, report.per_layer_log_delta
    );
    if decreasing && report.linear_r2 > 0.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pooling_invariance() -> Outcome {
    let items = power_law_ensemble(64, -2.0, 50, 42).unwrap();
    let report = pooling_invariance_report(&items, 2, FitRanges::default()).map_err(|e| e.to_string())?;
    let detail = format!(
        "mean |dlog P| {:.4}, alpha pre {:.3}, post {:.3}",
        report.low_freq_log_gap, report.alpha_pre.alpha, report.alpha_post.alpha
    );
    if report.low_freq_log_gap < 0.2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wiener_khinchin() -> Outcome {
    let mut rng = rng(10);
    let mut worst = 0.0f64;
    for &n in &[4, 8, 12, 16] {
        for subtract_mean in [false, true] {
            let t = random_image(n, &mut rng);
            let c = autocorrelation(&t, subtract_mean).unwrap();
            let direct = brute_radial(&brute_correlation_grid(&t, subtract_mean), n, 0, n / 2);
            if direct.len() != c.radii.len() {
                return Err(format!("radius count mismatch at N={n}"));
            }
            for ((r, v), (dr, (dv, _))) in c.radii.iter().zip(&c.corr).zip(&direct) {
                if r != dr {
                    return Err(format!("radius mismatch at N={n}"));
                }
                worst = worst.max((v - dv).abs());
            }
        }
    }
    let detail = format!("max abs difference {worst:.2e}");
    if worst < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn loss_identities() -> Outcome {
    let mut rng = rng(11);
    let data: Vec<f64> = (0..4 * 8 * 8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor::new(vec![4, 8, 8], data).unwrap();
    let neg = x.map(|v| -v).unwrap();
    let t = channel_reduce(&x, 4, ReduceMethod::FirstM, Role::Teacher).unwrap();
    let s = channel_reduce(&x, 4, ReduceMethod::FirstM, Role::Student).unwrap();
    let sn = channel_reduce(&neg, 4, ReduceMethod::FirstM, Role::Student).unwrap();
    let l1 = fourier_l1(&t, &s).unwrap();
    let same = cps_loss(&t, &s, CpsVariant::Normalized, 1e-8).unwrap();
    let opposite = cps_loss(&t, &sn, CpsVariant::Normalized, 1e-8).unwrap();
    let total = total_loss(Some(1.0), Some(2.0), 3.0, 4.0, LossWeights::CIFAR).total;
    let detail = format!("l1(X,X) {l1:e}, cps(X,X) {same:.2e}, cps(X,-X) {opposite:.6}, total {total}");
    if l1 == 0.0 && same.abs() < 1e-4 && (opposite - 2.0).abs() < 1e-3 && (total - 1.0405).abs() < 1e-15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let checks: [Check; 11] = [
        ("DFT matches brute force", dft_correctness),
        ("Parseval identity", parseval),
        ("power-law exponent recovery", exponent_recovery),
        ("white noise is flat", white_noise_flatness),
        ("kernel transform dual route", kernel_dual_route),
        ("convolution theorem", convolution_theorem),
        ("layer multiplicativity and additivity", layer_multiplicativity),
        ("depth linearity", depth_linearity),
        ("pooling invariance", pooling_invariance),
        ("Wiener-Khinchin autocorrelation", wiener_khinchin),
        ("loss identities", loss_identities),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
