mod common;

use common::*;
use proptest::prelude::*;
use spectral_stats::spectrum::{
    autocorrelation, default_fit_range, dft2, ensemble_spectrum, fit_correlation, fit_power_law, idft2,
    image_spectrum, power_grid, radial_average, RadialCorrelation, RadialSpectrum,
};
use spectral_stats::synth::{power_law_ensemble, white_noise_ensemble};
use spectral_stats::{Error, Tensor};

fn tensor_of(n: usize, seed: u64) -> Tensor {
    random_image(n, &mut rng(seed))
}

#[test]
fn dft_matches_brute_force_for_small_sizes() {
    for n in [4, 5, 6, 8, 9, 16] {
        for seed in 0..5 {
            let t = tensor_of(n, seed);
            let fast = dft2(&t).unwrap();
            assert!(max_abs_diff(fast.values(), &brute_dft(t.data(), n)) < 1e-9, "N={n}");
        }
    }
}

#[test]
fn inverse_undoes_forward() {
    let t = tensor_of(12, 3);
    let back = idft2(&dft2(&t).unwrap());
    for (a, b) in back.iter().zip(t.data()) {
        assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
    }
}

#[test]
fn non_power_of_two_large_map_is_fast() {
    let t = tensor_of(224, 0);
    let start = std::time::Instant::now();
    let s = image_spectrum(&t, false, false).unwrap();
    assert_eq!(s.len(), 112);
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn radial_mean_matches_independent_binning() {
    for n in [4, 7, 8, 15, 16] {
        let t = tensor_of(n, n as u64);
        let p = power_grid(&dft2(&t).unwrap());
        let s = radial_average(&p, false).unwrap();
        let oracle = brute_radial(p.data(), n, 1, n / 2);
        assert_eq!(s.bins, oracle.keys().copied().collect::<Vec<_>>());
        for (i, (_, (mean, count))) in oracle.iter().enumerate() {
            assert_eq!(s.counts[i], *count);
            assert!((s.power[i] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
        let j = radial_average(&p, true).unwrap();
        for i in 0..s.len() {
            assert!((j.power[i] - s.power[i] * s.bins[i] as f64).abs() <= 1e-12 * j.power[i].max(1.0));
        }
    }
}

#[test]
fn exact_power_law_spectrum_is_recovered() {
    let s = RadialSpectrum {
        bins: (1..=32).collect(),
        power: (1..=32).map(|r| 5.0 * (r as f64).powf(-2.7)).collect(),
        counts: vec![1; 32],
        jacobian_applied: false,
    };
    let fit = fit_power_law(&s, 1, 32).unwrap();
    assert!((fit.alpha + 2.7).abs() < 1e-9);
    assert!((fit.log_amplitude - 5f64.ln()).abs() < 1e-9);
    assert!((fit.r2 - 1.0).abs() < 1e-12);
}

#[test]
fn synthetic_ensembles_recover_their_exponent() {
    for alpha in [-1.0, -2.0, -3.0] {
        for seed in [1, 7] {
            let items = power_law_ensemble(64, alpha, 50, seed).unwrap();
            let s = ensemble_spectrum(&items, false).unwrap();
            let (lo, hi) = default_fit_range(&s);
            let fit = fit_power_law(&s, lo, hi).unwrap();
            assert!((fit.alpha - alpha).abs() < 0.1, "alpha {alpha} seed {seed}: {}", fit.alpha);
        }
    }
}

#[test]
fn white_noise_spectrum_is_flat() {
    let items = white_noise_ensemble(32, 100, 0).unwrap();
    let s = ensemble_spectrum(&items, false).unwrap();
    let fit = fit_power_law(&s, 8, 16).unwrap();
    assert!(fit.alpha.abs() < 0.05, "{}", fit.alpha);
    // Unit-variance pixels give expected power N² per frequency.
    let mean = s.power.iter().sum::<f64>() / s.len() as f64;
    assert!((mean / 1024.0 - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn ensemble_spectrum_single_and_duplicate_items() {
    let t = tensor_of(16, 4);
    let single = image_spectrum(&t, false, false).unwrap();
    assert_eq!(ensemble_spectrum(std::slice::from_ref(&t), false).unwrap(), single);
    let doubled = ensemble_spectrum(&[t.clone(), t], false).unwrap();
    for (a, b) in doubled.power.iter().zip(&single.power) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn ensemble_runs_are_bit_identical_and_order_independent() {
    let items = power_law_ensemble(32, -2.0, 20, 5).unwrap();
    let a = ensemble_spectrum(&items, false).unwrap();
    let b = ensemble_spectrum(&items, false).unwrap();
    assert_eq!(
        a.power.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.power.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    let mut reversed = items.clone();
    reversed.reverse();
    let c = ensemble_spectrum(&reversed, false).unwrap();
    for (x, y) in a.power.iter().zip(&c.power) {
        assert!((x - y).abs() <= 1e-12 * x.abs());
    }
}

#[test]
fn ensemble_errors() {
    assert!(matches!(ensemble_spectrum(&[], false), Err(Error::EmptyEnsemble)));
    let mixed = [tensor_of(8, 0), tensor_of(16, 0)];
    assert!(matches!(ensemble_spectrum(&mixed, false), Err(Error::Shape(_))));
}

#[test]
fn autocorrelation_matches_spatial_oracle() {
    for n in [4, 5, 8, 11, 16] {
        for subtract_mean in [false, true] {
            let t = tensor_of(n, 100 + n as u64);
            let c = autocorrelation(&t, subtract_mean).unwrap();
            let oracle = brute_radial(&brute_correlation_grid(&t, subtract_mean), n, 0, n / 2);
            assert_eq!(c.radii, oracle.keys().copied().collect::<Vec<_>>());
            for (i, (_, (v, count))) in oracle.iter().enumerate() {
                assert_eq!(c.counts[i], *count);
                assert!((c.corr[i] - v).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn autocorrelation_zero_lag_is_variance() {
    let t = tensor_of(16, 9);
    let c = autocorrelation(&t, true).unwrap();
    assert_eq!(c.radii[0], 0);
    assert!((c.corr[0] - t.variance()).abs() < 1e-12);
}

fn model_correlation(c1: f64, c2: f64, exponent: f64, n: usize) -> RadialCorrelation {
    RadialCorrelation {
        radii: (0..=n).collect(),
        corr: (0..=n).map(|r| if r == 0 { c1 + c2 } else { c1 + c2 * (r as f64).powf(exponent) }).collect(),
        counts: vec![1; n + 1],
    }
}

#[test]
fn correlation_fit_recovers_grid_exponents() {
    for exponent in [-3.25, -1.7, -0.5, -0.01] {
        let fit = fit_correlation(&model_correlation(1.0, 2.0, exponent, 16), 1, 16).unwrap();
        assert!((fit.exponent - exponent).abs() < 1e-9, "{exponent}: {}", fit.exponent);
        assert!((fit.c1 - 1.0).abs() < 1e-6 && (fit.c2 - 2.0).abs() < 1e-6);
        assert!(fit.residual < 1e-12);
    }
}

#[test]
fn correlation_of_power_law_images() {
    // For spectra |k|^alpha the correlation decays like r^-(2 + alpha).
    for (alpha, expected) in [(-1.0, -1.0), (-1.5, -0.5)] {
        let items = power_law_ensemble(64, alpha, 50, 42).unwrap();
        let mut mean = vec![0.0; 33];
        for t in &items {
            let c = autocorrelation(t, true).unwrap();
            for (m, v) in mean.iter_mut().zip(&c.corr) {
                *m += v / items.len() as f64;
            }
        }
        let c = RadialCorrelation {
            radii: (0..=32).collect(),
            corr: mean,
            counts: vec![1; 33],
        };
        let fit = fit_correlation(&c, 1, 8).unwrap();
        assert!((fit.exponent - expected).abs() < 0.1, "alpha {alpha}: {}", fit.exponent);
    }
}

#[test]
fn correlation_fit_pins_to_grid_edge_for_positive_decay_exponent() {
    // alpha = -3 implies exponent +1, outside the searched interval [-4, 0].
    let items = power_law_ensemble(16, -3.0, 20, 42).unwrap();
    let t = &items[0];
    let c = autocorrelation(t, true).unwrap();
    let direct = brute_radial(&brute_correlation_grid(t, true), 16, 0, 8);
    for (v, (_, (d, _))) in c.corr.iter().zip(&direct) {
        assert!((v - d).abs() < 1e-6);
    }
    let fit = fit_correlation(&c, 1, 8).unwrap();
    assert!(fit.exponent <= 0.0 && fit.exponent >= -0.05, "{}", fit.exponent);
}

#[test]
fn correlation_fit_errors() {
    let flat = model_correlation(3.0, 0.0, -1.0, 16);
    assert!(matches!(fit_correlation(&flat, 1, 16), Err(Error::DegenerateInput(_))));
    let c = model_correlation(1.0, 1.0, -1.0, 16);
    assert!(matches!(fit_correlation(&c, 0, 8), Err(Error::InvalidArgument(_))));
    assert!(matches!(fit_correlation(&c, 5, 7), Err(Error::InsufficientData(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_inputs_have_conjugate_symmetric_transforms(n in 4usize..=64, seed in any::<u64>()) {
        let t = tensor_of(n, seed);
        let f = dft2(&t).unwrap();
        let scale = f.values().iter().map(|v| v.norm()).fold(1.0, f64::max);
        for u in 0..n {
            for v in 0..n {
                let a = f.at(u, v);
                let b = f.at((n - u) % n, (n - v) % n).conj();
                prop_assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn parseval_holds(n in 4usize..=48, seed in any::<u64>()) {
        let t = tensor_of(n, seed);
        let spatial: f64 = t.data().iter().map(|v| v * v).sum();
        let spectral = power_grid(&dft2(&t).unwrap()).data().iter().sum::<f64>() / (n * n) as f64;
        prop_assert!((spectral - spatial).abs() <= 1e-6 * spatial);
    }

    #[test]
    fn radial_totals_cover_the_inscribed_disk(n in 4usize..=40, seed in any::<u64>()) {
        let t = tensor_of(n, seed);
        let p = power_grid(&dft2(&t).unwrap());
        let s = radial_average(&p, false).unwrap();
        let binned: f64 = s.power.iter().zip(&s.counts).map(|(v, &c)| v * c as f64).sum();
        let disk: f64 = brute_radial(p.data(), n, 1, n / 2).values().map(|(m, c)| m * *c as f64).sum();
        prop_assert!((binned - disk).abs() <= 1e-9 * disk);
        // Without corners (all radii kept) the total is the full grid minus DC.
        let all: f64 = brute_radial(p.data(), n, 1, usize::MAX).values().map(|(m, c)| m * *c as f64).sum();
        let full: f64 = p.data().iter().sum::<f64>() - p.data()[0];
        prop_assert!((all - full).abs() <= 1e-9 * full);
    }
}
