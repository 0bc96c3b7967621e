mod common;

use common::{max_abs_diff, min_max, noisy_step, random_image, rank_correlation};
use ndarray::Array2;
use proptest::prelude::*;
use tfdenoise::filters::{
    nf_brute_force, nf_iterate, nlmeans, tv_functional, tv_transport_denoise, yaroslavsky_iterate,
    FilterParams, TvFlow,
};
use tfdenoise::quantizer::quantize;
use tfdenoise::signal::Signal;
use tfdenoise::tfr::{
    gaussian_window, normalize_to_image, pseudo_wigner_ville_bins, spectrogram, stft,
};
use tfdenoise::Tfr;

fn fixed_iterations(h: f64, n: usize) -> FilterParams {
    FilterParams {
        h,
        tol: 0.0,
        max_iter: n,
        ..FilterParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nf_matches_brute_force_twice(rows in 1usize..=16, cols in 1usize..=16, h in 1.0f64..50.0, seed in any::<u64>()) {
        let image = random_image(rows, cols, 255, seed);
        let s0 = quantize(&image, 255).unwrap().to_image();
        let fast = nf_iterate(&image, &fixed_iterations(h, 2)).unwrap();
        let once = nf_brute_force(&s0, &s0, h).unwrap();
        let twice = nf_brute_force(&s0, &once, h).unwrap();
        prop_assert!(max_abs_diff(&fast.image.values, &twice.values) <= 1e-10);
    }

    #[test]
    fn nf_obeys_max_principle_and_contracts(rows in 2usize..=24, cols in 2usize..=24, h in 1.0f64..40.0, seed in any::<u64>()) {
        let image = random_image(rows, cols, 255, seed);
        let mut previous = quantize(&image, 255).unwrap().to_image().values;
        for n in 1..=4 {
            let out = nf_iterate(&image, &fixed_iterations(h, n)).unwrap().image.values;
            let (lo, hi) = min_max(&previous);
            let (new_lo, new_hi) = min_max(&out);
            prop_assert!(new_lo >= lo - 1e-9 && new_hi <= hi + 1e-9);
            previous = out;
        }
    }

    #[test]
    fn yaroslavsky_obeys_max_principle(rows in 2usize..=16, cols in 2usize..=16, h in 1.0f64..40.0, rho in 0.5f64..4.0, seed in any::<u64>()) {
        let image = random_image(rows, cols, 255, seed);
        let start = quantize(&image, 255).unwrap().to_image().values;
        let params = FilterParams { h, rho, steps: Some(2), ..FilterParams::default() };
        let out = yaroslavsky_iterate(&image, &params).unwrap().image.values;
        let (lo, hi) = min_max(&start);
        let (new_lo, new_hi) = min_max(&out);
        prop_assert!(new_lo >= lo - 1e-9 && new_hi <= hi + 1e-9);
    }
}

#[test]
fn constant_images_are_fixed_points() {
    for (i, level) in [0.0, 17.0, 128.0, 255.0].into_iter().enumerate() {
        let image = Tfr::image(Array2::from_elem((9 + i, 12), level), 255).unwrap();
        let nf = nf_iterate(&image, &FilterParams::default()).unwrap();
        assert!(nf.iterations <= 1);
        assert!(max_abs_diff(&nf.image.values, &image.values) == 0.0);
        let y = yaroslavsky_iterate(
            &image,
            &FilterParams {
                steps: Some(3),
                ..FilterParams::default()
            },
        )
        .unwrap();
        assert!(max_abs_diff(&y.image.values, &image.values) <= 1e-12);
        let tv = tv_transport_denoise(
            &image,
            &FilterParams {
                eps: 0.2,
                dtau: 1.0,
                ..FilterParams::default()
            },
        )
        .unwrap();
        assert!(max_abs_diff(&tv.image.values, &image.values) <= 1e-6);
    }
}

#[test]
fn yaroslavsky_with_huge_rho_is_one_nf_step() {
    for seed in 0..10 {
        let image = random_image(6 + seed as usize, 9, 255, seed);
        let params = FilterParams {
            h: 5.0 + seed as f64,
            rho: 1e6,
            truncate_spatial: false,
            steps: Some(1),
            ..FilterParams::default()
        };
        let y = yaroslavsky_iterate(&image, &params).unwrap();
        let nf = nf_iterate(&image, &fixed_iterations(params.h, 1)).unwrap();
        assert!(
            max_abs_diff(&y.image.values, &nf.image.values) <= 1e-6,
            "seed {seed}"
        );
    }
}

fn mean(a: &Array2<f64>) -> f64 {
    a.sum() / a.len() as f64
}

#[test]
fn tv_flow_without_transport_conserves_mean() {
    for seed in 0..10 {
        let image = noisy_step(20, 24, 255, 30.0, seed);
        let params = FilterParams {
            eps: 0.0,
            steps: Some(5),
            ..FilterParams::default()
        };
        let mut flow = TvFlow::new(&image, &params).unwrap();
        let mut previous = mean(&flow.values());
        for _ in 0..5 {
            flow.step().unwrap();
            let m = mean(&flow.values());
            assert!(
                (m - previous).abs() <= 10.0 * 1e-8 * previous.abs().max(1.0),
                "seed {seed}: {previous} -> {m}"
            );
            previous = m;
        }
    }
}

#[test]
fn tv_flow_without_transport_decreases_total_variation() {
    for seed in 0..10 {
        let image = noisy_step(24, 24, 255, 60.0, 100 + seed);
        let params = FilterParams {
            eps: 0.0,
            steps: Some(20),
            ..FilterParams::default()
        };
        let mut flow = TvFlow::new(&image, &params).unwrap();
        let mut previous = tv_functional(&flow.values(), params.eps_tilde);
        for step in 0..20 {
            flow.step().unwrap();
            let tv = tv_functional(&flow.values(), params.eps_tilde);
            assert!(
                tv <= previous * (1.0 + 1e-9),
                "seed {seed} step {step}: {previous} -> {tv}"
            );
            previous = tv;
        }
    }
}

#[test]
fn tv_step_count_follows_final_time() {
    let image = noisy_step(8, 8, 255, 20.0, 1);
    let result = tv_transport_denoise(
        &image,
        &FilterParams {
            eps: 0.2,
            dtau: 0.25,
            ..FilterParams::default()
        },
    )
    .unwrap();
    assert_eq!(result.iterations, 20);
    assert_eq!(result.per_iter_change.len(), 20);
}

#[test]
fn nlmeans_on_wigner_ville_tracks_nf_on_spectrogram() {
    let fs = 1000.0;
    let n = 128;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64;
            let sweep = 0.08 + 0.12 * t / n as f64;
            (2.0 * std::f64::consts::PI * sweep * t).cos()
                + 0.7 * (2.0 * std::f64::consts::PI * 0.3 * t).cos()
        })
        .collect();
    let signal = Signal::new(x, fs).unwrap();
    let window = gaussian_window(4.0, 33).unwrap();
    let s = spectrogram(&stft(&signal, &window, 1, 64).unwrap());
    let wv = pseudo_wigner_ville_bins(&signal, 31, 32).unwrap();
    let spec_image = normalize_to_image(&s, 255).unwrap();
    let nf = nf_iterate(&spec_image, &fixed_iterations(10.0, 1))
        .unwrap()
        .image;
    let scale = wv.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let wv_scaled = wv.with_values(wv.values.mapv(|v| v / scale));
    let nl = nlmeans(&wv_scaled, 0.5, 1.0).unwrap();
    // ridge maxima: for each interior column, the frequency row with the largest value
    let cols: Vec<usize> = (16..n - 16).collect();
    let ridge = |img: &Array2<f64>| -> Vec<f64> {
        cols.iter()
            .map(|&c| {
                (0..32)
                    .max_by(|&a, &b| img[[a, c]].total_cmp(&img[[b, c]]))
                    .unwrap() as f64
            })
            .collect()
    };
    let rho = rank_correlation(&ridge(&nl.values), &ridge(&nf.values));
    assert!(rho >= 0.9, "rank correlation {rho}");
}
