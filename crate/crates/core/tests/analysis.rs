mod common;

use ndarray::Array2;
use proptest::prelude::*;
use tfdenoise::analysis::{
    energy_profile, extract_if_lines, spectral_subtract, Beta, DEFAULT_I_MIN_FRACTION,
};
use tfdenoise::experiments::{
    burst_surrogate, run_experiment3, spectrogram_image, surrogate_stft, StftParams,
    SurrogateConfig,
};
use tfdenoise::filters::FilterParams;
use tfdenoise::signal::Signal;
use tfdenoise::Tfr;

const FS: f64 = 8000.0;

fn tones(freqs: &[f64]) -> Signal {
    let x = (0..8000)
        .map(|i| {
            freqs
                .iter()
                .map(|f| (2.0 * std::f64::consts::PI * f * i as f64 / FS).sin())
                .sum()
        })
        .collect();
    Signal::new(x, FS).unwrap()
}

fn stft_params() -> StftParams {
    StftParams {
        window_sigma: 64.0,
        window_len: Some(513),
        hop: 16,
        n_fft: 1024,
    }
}

/// Frames whose window lies entirely inside the signal.
fn interior(image: &Tfr) -> std::ops::Range<usize> {
    let margin = 256 / 16 + 1;
    margin..image.n_time() - margin
}

#[test]
fn pure_tone_gives_one_line_at_its_frequency() {
    let image = spectrogram_image(&tones(&[500.0]), &stft_params(), 255).unwrap();
    let track = extract_if_lines(&image, Beta::Auto, DEFAULT_I_MIN_FRACTION * 255.0);
    let bin = FS / 1024.0;
    for m in interior(&image) {
        let pts = track.components_at(image.axes.time_of(m));
        assert_eq!(pts.len(), 1, "frame {m}");
        assert!(
            (pts[0].freq_hz - 500.0).abs() <= bin,
            "frame {m}: {}",
            pts[0].freq_hz
        );
    }
}

#[test]
fn two_tones_give_two_ordered_lines() {
    let image = spectrogram_image(&tones(&[500.0, 700.0]), &stft_params(), 255).unwrap();
    let track = extract_if_lines(&image, Beta::Auto, DEFAULT_I_MIN_FRACTION * 255.0);
    let bin = FS / 1024.0;
    for m in interior(&image) {
        let pts = track.components_at(image.axes.time_of(m));
        assert_eq!(pts.len(), 2, "frame {m}");
        assert!((pts[0].freq_hz - 500.0).abs() <= bin && (pts[1].freq_hz - 700.0).abs() <= bin);
        assert!(track.points.iter().all(|p| p.intensity >= track.i_min));
    }
}

#[test]
fn if_lines_survive_rescaling_with_auto_threshold() {
    let image = spectrogram_image(&tones(&[500.0, 700.0]), &stft_params(), 255).unwrap();
    let a = extract_if_lines(&image, Beta::Auto, 25.5);
    let halved = image.with_values(image.values.mapv(|v| 0.5 * v));
    let b = extract_if_lines(&halved, Beta::Auto, 12.75);
    assert_eq!(a.points.len(), b.points.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!((p.t, p.n), (q.t, q.n));
        assert!((p.freq_hz - q.freq_hz).abs() <= 1e-9, "{p:?} vs {q:?}");
    }
}

#[test]
fn surrogate_burst_is_recovered_after_subtraction() {
    for seed in [1, 7, 42] {
        let sur = burst_surrogate(&SurrogateConfig {
            seed,
            ..Default::default()
        })
        .unwrap();
        let out =
            run_experiment3(&sur.noisy, &surrogate_stft(), &FilterParams::default(), 1.0).unwrap();
        let t_noisy = out.profile_s0.times[out.profile_s0.argmax().unwrap()];
        let t_sub = out.profile_subtracted.times[out.profile_subtracted.argmax().unwrap()];
        let inside = |t: f64| t >= sur.burst.0 && t < sur.burst.1;
        assert!(!inside(t_noisy), "seed {seed}: noisy argmax {t_noisy}");
        assert!(inside(t_sub), "seed {seed}: subtracted argmax {t_sub}");
    }
}

#[test]
fn subtracting_with_alpha_q_keeps_the_original() {
    let sur = burst_surrogate(&SurrogateConfig::default()).unwrap();
    let out = run_experiment3(
        &sur.noisy,
        &surrogate_stft(),
        &FilterParams::default(),
        255.0,
    )
    .unwrap();
    assert_eq!(out.subtracted.values, out.s0.values);
}

fn image(rows: usize, cols: usize) -> impl Strategy<Value = Tfr> {
    prop::collection::vec(0.0f64..=255.0, rows * cols).prop_map(move |v| {
        Tfr::image(Array2::from_shape_vec((rows, cols), v).unwrap(), 255).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_profile_is_linear(a in image(8, 11), b in image(8, 11), x in 0.0f64..0.5, y in 0.0f64..0.5) {
        let mix = Tfr::image(&a.values * x + &b.values * y, 255).unwrap();
        let (pa, pb, pm) = (energy_profile(&a), energy_profile(&b), energy_profile(&mix));
        for i in 0..pm.energy.len() {
            let expected = x * pa.energy[i] + y * pb.energy[i];
            prop_assert!((pm.energy[i] - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn subtraction_is_idempotent(s0 in image(7, 9), sn in image(7, 9), alpha in 0.0f64..=255.0) {
        let once = spectral_subtract(&s0, &sn, alpha).unwrap();
        let twice = spectral_subtract(&once, &sn, alpha).unwrap();
        prop_assert_eq!(once.values, twice.values);
    }
}
