//! End-to-end runs: the synthetic tone/chirp experiment with the MSE and
//! timing comparison of the three filters, and the spectral-subtraction
//! procedure on a burst-plus-line surrogate.

use serde::{Deserialize, Serialize};

use crate::analysis::{energy_profile, relative_mse, spectral_subtract, EnergyProfile};
use crate::error::{Error, Result};
use crate::filters::{nf_iterate, FilterKind, FilterParams, FilterReport, FilterResult};
use crate::signal::{gen_tone_chirp_mix, gen_uniform_noise, mix_at_snr, Signal, DEFAULT_SEED};
use crate::tfr::{gaussian_window, normalize_to_image, spectrogram, stft, window_length_for, Tfr};

/// Short-time Fourier transform settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftParams {
    /// Gaussian window standard deviation, in samples.
    pub window_sigma: f64,
    /// Odd window length; `None` covers `±4σ`, capped at the largest odd
    /// length not exceeding `n_fft`.
    pub window_len: Option<usize>,
    pub hop: usize,
    pub n_fft: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            window_sigma: EXPERIMENT1_WINDOW_SIGMA,
            window_len: None,
            hop: 4,
            n_fft: 1022,
        }
    }
}

impl StftParams {
    pub fn window_len(&self) -> usize {
        self.window_len
            .unwrap_or_else(|| window_length_for(self.window_sigma, 4.0).min(odd_floor(self.n_fft)))
    }
}

fn odd_floor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        n - 1
    } else {
        n
    }
}

/// Spectrogram of `signal` mapped to `[0, q]`.
pub fn spectrogram_image(signal: &Signal, stft_params: &StftParams, q: u32) -> Result<Tfr> {
    let window = gaussian_window(stft_params.window_sigma, stft_params.window_len())?;
    let s = spectrogram(&stft(signal, &window, stft_params.hop, stft_params.n_fft)?);
    normalize_to_image(&s, q)
}

/// Window width used for the synthetic experiment, in samples at 8192 Hz.
pub const EXPERIMENT1_WINDOW_SIGMA: f64 = 340.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Experiment1Config {
    pub duration_s: f64,
    pub fs: f64,
    pub seed: u64,
    pub snr_db: f64,
    pub stft: StftParams,
    pub params: FilterParams,
}

impl Default for Experiment1Config {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            fs: 8192.0,
            seed: DEFAULT_SEED,
            snr_db: 0.0,
            stft: StftParams::default(),
            params: FilterParams::default(),
        }
    }
}

/// Clean and noisy spectrogram images of the tone/chirp mixture.
#[derive(Debug, Clone)]
pub struct Experiment1Images {
    pub clean: Tfr,
    pub noisy: Tfr,
}

/// Clean tone/chirp mixture and its noisy version.
pub fn experiment1_signals(cfg: &Experiment1Config) -> Result<(Signal, Signal)> {
    let clean = gen_tone_chirp_mix(cfg.duration_s, cfg.fs)?;
    let noise = gen_uniform_noise(clean.len(), cfg.fs, cfg.seed)?;
    let noisy = mix_at_snr(&clean, &noise, cfg.snr_db)?;
    Ok((clean, noisy))
}

pub fn experiment1_images(cfg: &Experiment1Config) -> Result<Experiment1Images> {
    let (clean_signal, noisy_signal) = experiment1_signals(cfg)?;
    let q = cfg.params.q;
    Ok(Experiment1Images {
        clean: spectrogram_image(&clean_signal, &cfg.stft, q)?,
        noisy: spectrogram_image(&noisy_signal, &cfg.stft, q)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment1Report {
    pub rows: usize,
    pub cols: usize,
    /// MSE of the unfiltered noisy image against the clean one.
    pub noisy_mse: f64,
    pub filters: Vec<FilterReport>,
}

impl Experiment1Report {
    pub fn filter(&self, name: &str) -> Option<&FilterReport> {
        self.filters.iter().find(|f| f.filter == name)
    }
}

/// Report, input images, and each filter's output.
pub type Experiment1Run = (
    Experiment1Report,
    Experiment1Images,
    Vec<(FilterKind, FilterResult)>,
);

/// Runs the selected filters on the noisy image and scores each against the
/// clean image. The filtered images are returned alongside the report.
pub fn run_experiment1(cfg: &Experiment1Config, filters: &[FilterKind]) -> Result<Experiment1Run> {
    let images = experiment1_images(cfg)?;
    let noisy_mse = relative_mse(&images.clean, &images.noisy)?;
    let mut results = Vec::new();
    let mut reports = Vec::new();
    for &kind in filters {
        let result = kind.run(&images.noisy, &cfg.params)?;
        let mse = relative_mse(&images.clean, &result.image)?;
        reports.push(result.report(kind.name(), Some(mse)));
        results.push((kind, result));
    }
    let report = Experiment1Report {
        rows: images.noisy.n_freq(),
        cols: images.noisy.n_time(),
        noisy_mse,
        filters: reports,
    };
    Ok((report, images, results))
}

/// Burst-plus-line surrogate of a noisy recording with a short broadband
/// episode.
#[derive(Debug, Clone)]
pub struct BurstSurrogate {
    pub clean: Signal,
    pub noisy: Signal,
    /// Episode interval, seconds.
    pub burst: (f64, f64),
    /// Interval carrying the strong added noise, seconds.
    pub noise: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub fs: f64,
    pub duration_s: f64,
    /// Frequency of the persistent line, Hz.
    pub line_hz: f64,
    pub line_amplitude: f64,
    pub burst: (f64, f64),
    pub burst_amplitude: f64,
    pub noise: (f64, f64),
    /// Band of the interference, Hz.
    pub noise_band: (f64, f64),
    pub noise_amplitude: f64,
    pub floor_amplitude: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            fs: 250.0,
            duration_s: 60.0,
            line_hz: 20.0,
            line_amplitude: 1.0,
            burst: (36.0, 40.0),
            burst_amplitude: 2.0,
            noise: (12.0, 24.0),
            noise_band: (40.0, 60.0),
            noise_amplitude: 2.0,
            floor_amplitude: 0.002,
            seed: DEFAULT_SEED,
        }
    }
}

pub fn burst_surrogate(cfg: &SurrogateConfig) -> Result<BurstSurrogate> {
    let n = (cfg.duration_s * cfg.fs).round() as usize;
    if n == 0 {
        return Err(Error::invalid("surrogate duration shorter than one sample"));
    }
    let inside = |i: usize, (a, b): (f64, f64)| {
        let t = i as f64 / cfg.fs;
        t >= a && t < b
    };
    let floor = crate::signal::uniform_samples(n, cfg.seed);
    let burst = crate::signal::uniform_samples(n, cfg.seed.wrapping_add(1));
    let noise = band_noise(n, cfg.fs, cfg.noise_band, cfg.seed.wrapping_add(2));
    let clean: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / cfg.fs;
            let mut x = cfg.line_amplitude * (2.0 * std::f64::consts::PI * cfg.line_hz * t).sin()
                + cfg.floor_amplitude * floor[i];
            if inside(i, cfg.burst) {
                x += cfg.burst_amplitude * burst[i];
            }
            x
        })
        .collect();
    let noisy: Vec<f64> = clean
        .iter()
        .enumerate()
        .map(|(i, &x)| x + cfg.noise_amplitude * gate(i as f64 / cfg.fs, cfg.noise) * noise[i])
        .collect();
    Ok(BurstSurrogate {
        clean: Signal::new(clean, cfg.fs)?,
        noisy: Signal::new(noisy, cfg.fs)?,
        burst: cfg.burst,
        noise: cfg.noise,
    })
}

/// Indicator of `[a, b)` with raised-cosine ramps of one second at both ends,
/// so switching the interference on and off adds no broadband click.
fn gate(t: f64, (a, b): (f64, f64)) -> f64 {
    let ramp = 1.0_f64.min((b - a) / 2.0);
    let edge = (t - a).min(b - t);
    if edge <= 0.0 {
        0.0
    } else if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (std::f64::consts::PI * edge / ramp).cos()
    }
}

/// Random-phase comb of tones spaced 0.5 Hz apart across `band`, scaled to
/// unit RMS.
fn band_noise(n: usize, fs: f64, (lo, hi): (f64, f64), seed: u64) -> Vec<f64> {
    let phases = crate::signal::uniform_samples(((hi - lo) * 2.0) as usize + 1, seed);
    let mut x = vec![0.0; n];
    for (k, phase) in phases.iter().enumerate() {
        let f = lo + 0.5 * k as f64;
        for (i, v) in x.iter_mut().enumerate() {
            *v += (2.0 * std::f64::consts::PI * f * i as f64 / fs + std::f64::consts::PI * phase)
                .sin();
        }
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

/// STFT settings for the surrogate: 0.25 s Gaussian window at 250 Hz.
pub fn surrogate_stft() -> StftParams {
    StftParams {
        window_sigma: 16.0,
        window_len: None,
        hop: 25,
        n_fft: 256,
    }
}

/// Images and profiles of the filtering-extraction procedure.
#[derive(Debug, Clone)]
pub struct Experiment3Output {
    pub s0: Tfr,
    pub sn: Tfr,
    pub subtracted: Tfr,
    pub profile_s0: EnergyProfile,
    pub profile_subtracted: EnergyProfile,
    pub nf: FilterResult,
}

/// Spectrogram image `S0` of `signal`, its Neighborhood-filtered version
/// `Sn`, and `S0` with the pixels where `Sn > alpha` removed.
pub fn run_experiment3(
    signal: &Signal,
    stft_params: &StftParams,
    params: &FilterParams,
    alpha: f64,
) -> Result<Experiment3Output> {
    let s0 = spectrogram_image(signal, stft_params, params.q)?;
    let nf = nf_iterate(&s0, params)?;
    let sn = nf.image.clone();
    let subtracted = spectral_subtract(&s0, &sn, alpha)?;
    Ok(Experiment3Output {
        profile_s0: energy_profile(&s0),
        profile_subtracted: energy_profile(&subtracted),
        s0,
        sn,
        subtracted,
        nf,
    })
}
