//! Time-frequency representations: Gaussian-window STFT, spectrogram,
//! discrete pseudo Wigner-Ville distribution, Gaussian smoothing and the
//! affine map of a spectrogram onto the image range `[0, Q]`.
//!
//! Matrices are stored with frequency bins along rows and time frames along
//! columns.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Grid spacing of a time-frequency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    /// Seconds between consecutive columns.
    pub frame_step: f64,
    /// Hz between consecutive rows; row 0 is 0 Hz.
    pub bin_step: f64,
    /// Sample rate of the underlying signal (the frequency axis ends at `sample_rate / 2`).
    pub sample_rate: f64,
}

impl Axes {
    pub fn time_of(&self, col: usize) -> f64 {
        col as f64 * self.frame_step
    }

    pub fn freq_of(&self, row: usize) -> f64 {
        row as f64 * self.bin_step
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    /// Surface element `dA` of one cell, in seconds·Hz.
    pub fn cell_area(&self) -> f64 {
        self.frame_step * self.bin_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TfrKind {
    Spectrogram,
    WignerVille,
    /// Values lie in `[0, q]`.
    Image {
        q: u32,
    },
}

/// Affine map applied by [`normalize_to_image`]: `image = (raw - offset) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScale {
    pub offset: f64,
    pub scale: f64,
}

/// A dense real time-frequency matrix with axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Tfr {
    pub values: Array2<f64>,
    pub axes: Axes,
    pub kind: TfrKind,
    pub scale: Option<ImageScale>,
}

impl Tfr {
    pub fn new(values: Array2<f64>, axes: Axes, kind: TfrKind) -> Result<Self> {
        match kind {
            TfrKind::Spectrogram => {
                if values.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::invalid("spectrogram values must be nonnegative"));
                }
            }
            TfrKind::Image { q } => check_image_range(&values, q)?,
            TfrKind::WignerVille => {}
        }
        Ok(Self {
            values,
            axes,
            kind,
            scale: None,
        })
    }

    /// Wraps an image-range matrix with unit axes; handy for filtering
    /// arbitrary images.
    pub fn image(values: Array2<f64>, q: u32) -> Result<Self> {
        let axes = Axes {
            frame_step: 1.0,
            bin_step: 1.0,
            sample_rate: 2.0 * values.nrows() as f64,
        };
        Self::new(values, axes, TfrKind::Image { q })
    }

    pub fn n_freq(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_time(&self) -> usize {
        self.values.ncols()
    }

    pub fn q(&self) -> Option<u32> {
        match self.kind {
            TfrKind::Image { q } => Some(q),
            _ => None,
        }
    }

    pub(crate) fn require_image(&self) -> Result<u32> {
        self.q()
            .ok_or_else(|| Error::invalid(format!("expected an image, got {:?}", self.kind)))
    }

    /// Same axes and kind, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Self {
        Self {
            values,
            axes: self.axes,
            kind: self.kind,
            scale: self.scale,
        }
    }

    /// Undoes [`normalize_to_image`] using the stored scale.
    pub fn denormalized(&self) -> Result<Array2<f64>> {
        let s = self
            .scale
            .ok_or_else(|| Error::invalid("image carries no normalization metadata"))?;
        Ok(self.values.mapv(|v| v / s.scale + s.offset))
    }
}

fn check_image_range(values: &Array2<f64>, q: u32) -> Result<()> {
    let qf = q as f64;
    if let Some(bad) = values.iter().find(|&&v| !(0.0..=qf).contains(&v)) {
        return Err(Error::invalid(format!(
            "image value {bad} outside [0, {q}]"
        )));
    }
    Ok(())
}

/// Complex short-time Fourier transform, nonnegative-frequency bins only.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub values: Array2<Complex64>,
    pub axes: Axes,
    pub n_fft: usize,
}

/// Symmetric window with unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub coefficients: Vec<f64>,
    /// Standard deviation in samples.
    pub sigma: f64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Sampled Gaussian `exp(-(k-c)^2 / 2σ^2)` centered at `c = (length-1)/2`,
/// scaled to unit L2 norm.
pub fn gaussian_window(sigma_samples: f64, length: usize) -> Result<Window> {
    if !(sigma_samples > 0.0) || !sigma_samples.is_finite() {
        return Err(Error::invalid(format!(
            "window sigma must be positive, got {sigma_samples}"
        )));
    }
    if length.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "window length must be odd, got {length}"
        )));
    }
    let half = (length / 2) as isize;
    let mut coefficients: Vec<f64> = (-half..=half)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma_samples * sigma_samples)).exp())
        .collect();
    let norm = coefficients.iter().map(|v| v * v).sum::<f64>().sqrt();
    coefficients.iter_mut().for_each(|v| *v /= norm);
    // exact symmetry regardless of rounding in the two halves
    for k in 0..coefficients.len() / 2 {
        let mirror = coefficients.len() - 1 - k;
        coefficients[mirror] = coefficients[k];
    }
    Ok(Window {
        coefficients,
        sigma: sigma_samples,
    })
}

/// Smallest odd window length covering `±radius·σ`.
pub fn window_length_for(sigma_samples: f64, radius: f64) -> usize {
    2 * (radius * sigma_samples).ceil() as usize + 1
}

/// Number of frames produced by [`stft`]: one per `hop` samples, frame `m`
/// centered on sample `m·hop`.
pub fn frame_count(n_samples: usize, hop: usize) -> usize {
    n_samples.div_ceil(hop)
}

/// Windowed DFT of frames centered at `m·hop`; samples outside the signal
/// are zero. Stores `n_fft/2 + 1` bins.
pub fn stft(signal: &Signal, window: &Window, hop: usize, n_fft: usize) -> Result<Stft> {
    if hop == 0 {
        return Err(Error::invalid("hop must be at least 1"));
    }
    if window.len() > n_fft {
        return Err(Error::invalid(format!(
            "window length {} exceeds FFT length {n_fft}",
            window.len()
        )));
    }
    if signal.len() < window.len() {
        return Err(Error::invalid(format!(
            "signal ({} samples) is shorter than the window ({})",
            signal.len(),
            window.len()
        )));
    }
    let n_bins = n_fft / 2 + 1;
    let n_frames = frame_count(signal.len(), hop);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let half = (window.len() / 2) as isize;
    let mut values = Array2::<Complex64>::zeros((n_bins, n_frames));
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for m in 0..n_frames {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let centre = (m * hop) as isize;
        for (k, w) in window.coefficients.iter().enumerate() {
            let idx = centre - half + k as isize;
            if idx >= 0 && (idx as usize) < signal.len() {
                buf[k] = Complex64::new(signal.samples[idx as usize] * w, 0.0);
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (bin, v) in buf.iter().take(n_bins).enumerate() {
            values[[bin, m]] = *v;
        }
    }
    let axes = Axes {
        frame_step: hop as f64 / signal.sample_rate,
        bin_step: signal.sample_rate / n_fft as f64,
        sample_rate: signal.sample_rate,
    };
    Ok(Stft {
        values,
        axes,
        n_fft,
    })
}

/// Element-wise squared magnitude of the STFT.
pub fn spectrogram(stft_out: &Stft) -> Tfr {
    Tfr {
        values: stft_out.values.mapv(|z| z.norm_sqr()),
        axes: stft_out.axes,
        kind: TfrKind::Spectrogram,
        scale: None,
    }
}

/// Affine map of `[min, max]` onto `[0, q]`; the applied map is kept in
/// `scale` so the raw values can be recovered.
pub fn normalize_to_image(s: &Tfr, q: u32) -> Result<Tfr> {
    if q == 0 {
        return Err(Error::invalid("Q must be positive"));
    }
    let (lo, hi) = min_max(&s.values);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("matrix contains non-finite values"));
    }
    if hi <= lo {
        return Err(Error::DegenerateRange(s.values.len()));
    }
    let range = hi - lo;
    let qf = q as f64;
    let values = s.values.mapv(|v| ((v - lo) / range * qf).clamp(0.0, qf));
    Ok(Tfr {
        values,
        axes: s.axes,
        kind: TfrKind::Image { q },
        scale: Some(ImageScale {
            offset: lo,
            scale: qf / range,
        }),
    })
}

pub(crate) fn min_max(values: &Array2<f64>) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Analytic signal `f + iH(f)` by zeroing negative frequencies.
pub fn analytic_signal(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= gain / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Pseudo Wigner-Ville distribution with `max_lag` lags and
/// `(max_lag + 1).next_power_of_two()` frequency bins.
pub fn pseudo_wigner_ville(signal: &Signal, max_lag: usize) -> Result<Tfr> {
    pseudo_wigner_ville_bins(signal, max_lag, (max_lag + 1).next_power_of_two())
}

/// Discrete pseudo Wigner-Ville distribution of the analytic signal `z`.
///
/// For every sample `n` the lag product `z[n+τ]·conj(z[n-τ])`, `|τ| <= (max_lag-1)/2`,
/// is transformed over `τ` with an `n_bins`-point DFT. The doubled lag places
/// bin `k` at `k·fs / (2·n_bins)` Hz, so `n_bins` rows cover `[0, fs/2)`.
///
/// The output is scaled by 1/2 so that smoothing it with the Wigner-Ville
/// distribution of a unit-norm Gaussian window reproduces the spectrogram of
/// the real input computed with that window.
pub fn pseudo_wigner_ville_bins(signal: &Signal, max_lag: usize, n_bins: usize) -> Result<Tfr> {
    signal.require_nonempty()?;
    if max_lag.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "max_lag must be odd, got {max_lag}"
        )));
    }
    if max_lag > signal.len() {
        return Err(Error::invalid(format!(
            "max_lag {max_lag} exceeds the signal length {}",
            signal.len()
        )));
    }
    if max_lag > n_bins {
        return Err(Error::invalid(format!(
            "max_lag {max_lag} exceeds the bin count {n_bins}"
        )));
    }
    let z = analytic_signal(&signal.samples);
    let n = z.len() as isize;
    let half = (max_lag / 2) as isize;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_bins);
    let mut values = Array2::<f64>::zeros((n_bins, z.len()));
    let mut buf = vec![Complex64::new(0.0, 0.0); n_bins];
    let mut max_abs: f64 = 0.0;
    let mut max_imag: f64 = 0.0;
    for t in 0..n {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let reach = half.min(t).min(n - 1 - t);
        for tau in -reach..=reach {
            let prod = z[(t + tau) as usize] * z[(t - tau) as usize].conj();
            buf[tau.rem_euclid(n_bins as isize) as usize] += prod;
        }
        fft.process(&mut buf);
        for (k, c) in buf.iter().enumerate() {
            values[[k, t as usize]] = 0.5 * c.re;
            max_abs = max_abs.max(c.norm());
            max_imag = max_imag.max(c.im.abs());
        }
    }
    debug_assert!(
        max_imag <= 1e-9 * max_abs.max(1e-300) + 1e-300,
        "imaginary residue {max_imag}"
    );
    let axes = Axes {
        frame_step: 1.0 / signal.sample_rate,
        bin_step: signal.sample_rate / (2.0 * n_bins as f64),
        sample_rate: signal.sample_rate,
    };
    Tfr::new(values, axes, TfrKind::WignerVille)
}

/// Index into `[0, n)` under half-sample symmetric reflection.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Normalized sampled Gaussian truncated at `4σ` (`σ` in pixels).
pub(crate) fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// 1-D convolution along `axis` with reflective boundaries.
pub(crate) fn convolve_axis(values: &Array2<f64>, kernel: &[f64], axis: Axis) -> Array2<f64> {
    let radius = (kernel.len() / 2) as isize;
    let mut out = Array2::<f64>::zeros(values.raw_dim());
    for (src, mut dst) in values.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        let n = src.len();
        for i in 0..n {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                acc += w * src[reflect(i as isize + j as isize - radius, n)];
            }
            dst[i] = acc;
        }
    }
    out
}

/// Separable Gaussian smoothing in physical units (`sigma_t` seconds,
/// `sigma_f` Hz), reflective boundaries, kernel truncated at `4σ`.
pub fn gaussian_smooth_tfr(w: &Tfr, sigma_t: f64, sigma_f: f64) -> Result<Tfr> {
    if !(sigma_t > 0.0) || !(sigma_f > 0.0) {
        return Err(Error::invalid(format!(
            "smoothing sigmas must be positive (got {sigma_t} s, {sigma_f} Hz)"
        )));
    }
    let along_time = gaussian_kernel(sigma_t / w.axes.frame_step);
    let along_freq = gaussian_kernel(sigma_f / w.axes.bin_step);
    let tmp = convolve_axis(&w.values, &along_time, Axis(1));
    let out = convolve_axis(&tmp, &along_freq, Axis(0));
    Ok(w.with_values(out))
}

/// Smoothing widths `(σ_t, σ_f)` of the Wigner-Ville distribution of a unit
/// norm Gaussian window with standard deviation `window_sigma_s` seconds.
pub fn window_wv_sigmas(window_sigma_s: f64) -> (f64, f64) {
    let sigma_t = window_sigma_s / 2f64.sqrt();
    let sigma_f = 1.0 / (2.0 * PI * window_sigma_s * 2f64.sqrt());
    (sigma_t, sigma_f)
}
