//! Sampled one-dimensional signals: synthetic generators, SNR mixing,
//! WAV/CSV ingestion and band-limiting.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Seed used by the experiment runners unless overridden.
pub const DEFAULT_SEED: u64 = 7;

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds (`len / sample_rate`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Discrete L2 norm, `sqrt(sum x^2)`.
    pub fn norm(&self) -> f64 {
        l2_norm(&self.samples)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.samples.is_empty() {
            Err(Error::invalid("signal has no samples"))
        } else {
            Ok(())
        }
    }
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sample_count(duration_s: f64, fs: f64) -> Result<usize> {
    if !(duration_s > 0.0) || !(fs > 0.0) {
        return Err(Error::invalid(format!(
            "duration and sample rate must be positive (got {duration_s} s, {fs} Hz)"
        )));
    }
    let n = (duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    Ok(n)
}

/// Pure tones at 500 and 700 Hz plus the chirps `sin(2π·1000t²)` and
/// `sin(2π·600t³)`, scaled to unit discrete L2 norm.
pub fn gen_tone_chirp_mix(duration_s: f64, fs: f64) -> Result<Signal> {
    let n = sample_count(duration_s, fs)?;
    if fs < 8000.0 {
        return Err(Error::invalid(format!(
            "sample rate {fs} Hz is below 8000 Hz"
        )));
    }
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * PI * 500.0 * t).sin()
                + (2.0 * PI * 700.0 * t).sin()
                + (2.0 * PI * 1000.0 * t * t).sin()
                + (2.0 * PI * 600.0 * t * t * t).sin()
        })
        .collect();
    normalize_unit(&mut samples)?;
    Signal::new(samples, fs)
}

/// I.i.d. uniform samples on `[-1, 1]` before any normalization.
pub fn uniform_samples(n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Seeded uniform noise on `[-1, 1]`, scaled to unit discrete L2 norm.
pub fn gen_uniform_noise(n_samples: usize, sample_rate: f64, seed: u64) -> Result<Signal> {
    if n_samples == 0 {
        return Err(Error::invalid("noise length must be positive"));
    }
    let mut samples = uniform_samples(n_samples, seed);
    normalize_unit(&mut samples)?;
    Signal::new(samples, sample_rate)
}

fn normalize_unit(x: &mut [f64]) -> Result<()> {
    let norm = l2_norm(x);
    if norm == 0.0 {
        return Err(Error::invalid("cannot normalize a zero signal"));
    }
    x.iter_mut().for_each(|v| *v /= norm);
    Ok(())
}

/// Returns `clean + g·noise` with `g` chosen so that
/// `20·log10(‖clean‖ / ‖g·noise‖) = snr_db`.
pub fn mix_at_snr(clean: &Signal, noise: &Signal, snr_db: f64) -> Result<Signal> {
    if clean.len() != noise.len() {
        return Err(Error::invalid(format!(
            "length mismatch: clean has {} samples, noise has {}",
            clean.len(),
            noise.len()
        )));
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::invalid(format!(
            "sample rate mismatch: {} Hz vs {} Hz",
            clean.sample_rate, noise.sample_rate
        )));
    }
    let noise_norm = noise.norm();
    if noise_norm == 0.0 {
        return Err(Error::invalid("noise has zero norm"));
    }
    let gain = noise_gain(clean.norm(), noise_norm, snr_db);
    let samples = clean
        .samples
        .iter()
        .zip(&noise.samples)
        .map(|(c, n)| c + gain * n)
        .collect();
    Signal::new(samples, clean.sample_rate)
}

/// Gain applied to noise of norm `noise_norm` to reach `snr_db` against `clean_norm`.
///
/// Norms that agree to within the unit-normalization tolerance (1e-12) count
/// as equal, so two unit-norm signals mixed at 0 dB add with gain exactly 1.
pub fn noise_gain(clean_norm: f64, noise_norm: f64, snr_db: f64) -> f64 {
    let ratio = clean_norm / noise_norm;
    let ratio = if (ratio - 1.0).abs() <= 1e-12 {
        1.0
    } else {
        ratio
    };
    if snr_db == 0.0 {
        ratio
    } else {
        ratio / 10f64.powf(snr_db / 20.0)
    }
}

/// Reads a 16-bit PCM WAV file. Stereo is averaged to mono; samples are
/// divided by 32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{:?} {}-bit samples (need 16-bit PCM)",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let channels = spec.channels as usize;
    if channels != 1 && channels != 2 {
        return Err(Error::UnsupportedEncoding(format!("{channels} channels")));
    }
    let raw: Vec<i16> = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| wav_error(path, e))?;
    if raw.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    let samples = raw
        .chunks(channels)
        .map(|frame| frame.iter().map(|&s| s as f64).sum::<f64>() / (channels as f64 * 32768.0))
        .collect();
    Signal::new(samples, spec.sample_rate as f64)
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::NotFound => {
            Error::FileNotFound(path.to_path_buf())
        }
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::MalformedWav(format!("{}: truncated file", path.display()))
        }
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedEncoding(format!("{}", path.display())),
        other => Error::MalformedWav(format!("{}: {other}", path.display())),
    }
}

/// Writes a mono 16-bit PCM WAV; samples are scaled by 32768 and clipped.
pub fn write_wav(signal: &Signal, path: impl AsRef<Path>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate.round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let path = path.as_ref();
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &x in &signal.samples {
        let q = (x * 32768.0)
            .round()
            .clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(q).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))?;
    Ok(())
}

/// One sample per line, decimal text.
pub fn write_csv(signal: &Signal, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for x in &signal.samples {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads one sample per line; blank lines are skipped.
pub fn load_csv(path: impl AsRef<Path>, sample_rate: f64) -> Result<Signal> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut samples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| {
            Error::invalid(format!(
                "{}:{}: not a number: {field:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    Signal::new(samples, sample_rate)
}

/// Zero-phase FIR band-pass followed by integer-factor decimation.
///
/// The decimation factor is the smallest integer `d` dividing the input rate
/// with `fs / d <= target_fs`.
pub fn bandpass_downsample(
    signal: &Signal,
    f_lo: f64,
    f_hi: f64,
    target_fs: f64,
) -> Result<Signal> {
    signal.require_nonempty()?;
    let fs = signal.sample_rate;
    if !(0.0 <= f_lo && f_lo < f_hi && f_hi <= target_fs / 2.0 && target_fs / 2.0 <= fs / 2.0) {
        return Err(Error::invalid(format!(
            "band [{f_lo}, {f_hi}] Hz with target rate {target_fs} Hz violates Nyquist constraints for a {fs} Hz signal"
        )));
    }
    let factor = decimation_factor(fs, target_fs)?;
    let out_fs = fs / factor as f64;
    if f_hi > out_fs / 2.0 {
        return Err(Error::invalid(format!(
            "upper band edge {f_hi} Hz exceeds the output Nyquist frequency {} Hz",
            out_fs / 2.0
        )));
    }
    let taps = fir_length(fs, f_lo);
    let kernel = bandpass_kernel(fs, f_lo, f_hi, taps);
    // symmetric kernel: the forward pass and the time-reversed pass are the same centered convolution
    let once = convolve_same(&signal.samples, &kernel);
    let twice = convolve_same(&once, &kernel);
    let samples = twice.into_iter().step_by(factor).collect();
    Signal::new(samples, out_fs)
}

fn decimation_factor(fs: f64, target_fs: f64) -> Result<usize> {
    let mut d = (fs / target_fs).ceil().max(1.0) as usize;
    let fs_int = fs.round() as u64;
    if (fs - fs_int as f64).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "sample rate {fs} Hz is not an integer"
        )));
    }
    while !fs_int.is_multiple_of(d as u64) {
        d += 1;
    }
    Ok(d)
}

fn fir_length(fs: f64, f_lo: f64) -> usize {
    let order = if f_lo > 0.0 {
        (4.0 * fs / f_lo).ceil()
    } else {
        f64::INFINITY
    };
    let n = order.min(4096.0) as usize;
    if n.is_multiple_of(2) {
        n - 1
    } else {
        n
    }
}

fn hamming(taps: usize) -> Vec<f64> {
    if taps == 1 {
        return vec![1.0];
    }
    (0..taps)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (taps - 1) as f64).cos())
        .collect()
}

/// Hamming-windowed sinc low-pass with unit DC gain.
fn lowpass_kernel(fs: f64, cutoff: f64, taps: usize) -> Vec<f64> {
    let window = hamming(taps);
    let centre = (taps - 1) as f64 / 2.0;
    let wc = 2.0 * cutoff / fs;
    let mut h: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let x = k as f64 - centre;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (PI * wc * x).sin() / (PI * wc * x)
            };
            wc * sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

fn bandpass_kernel(fs: f64, f_lo: f64, f_hi: f64, taps: usize) -> Vec<f64> {
    let mut h = lowpass_kernel(fs, f_hi, taps);
    if f_lo > 0.0 {
        let lo = lowpass_kernel(fs, f_lo, taps);
        h.iter_mut().zip(lo).for_each(|(a, b)| *a -= b);
    }
    h
}

/// Centered linear convolution with an odd-length kernel, output the length of `x`.
pub(crate) fn convolve_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len();
    let k = kernel.len();
    let size = (n + k - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(size, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(size, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    inv.process(&mut a);
    let offset = (k - 1) / 2;
    a[offset..offset + n]
        .iter()
        .map(|c| c.re / size as f64)
        .collect()
}
