//! Compares patch distances computed on a Gaussian-smoothed Wigner-Ville
//! distribution with plain pixel differences of the matched spectrogram.
//!
//! Smoothing the Wigner-Ville distribution with the Wigner-Ville distribution
//! of a Gaussian window of standard deviation `σ` gives the spectrogram taken
//! with that window, so the averaged patch distance
//! `F̃(x,y) = |Σ_z G(z)(WV(x+z) - WV(y+z))|²` should match `(S(x) - S(y))²`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tfr::{gaussian_smooth_tfr, window_wv_sigmas, Tfr, TfrKind};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceOptions {
    pub n_pairs: usize,
    pub seed: u64,
    /// Column range the pairs are drawn from; `None` means all columns.
    pub time_range: Option<Range<usize>>,
    /// Row range the pairs are drawn from; `None` means all rows of the WV grid.
    pub freq_range: Option<Range<usize>>,
}

impl Default for CorrespondenceOptions {
    fn default() -> Self {
        Self {
            n_pairs: 500,
            seed: 7,
            time_range: None,
            freq_range: None,
        }
    }
}

/// Maximum over sampled pixel pairs of `|F̃(x,y) - (S(x)-S(y))²| / (1 + (S(x)-S(y))²)`.
///
/// Both matrices are divided by `max(S)` first so the measure does not depend
/// on the signal amplitude. `window_sigma` is the standard deviation, in
/// seconds, of the Gaussian window used for `s`. `wv` and `s` must share
/// the frame and bin spacing; `s` may have extra high-frequency rows.
pub fn f_correspondence(
    wv: &Tfr,
    window_sigma: f64,
    s: &Tfr,
    opts: &CorrespondenceOptions,
) -> Result<f64> {
    if wv.kind != TfrKind::WignerVille {
        return Err(Error::invalid(format!(
            "expected a Wigner-Ville distribution, got {:?}",
            wv.kind
        )));
    }
    if s.kind != TfrKind::Spectrogram {
        return Err(Error::invalid(format!(
            "expected a spectrogram, got {:?}",
            s.kind
        )));
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    if wv.n_time() != s.n_time()
        || s.n_freq() < wv.n_freq()
        || !same(wv.axes.frame_step, s.axes.frame_step)
        || !same(wv.axes.bin_step, s.axes.bin_step)
    {
        return Err(Error::invalid(format!(
            "grid mismatch: WV {}x{} (dt {}, df {}) vs S {}x{} (dt {}, df {})",
            wv.n_freq(),
            wv.n_time(),
            wv.axes.frame_step,
            wv.axes.bin_step,
            s.n_freq(),
            s.n_time(),
            s.axes.frame_step,
            s.axes.bin_step
        )));
    }
    let times = opts.time_range.clone().unwrap_or(0..wv.n_time());
    let freqs = opts.freq_range.clone().unwrap_or(0..wv.n_freq());
    if times.is_empty() || freqs.is_empty() || times.end > wv.n_time() || freqs.end > wv.n_freq() {
        return Err(Error::invalid(
            "sampling region lies outside the common grid",
        ));
    }

    let (sigma_t, sigma_f) = window_wv_sigmas(window_sigma);
    let smoothed = gaussian_smooth_tfr(wv, sigma_t, sigma_f)?;
    let peak = s.values.iter().fold(0.0f64, |m, &v| m.max(v));
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.n_pairs {
        let x = (rng.gen_range(freqs.clone()), rng.gen_range(times.clone()));
        let y = (rng.gen_range(freqs.clone()), rng.gen_range(times.clone()));
        let averaged = ((smoothed.values[x] - smoothed.values[y]) * scale).powi(2);
        let direct = ((s.values[x] - s.values[y]) * scale).powi(2);
        worst = worst.max((averaged - direct).abs() / (1.0 + direct));
    }
    Ok(worst)
}
