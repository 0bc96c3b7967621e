#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfdenoise::Tfr;

/// Uniform random image on `[0, q]`.
pub fn random_image(rows: usize, cols: usize, q: u32, seed: u64) -> Tfr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(0.0..=q as f64));
    Tfr::image(values, q).unwrap()
}

/// Two flat regions plus uniform noise of the given amplitude, clamped to `[0, q]`.
pub fn noisy_step(rows: usize, cols: usize, q: u32, noise: f64, seed: u64) -> Tfr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qf = q as f64;
    let values = Array2::from_shape_fn((rows, cols), |(_, c)| {
        let base = if c < cols / 2 { 0.25 * qf } else { 0.75 * qf };
        (base + rng.gen_range(-noise..=noise)).clamp(0.0, qf)
    });
    Tfr::image(values, q).unwrap()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn min_max(a: &Array2<f64>) -> (f64, f64) {
    a.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Spearman rank correlation (no tie correction).
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| (x - mean) * (y - mean))
        .sum();
    let var: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    cov / var
}
