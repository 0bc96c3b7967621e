//! Iterated Neighborhood filter with weights frozen at the initial image.
//!
//! With `S_0` quantized to levels `0..=Q`, every pixel of the level set
//! `B_j` receives the same value
//!
//! ```text
//! S_{i+1}(j) = Σ_k a(j,k) 𝒮ⁱ(k) / Σ_k a(j,k) C(k),   a(j,k) = exp(-((j-k)/h)²)
//! ```
//!
//! where `𝒮ⁱ(k)` sums `S_i` over `B_k` and `C(k) = |B_k|`. Since `S_i` stays
//! constant on level sets, an iteration costs O(Q²) no matter how many pixels
//! the image has; only quantization, indexing and the final relabel touch
//! every pixel.

use std::time::Instant;

use ndarray::Array2;

use super::{FilterParams, FilterResult};
use crate::error::{Error, Result};
use crate::quantizer::{build_level_index, quantize, LevelIndex};
use crate::tfr::Tfr;

/// `exp(-(d/h)²)` for level distances `d = 0..=q`.
pub(crate) fn gray_weights(h: f64, q: u32) -> Vec<f64> {
    (0..=q).map(|d| (-(d as f64 / h).powi(2)).exp()).collect()
}

/// One level-set step: output value of every level `j` from the per-level
/// sums. Empty levels are skipped in both sums.
///
/// Levels whose denominator underflows to zero (possible only for empty
/// levels with very small `h`) keep their own index as value.
pub fn nf_level_step(index: &LevelIndex, level_sums: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("h must be positive, got {h}")));
    }
    let n = index.n_levels();
    if level_sums.len() != n {
        return Err(Error::invalid(format!(
            "{} level sums for an index with {n} levels",
            level_sums.len()
        )));
    }
    let occupied: Vec<usize> = (0..n).filter(|&k| index.count(k) > 0).collect();
    if occupied.is_empty() {
        return Err(Error::invalid("level index is empty"));
    }
    let weights = gray_weights(h, (n - 1) as u32);
    Ok(step_with(
        &weights,
        &occupied,
        &index.counts(),
        level_sums,
        0..n,
    ))
}

fn step_with(
    weights: &[f64],
    occupied: &[usize],
    counts: &[usize],
    sums: &[f64],
    levels: impl Iterator<Item = usize>,
) -> Vec<f64> {
    levels
        .map(|j| {
            let (mut num, mut den) = (0.0, 0.0);
            for &k in occupied {
                let a = weights[j.abs_diff(k)];
                num += a * sums[k];
                den += a * counts[k] as f64;
            }
            if den > 0.0 {
                num / den
            } else {
                j as f64
            }
        })
        .collect()
}

/// Iterates the level-set Neighborhood filter until the relative change
/// drops below `params.tol` or `params.max_iter` iterations have run.
///
/// Pixel values start from the quantized image. An image occupying a single
/// level is a fixed point and returns after zero iterations.
pub fn nf_iterate(s0_image: &Tfr, params: &FilterParams) -> Result<FilterResult> {
    params.validate()?;
    let q = s0_image.require_image()?;
    let start = Instant::now();
    let qs = quantize(s0_image, q)?;
    let index = build_level_index(&qs);
    let counts = index.counts();
    let occupied: Vec<usize> = (0..index.n_levels()).filter(|&k| counts[k] > 0).collect();
    let weights = gray_weights(params.h, q);
    let setup_time = start.elapsed().as_secs_f64();

    let iter_start = Instant::now();
    // value carried by each level; only occupied levels matter
    let mut value: Vec<f64> = (0..index.n_levels()).map(|k| k as f64).collect();
    let mut per_iter_change = Vec::new();
    let mut converged = occupied.len() <= 1;
    while !converged && per_iter_change.len() < params.max_iter {
        let sums: Vec<f64> = (0..value.len())
            .map(|k| value[k] * counts[k] as f64)
            .collect();
        let next_occ = step_with(
            &weights,
            &occupied,
            &counts,
            &sums,
            occupied.iter().copied(),
        );
        let change = level_change(&occupied, &counts, &value, &next_occ);
        for (&k, v) in occupied.iter().zip(next_occ) {
            value[k] = v;
        }
        per_iter_change.push(change);
        converged = change < params.tol;
    }
    let values = qs.levels.mapv(|k| value[k as usize]);
    let iteration_time = iter_start.elapsed().as_secs_f64();

    let iterations = per_iter_change.len();
    Ok(FilterResult {
        image: Tfr {
            values,
            axes: s0_image.axes,
            kind: s0_image.kind,
            scale: s0_image.scale,
        },
        iterations,
        per_iter_change,
        hit_max_iter: !converged,
        setup_time,
        iteration_time,
        wall_time: setup_time + iteration_time,
    })
}

/// Relative L2 change over the full image, evaluated per level.
fn level_change(occupied: &[usize], counts: &[usize], old: &[f64], new_occ: &[f64]) -> f64 {
    let (mut diff, mut base) = (0.0, 0.0);
    for (&k, &v) in occupied.iter().zip(new_occ) {
        let c = counts[k] as f64;
        diff += c * (v - old[k]).powi(2);
        base += c * old[k] * old[k];
    }
    if base == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff / base).sqrt()
    }
}

/// Literal evaluation of one frozen-weight step over all pixel pairs:
/// `out(x) = Σ_y w(x,y) S_i(y) / Σ_y w(x,y)`, `w = exp(-(S_0(x) - S_0(y))² / h²)`.
///
/// Costs O(P²) for P pixels. To reproduce [`nf_iterate`], pass the quantized
/// `S_0`.
pub fn nf_brute_force(s0_image: &Tfr, si_image: &Tfr, h: f64) -> Result<Tfr> {
    if s0_image.values.dim() != si_image.values.dim() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            s0_image.values.dim(),
            si_image.values.dim()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::invalid(format!("h must be positive, got {h}")));
    }
    let s0: Vec<f64> = s0_image.values.iter().copied().collect();
    let si: Vec<f64> = si_image.values.iter().copied().collect();
    let out: Vec<f64> = s0
        .iter()
        .map(|&x| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&y, &v) in s0.iter().zip(&si) {
                let w = (-((x - y) / h).powi(2)).exp();
                num += w * v;
                den += w;
            }
            num / den
        })
        .collect();
    let values = Array2::from_shape_vec(si_image.values.raw_dim(), out).expect("same shape");
    Ok(si_image.with_values(values))
}
