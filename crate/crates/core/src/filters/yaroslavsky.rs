//! Yaroslavsky (SUSAN/bilateral-type) filter iterated with frozen weights.
//!
//! The weight between pixels `x` (level `j`) and `y` (level `k`) is
//! `exp(-((j-k)/h)²) · exp(-(|y-x|/ρ)²)` with distances in pixels. Unlike the
//! Neighborhood filter the spatial factor differs for every pixel, so each
//! iteration visits the whole neighborhood of every pixel.

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use super::nf::gray_weights;
use super::{relative_change, FilterParams, FilterResult};
use crate::error::Result;
use crate::quantizer::quantize;
use crate::tfr::Tfr;

/// Spatial stencil: for every row offset `dy`, the admissible column
/// half-width and the weights `exp(-(dx² + dy²)/ρ²)`.
struct Stencil {
    radius: usize,
    half_widths: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl Stencil {
    fn new(rho: f64, truncate: bool, shape: (usize, usize)) -> Self {
        let (radius, cutoff2) = if truncate {
            let r = 3.0 * rho;
            (r.floor() as usize, r * r)
        } else {
            (shape.0.max(shape.1), f64::INFINITY)
        };
        let mut half_widths = Vec::with_capacity(2 * radius + 1);
        let mut rows = Vec::with_capacity(2 * radius + 1);
        for dy in -(radius as isize)..=radius as isize {
            let dy2 = (dy * dy) as f64;
            let hw = if cutoff2.is_finite() {
                ((cutoff2 - dy2).max(0.0).sqrt().floor() as usize).min(radius)
            } else {
                radius
            };
            half_widths.push(hw);
            rows.push(
                (-(radius as isize)..=radius as isize)
                    .map(|dx| (-((dx * dx) as f64 + dy2) / (rho * rho)).exp())
                    .collect(),
            );
        }
        Self {
            radius,
            half_widths,
            rows,
        }
    }
}

/// Weighted sums `Σ_y w(x,y)·values(y)` for every pixel `x`.
fn weighted_sums(
    levels: &[u16],
    values: &[f64],
    shape: (usize, usize),
    table: &[Vec<f64>],
    stencil: &Stencil,
) -> Vec<f64> {
    let (rows, cols) = shape;
    let r = stencil.radius as isize;
    let mut out = vec![0.0; rows * cols];
    out.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(row, out_row)| {
            for (col, slot) in out_row.iter_mut().enumerate() {
                let a = &table[levels[row * cols + col] as usize];
                let mut acc = 0.0;
                for (oy, dy) in (-r..=r).enumerate() {
                    let yy = row as isize + dy;
                    if yy < 0 || yy >= rows as isize {
                        continue;
                    }
                    let hw = stencil.half_widths[oy] as isize;
                    let c0 = (col as isize - hw).max(0) as usize;
                    let c1 = (col as isize + hw).min(cols as isize - 1) as usize;
                    let g = &stencil.rows[oy];
                    let base = yy as usize * cols;
                    let lv = &levels[base + c0..=base + c1];
                    let sv = &values[base + c0..=base + c1];
                    let g0 = (c0 as isize - col as isize + r) as usize;
                    let g = &g[g0..g0 + lv.len()];
                    for ((&k, &v), &gw) in lv.iter().zip(sv).zip(g) {
                        acc += gw * a[k as usize] * v;
                    }
                }
                *slot = acc;
            }
        });
    out
}

/// Runs the frozen-weight Yaroslavsky iteration for `params.pde_steps()`
/// iterations (the same count as the TV flow), starting from the quantized image.
pub fn yaroslavsky_iterate(s0_image: &Tfr, params: &FilterParams) -> Result<FilterResult> {
    params.validate()?;
    let q = s0_image.require_image()?;
    let steps = params.pde_steps()?;
    let start = Instant::now();
    let qs = quantize(s0_image, q)?;
    let shape = qs.shape();
    let levels: Vec<u16> = qs.levels.iter().copied().collect();
    let gw = gray_weights(params.h, q);
    let table: Vec<Vec<f64>> = (0..=q as usize)
        .map(|j| (0..=q as usize).map(|k| gw[j.abs_diff(k)]).collect())
        .collect();
    let stencil = Stencil::new(params.rho, params.truncate_spatial, shape);
    let ones = vec![1.0; levels.len()];
    let norm = weighted_sums(&levels, &ones, shape, &table, &stencil);
    let setup_time = start.elapsed().as_secs_f64();

    let iter_start = Instant::now();
    let mut current: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    let mut per_iter_change = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut next = weighted_sums(&levels, &current, shape, &table, &stencil);
        next.iter_mut().zip(&norm).for_each(|(v, c)| *v /= c);
        per_iter_change.push(relative_change(&next, &current));
        current = next;
    }
    let values = Array2::from_shape_vec(shape, current).expect("shape");
    let iteration_time = iter_start.elapsed().as_secs_f64();

    Ok(FilterResult {
        image: s0_image.with_values(values),
        iterations: steps,
        per_iter_change,
        hit_max_iter: false,
        setup_time,
        iteration_time,
        wall_time: setup_time + iteration_time,
    })
}
