//! Nonlocal Means with Gaussian-weighted patch distances.
//!
//! Every pixel is compared with every other pixel, so the cost is
//! O(P²·patch); use it on small time-frequency matrices only.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tfr::{reflect, Tfr};

/// `NL(v)(x) = Σ_y exp(-F(x,y)/h²) v(y) / Σ_y exp(-F(x,y)/h²)` with
/// `F(x,y) = Σ_z G_σ(z) (v(x+z) - v(y+z))²`, `G_σ` normalized to unit sum
/// and truncated at `3σ`, reflective boundaries.
pub fn nlmeans(v: &Tfr, h: f64, sigma_patch: f64) -> Result<Tfr> {
    if !(h > 0.0) || !(sigma_patch > 0.0) {
        return Err(Error::invalid(format!(
            "h and sigma must be positive (got h = {h}, sigma = {sigma_patch})"
        )));
    }
    let (rows, cols) = v.values.dim();
    let radius = (3.0 * sigma_patch).ceil() as isize;
    let mut offsets = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f64;
            offsets.push((dy, dx, (-d2 / (2.0 * sigma_patch * sigma_patch)).exp()));
        }
    }
    let total: f64 = offsets.iter().map(|o| o.2).sum();
    let weights: Vec<f64> = offsets.iter().map(|o| o.2 / total).collect();

    // patches[p] holds the reflected neighborhood of pixel p in offset order
    let n = rows * cols;
    let patch_len = offsets.len();
    let mut patches = vec![0.0; n * patch_len];
    for r in 0..rows {
        for c in 0..cols {
            let p = r * cols + c;
            for (slot, &(dy, dx, _)) in patches[p * patch_len..(p + 1) * patch_len]
                .iter_mut()
                .zip(&offsets)
            {
                *slot = v.values[[
                    reflect(r as isize + dy, rows),
                    reflect(c as isize + dx, cols),
                ]];
            }
        }
    }
    let flat: Vec<f64> = v.values.iter().copied().collect();
    let inv_h2 = 1.0 / (h * h);
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| {
            let px = &patches[x * patch_len..(x + 1) * patch_len];
            let (mut num, mut den) = (0.0, 0.0);
            for (y, &vy) in flat.iter().enumerate() {
                let py = &patches[y * patch_len..(y + 1) * patch_len];
                let dist: f64 = px
                    .iter()
                    .zip(py)
                    .zip(&weights)
                    .map(|((a, b), g)| g * (a - b) * (a - b))
                    .sum();
                let w = (-dist * inv_h2).exp();
                num += w * vy;
                den += w;
            }
            num / den
        })
        .collect();
    Ok(v.with_values(Array2::from_shape_vec((rows, cols), out).expect("shape")))
}
