//! Evaluation measures on time-frequency images: relative MSE,
//! instantaneous-frequency points, frequency-integrated energy and spectral
//! subtraction.

use std::io::Write;
use std::path::Path;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tfr::{Axes, Tfr};

fn same_shape(a: &Tfr, b: &Tfr) -> Result<()> {
    if a.values.dim() != b.values.dim() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            a.values.dim(),
            b.values.dim()
        )));
    }
    Ok(())
}

/// `‖S_clean - S_filtered‖ / ‖S_clean‖` with Frobenius norms.
pub fn relative_mse(s_clean: &Tfr, s_filtered: &Tfr) -> Result<f64> {
    same_shape(s_clean, s_filtered)?;
    let (mut diff, mut base) = (0.0, 0.0);
    Zip::from(&s_clean.values)
        .and(&s_filtered.values)
        .for_each(|&c, &f| {
            diff += (c - f) * (c - f);
            base += c * c;
        });
    if base == 0.0 {
        return Err(Error::invalid("clean image has zero norm"));
    }
    Ok((diff / base).sqrt())
}

/// One instantaneous-frequency candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfPoint {
    /// Frame time, seconds.
    pub t: f64,
    /// 1-based ordinal of the component within its frame, from low to high frequency.
    pub n: usize,
    pub freq_hz: f64,
    /// Mean of the thresholded image over the component.
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfTrack {
    pub points: Vec<IfPoint>,
    pub beta: f64,
    pub i_min: f64,
}

impl IfTrack {
    pub fn components_at(&self, t: f64) -> Vec<&IfPoint> {
        self.points.iter().filter(|p| p.t == t).collect()
    }

    /// CSV with columns `t,n,freq_hz,intensity`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,n,freq_hz,intensity")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.t, p.n, p.freq_hz, p.intensity)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Threshold for [`extract_if_lines`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    /// Mean of the image over the whole grid.
    Auto,
    Value(f64),
}

/// Default minimum component intensity, as a fraction of `Q`.
pub const DEFAULT_I_MIN_FRACTION: f64 = 0.1;

/// Per frame, keeps `v = S` where `S >= β`, splits the bins with `v > 0` into
/// runs of consecutive bins and reports each run's intensity-weighted mean
/// frequency. Runs whose mean intensity is below `i_min` are dropped. The
/// 0 Hz and Nyquist bins are excluded.
pub fn extract_if_lines(s: &Tfr, beta: Beta, i_min: f64) -> IfTrack {
    let beta = match beta {
        Beta::Auto => s.values.mean().unwrap_or(0.0),
        Beta::Value(b) => b,
    };
    let axes = s.axes;
    let nyquist = axes.nyquist();
    let rows: Vec<usize> = (0..s.n_freq())
        .filter(|&r| {
            let f = axes.freq_of(r);
            f > 0.0 && f < nyquist * (1.0 - 1e-12)
        })
        .collect();
    let mut points = Vec::new();
    for m in 0..s.n_time() {
        let column = s.values.column(m);
        let t = axes.time_of(m);
        let mut ordinal = 0;
        let mut run: Option<(f64, f64, usize)> = None; // (Σ f·v, Σ v, bins)
        let mut prev_row: Option<usize> = None;
        let mut flush = |run: &mut Option<(f64, f64, usize)>, points: &mut Vec<IfPoint>| {
            if let Some((fv, v, bins)) = run.take() {
                let intensity = v / bins as f64;
                if intensity >= i_min {
                    ordinal += 1;
                    points.push(IfPoint {
                        t,
                        n: ordinal,
                        freq_hz: fv / v,
                        intensity,
                    });
                }
            }
        };
        for &r in &rows {
            let s_val = column[r];
            let v = if s_val >= beta { s_val } else { 0.0 };
            let contiguous = prev_row.is_some_and(|p| p + 1 == r);
            if v > 0.0 {
                if !contiguous {
                    flush(&mut run, &mut points);
                }
                let f = axes.freq_of(r);
                let acc = run.get_or_insert((0.0, 0.0, 0));
                acc.0 += f * v;
                acc.1 += v;
                acc.2 += 1;
            } else {
                flush(&mut run, &mut points);
            }
            prev_row = Some(r);
        }
        flush(&mut run, &mut points);
    }
    IfTrack {
        points,
        beta,
        i_min,
    }
}

/// Frequency-integrated energy `E(t_m) = Σ_n S(n, m)·Δf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
}

impl EnergyProfile {
    /// Index of the largest value; the first one on ties.
    pub fn argmax(&self) -> Option<usize> {
        self.energy
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &e)| match best {
                Some((_, b)) if b >= e => best,
                _ => Some((i, e)),
            })
            .map(|(i, _)| i)
    }

    /// CSV with columns `t,energy`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,energy")?;
        for (t, e) in self.times.iter().zip(&self.energy) {
            writeln!(out, "{t},{e}")?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn energy_profile(s: &Tfr) -> EnergyProfile {
    let Axes { bin_step, .. } = s.axes;
    let times = (0..s.n_time()).map(|m| s.axes.time_of(m)).collect();
    let energy = s
        .values
        .columns()
        .into_iter()
        .map(|c| c.sum() * bin_step)
        .collect();
    EnergyProfile { times, energy }
}

/// Zeroes `S0` wherever `Sn > alpha`.
pub fn spectral_subtract(s0: &Tfr, sn: &Tfr, alpha: f64) -> Result<Tfr> {
    same_shape(s0, sn)?;
    if let Some(q) = s0.q() {
        if !(0.0..=q as f64).contains(&alpha) {
            return Err(Error::invalid(format!("alpha {alpha} outside [0, {q}]")));
        }
    }
    let mut values = s0.values.clone();
    Zip::from(&mut values).and(&sn.values).for_each(|v, &n| {
        if n > alpha {
            *v = 0.0;
        }
    });
    Ok(s0.with_values(values))
}
