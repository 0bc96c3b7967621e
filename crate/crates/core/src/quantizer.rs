//! Integer quantization of an image-range spectrogram and its level-set
//! partition.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tfr::{Axes, Tfr, TfrKind};

/// Integer-level image with entries in `0..=q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSpectrogram {
    pub levels: Array2<u16>,
    pub q: u32,
    pub source_axes: Axes,
}

impl QuantizedSpectrogram {
    /// Levels as a real-valued image on the same grid.
    pub fn to_image(&self) -> Tfr {
        Tfr {
            values: self.levels.mapv(f64::from),
            axes: self.source_axes,
            kind: TfrKind::Image { q: self.q },
            scale: None,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.levels.dim()
    }
}

/// Level `k` for `v ∈ [k - 1/2, k + 1/2)`; `[q - 1/2, q]` maps to `q`.
#[inline]
pub fn level_of(v: f64, q: u32) -> u16 {
    ((v + 0.5).floor() as u32).min(q) as u16
}

pub fn quantize(image: &Tfr, q: u32) -> Result<QuantizedSpectrogram> {
    if q == 0 || q > u16::MAX as u32 {
        return Err(Error::invalid(format!(
            "Q must be in 1..={}, got {q}",
            u16::MAX
        )));
    }
    if let TfrKind::Image { q: image_q } = image.kind {
        if image_q != q {
            return Err(Error::invalid(format!(
                "image range [0, {image_q}] does not match Q = {q}"
            )));
        }
    } else {
        return Err(Error::invalid(format!(
            "expected an image, got {:?}",
            image.kind
        )));
    }
    let qf = q as f64;
    if let Some(bad) = image.values.iter().find(|&&v| !(0.0..=qf).contains(&v)) {
        return Err(Error::invalid(format!(
            "image value {bad} outside [0, {q}]"
        )));
    }
    Ok(QuantizedSpectrogram {
        levels: image.values.mapv(|v| level_of(v, q)),
        q,
        source_axes: image.axes,
    })
}

/// Partition of the pixel grid into the level sets `B_k`.
///
/// Pixels are stored as row-major linear indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelIndex {
    members: Vec<Vec<usize>>,
    shape: (usize, usize),
}

impl LevelIndex {
    /// Number of levels, `q + 1`.
    pub fn n_levels(&self) -> usize {
        self.members.len()
    }

    /// Linear indices of the pixels at level `k`.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    /// `(row, col)` coordinates of the pixels at level `k`.
    pub fn coords(&self, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.shape.1;
        self.members[k].iter().map(move |&i| (i / cols, i % cols))
    }

    /// `C(k)`, the pixel count of every level.
    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn count(&self, k: usize) -> usize {
        self.members[k].len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn total(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Per-level sums `Σ_{y ∈ B_k} values(y)`.
    pub fn level_sums(&self, values: &Array2<f64>) -> Vec<f64> {
        let flat = values.as_slice().expect("standard layout");
        self.members
            .iter()
            .map(|m| m.iter().map(|&i| flat[i]).sum())
            .collect()
    }

    /// Writes `level,count` rows.
    pub fn write_counts_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "level,count")?;
        for (k, m) in self.members.iter().enumerate() {
            writeln!(out, "{k},{}", m.len())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Single pass over the pixels, appending each to its level's member list.
pub fn build_level_index(qs: &QuantizedSpectrogram) -> LevelIndex {
    let mut members = vec![Vec::new(); qs.q as usize + 1];
    for (i, &k) in qs.levels.iter().enumerate() {
        members[k as usize].push(i);
    }
    LevelIndex {
        members,
        shape: qs.shape(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn half_open_interval_rule() {
        assert_eq!(level_of(3.49, 255), 3);
        assert_eq!(level_of(3.5, 255), 4);
        assert_eq!(level_of(0.0, 255), 0);
        assert_eq!(level_of(0.4999, 255), 0);
        assert_eq!(level_of(254.5, 255), 255);
        assert_eq!(level_of(255.0, 255), 255);
    }

    #[test]
    fn quantize_zero_image() {
        let img = Tfr::image(Array2::zeros((4, 5)), 255).unwrap();
        let qs = quantize(&img, 255).unwrap();
        assert!(qs.levels.iter().all(|&k| k == 0));
    }

    #[test]
    fn quantize_rejects_out_of_range_and_mismatched_q() {
        let mut img = Tfr::image(array![[0.0, 10.0]], 255).unwrap();
        assert!(quantize(&img, 100).is_err());
        img.values[[0, 1]] = 300.0;
        assert!(quantize(&img, 255).is_err());
        img.values[[0, 1]] = -0.5;
        assert!(quantize(&img, 255).is_err());
    }

    #[test]
    fn index_counts_small_image() {
        let img = Tfr::image(array![[0.0, 0.2], [1.0, 2.0]], 255).unwrap();
        let idx = build_level_index(&quantize(&img, 255).unwrap());
        let c = idx.counts();
        assert_eq!(&c[..4], &[2, 1, 1, 0]);
        assert!(c[3..].iter().all(|&n| n == 0));
        assert_eq!(idx.total(), 4);
        assert_eq!(idx.coords(2).collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn level_sums_add_member_values() {
        let img = Tfr::image(array![[0.0, 0.2], [1.0, 1.2]], 255).unwrap();
        let idx = build_level_index(&quantize(&img, 255).unwrap());
        let sums = idx.level_sums(&img.values);
        assert!((sums[0] - 0.2).abs() < 1e-15);
        assert!((sums[1] - 2.2).abs() < 1e-15);
    }
}
