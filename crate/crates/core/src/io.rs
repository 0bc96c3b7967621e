//! File exports: binary PGM images and CSV matrices.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tfr::Tfr;

/// Binary PGM (P5, maxval 255): one column per time frame, highest
/// frequency on the top row. Values are mapped from `[0, Q]` to `0..=255`.
pub fn write_pgm(image: &Tfr, path: impl AsRef<Path>) -> Result<()> {
    let q = image.require_image()? as f64;
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&pgm_bytes(image, q))?;
    out.flush()?;
    Ok(())
}

fn pgm_bytes(image: &Tfr, q: f64) -> Vec<u8> {
    let (rows, cols) = image.values.dim();
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    bytes.reserve(rows * cols);
    for r in (0..rows).rev() {
        for c in 0..cols {
            let v = (image.values[[r, c]] / q * 255.0).round().clamp(0.0, 255.0);
            bytes.push(v as u8);
        }
    }
    bytes
}

/// Parsed PGM header and pixels, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    let bytes = std::fs::read(path)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::invalid("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::invalid(format!(
            "not a binary PGM: magic {}",
            fields[0]
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::invalid(format!("bad PGM field {s:?}")))
    };
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    let pixels = bytes.get(pos..).unwrap_or(&[]).to_vec();
    if pixels.len() != width * height {
        return Err(Error::invalid(format!(
            "PGM has {} pixel bytes, expected {}",
            pixels.len(),
            width * height
        )));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

/// Row-major CSV. The header row is `freq_hz` followed by the frame times;
/// every following row starts with its bin frequency.
pub fn write_tfr_csv(tfr: &Tfr, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write!(out, "freq_hz")?;
    for m in 0..tfr.n_time() {
        write!(out, ",{}", tfr.axes.time_of(m))?;
    }
    writeln!(out)?;
    for (r, row) in tfr.values.rows().into_iter().enumerate() {
        write!(out, "{}", tfr.axes.freq_of(r))?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pgm_layout_puts_high_frequencies_on_top() {
        let img = Tfr::image(array![[0.0, 255.0, 127.5], [10.0, 20.0, 30.0]], 255).unwrap();
        let bytes = pgm_bytes(&img, 255.0);
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[10, 20, 30, 0, 255, 128]);
    }

    #[test]
    fn pgm_scales_from_q() {
        let img = Tfr::image(array![[0.0, 50.0, 100.0]], 100).unwrap();
        let bytes = pgm_bytes(&img, 100.0);
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
    }
}
