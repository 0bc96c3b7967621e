//! Denoising of one-dimensional signals through their time-frequency images.
//!
//! A signal is turned into a Gaussian-window spectrogram, normalized to the
//! gray range `[0, Q]` and filtered as an image. Three filters are provided:
//! the level-set Neighborhood filter (cost per iteration independent of the
//! image size), the Yaroslavsky filter and a transport plus total-variation
//! flow. The [`analysis`] module extracts instantaneous-frequency points and
//! energy profiles from the results, and [`experiments`] wires everything into
//! the reproducible runs used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod io;
pub mod quantizer;
pub mod signal;
pub mod tfr;

pub use error::{Error, Result};
pub use filters::{FilterKind, FilterParams, FilterResult};
pub use signal::Signal;
pub use tfr::{Axes, Tfr, TfrKind};
