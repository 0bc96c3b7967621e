//! Denoising filters on time-frequency images.
//!
//! * [`nf`]: level-set Neighborhood filter with frozen weights, plus the
//!   literal per-pixel-pair evaluation used as its oracle.
//! * [`yaroslavsky`]: Neighborhood filter with an extra Gaussian spatial weight.
//! * [`tv`]: transport plus regularized total-variation flow, semi-implicit
//!   in time, solved with conjugate gradients.
//! * [`nlmeans`]: Nonlocal Means with Gaussian patches, and the
//!   Wigner-Ville/spectrogram patch-distance correspondence check.

pub mod cg;
pub mod correspondence;
pub mod nf;
pub mod nlmeans;
pub mod tv;
pub mod yaroslavsky;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tfr::Tfr;

pub use correspondence::{f_correspondence, CorrespondenceOptions};
pub use nf::{nf_brute_force, nf_iterate, nf_level_step};
pub use nlmeans::nlmeans;
pub use tv::{tv_functional, tv_transport_denoise, TvFlow};
pub use yaroslavsky::yaroslavsky_iterate;

/// Parameters shared by the three filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    /// Gray-level bandwidth, in levels.
    pub h: f64,
    /// Spatial bandwidth of the Yaroslavsky filter, in pixels.
    pub rho: f64,
    /// Transport strength; the flow runs to `τ_end = 1/eps`.
    pub eps: f64,
    /// Regularization of `|∇S|` in the TV diffusivity, in gray levels.
    pub eps_tilde: f64,
    /// Standard deviation (pixels) of the presmoothing applied before `log`.
    pub sigma_smooth: f64,
    /// Artificial time step.
    pub dtau: f64,
    /// Relative-change stopping tolerance of the NF iteration.
    pub tol: f64,
    /// Iteration cap of the NF iteration.
    pub max_iter: usize,
    pub q: u32,
    /// Truncate Yaroslavsky spatial weights at `3ρ`.
    pub truncate_spatial: bool,
    /// Explicit step count for the TV flow and Yaroslavsky iteration; required when `eps == 0`.
    pub steps: Option<usize>,
}

impl Default for FilterParams {
    fn default() -> Self {
        let q = 255;
        Self {
            h: 10.0,
            rho: 10.0,
            eps: 0.02,
            eps_tilde: 1e-2 * q as f64,
            sigma_smooth: 2.0,
            dtau: 2.5,
            tol: 0.04,
            max_iter: 100,
            q,
            truncate_spatial: true,
            steps: None,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.h > 0.0, "h must be positive"),
            (self.rho > 0.0, "rho must be positive"),
            (self.eps >= 0.0, "eps must be nonnegative"),
            (self.eps_tilde > 0.0, "eps_tilde must be positive"),
            (self.sigma_smooth > 0.0, "sigma_smooth must be positive"),
            (self.dtau > 0.0, "dtau must be positive"),
            (self.tol >= 0.0, "tol must be nonnegative"),
            (self.q > 0, "Q must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::invalid(*msg)),
            None => Ok(()),
        }
    }

    /// Number of `dtau` steps needed to reach `1/eps`, or the explicit `steps`.
    pub fn pde_steps(&self) -> Result<usize> {
        if let Some(n) = self.steps {
            return Ok(n);
        }
        if self.eps <= 0.0 {
            return Err(Error::invalid(
                "eps = 0 leaves the final time 1/eps undefined; set an explicit step count",
            ));
        }
        let exact = 1.0 / (self.eps * self.dtau);
        let n = exact.round();
        if n < 1.0 || (exact - n).abs() > 1e-6 * exact.max(1.0) {
            return Err(Error::invalid(format!(
                "dtau = {} does not divide 1/eps = {} into an integer number of steps",
                self.dtau,
                1.0 / self.eps
            )));
        }
        Ok(n as usize)
    }
}

/// Output of a filter run.
#[derive(Debug, Clone)]
pub struct FilterResult {
    pub image: Tfr,
    pub iterations: usize,
    /// `‖S_{i+1} - S_i‖ / ‖S_i‖` for every iteration.
    pub per_iter_change: Vec<f64>,
    /// The iteration cap was reached before the tolerance.
    pub hit_max_iter: bool,
    /// Seconds spent before the first iteration (quantization, index, weights).
    pub setup_time: f64,
    /// Seconds spent iterating, including the final relabel.
    pub iteration_time: f64,
    /// `setup_time + iteration_time`.
    pub wall_time: f64,
}

/// Serializable summary of a [`FilterResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub filter: String,
    pub iterations: usize,
    pub per_iter_change: Vec<f64>,
    pub hit_max_iter: bool,
    pub setup_time_s: f64,
    pub iteration_time_s: f64,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
}

impl FilterResult {
    pub fn report(&self, filter: &str, mse: Option<f64>) -> FilterReport {
        FilterReport {
            filter: filter.to_string(),
            iterations: self.iterations,
            per_iter_change: self.per_iter_change.clone(),
            hit_max_iter: self.hit_max_iter,
            setup_time_s: self.setup_time,
            iteration_time_s: self.iteration_time,
            wall_time_s: self.wall_time,
            mse,
        }
    }
}

/// Which filter to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Nf,
    Yaroslavsky,
    Tv,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Nf, FilterKind::Yaroslavsky, FilterKind::Tv];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Nf => "nf",
            FilterKind::Yaroslavsky => "yaroslavsky",
            FilterKind::Tv => "tv",
        }
    }

    pub fn run(self, image: &Tfr, params: &FilterParams) -> Result<FilterResult> {
        match self {
            FilterKind::Nf => nf_iterate(image, params),
            FilterKind::Yaroslavsky => yaroslavsky_iterate(image, params),
            FilterKind::Tv => tv_transport_denoise(image, params),
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nf" | "neighborhood" => Ok(FilterKind::Nf),
            "yaroslavsky" | "y" => Ok(FilterKind::Yaroslavsky),
            "tv" | "pde" => Ok(FilterKind::Tv),
            other => Err(Error::invalid(format!(
                "unknown filter {other:?} (expected nf, yaroslavsky or tv)"
            ))),
        }
    }
}

/// `‖a - b‖ / ‖b‖` over flat slices; 0 when both are zero.
pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let (mut diff, mut base) = (0.0, 0.0);
    for (a, b) in new.iter().zip(old) {
        diff += (a - b) * (a - b);
        base += b * b;
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
