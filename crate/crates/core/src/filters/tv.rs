//! Transport plus regularized total-variation flow.
//!
//! Solves `∂S/∂τ + (ε/2)∇log(S_{0*})·∇S - div(∇S/|∇S|) = 0` on the pixel grid
//! with homogeneous Neumann boundaries, up to `τ = 1/ε`. Each step is
//! semi-implicit with the diffusivity lagged:
//!
//! ```text
//! (I/δτ + A(S_k)) S_{k+1} = S_k/δτ - b·∇_up S_k
//! ```
//!
//! `A(u) = Dxᵀ C Dx + Dyᵀ C Dy` with forward differences `D` (zero across the
//! boundary) and `C = diag(1/√(|∇u|² + ε̃²))`, so a step with `ε = 0`
//! minimizes a quadratic majorant of `Σ √(|∇u|² + ε̃²)` and never increases it.

use std::time::Instant;

use ndarray::{Array2, Axis};

use super::cg::{self, SpdOperator};
use super::{relative_change, FilterParams, FilterResult};
use crate::error::Result;
use crate::tfr::{convolve_axis, gaussian_kernel, Tfr};

/// Relative residual at which each implicit solve stops.
pub const CG_TOLERANCE: f64 = 1e-8;

/// Regularized discrete total variation `Σ √(|∇u|² + ε̃²)` with forward
/// differences.
pub fn tv_functional(values: &Array2<f64>, eps_tilde: f64) -> f64 {
    let (rows, cols) = values.dim();
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let u = values[[r, c]];
            let dx = if c + 1 < cols {
                values[[r, c + 1]] - u
            } else {
                0.0
            };
            let dy = if r + 1 < rows {
                values[[r + 1, c]] - u
            } else {
                0.0
            };
            total += (dx * dx + dy * dy + eps_tilde * eps_tilde).sqrt();
        }
    }
    total
}

/// `I/δτ + Dxᵀ C Dx + Dyᵀ C Dy` on a `rows × cols` grid.
struct TvOperator {
    rows: usize,
    cols: usize,
    inv_dtau: f64,
    coeff: Vec<f64>,
}

impl TvOperator {
    fn new(u: &[f64], rows: usize, cols: usize, dtau: f64, eps_tilde: f64) -> Self {
        let mut coeff = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                let dx = if c + 1 < cols { u[i + 1] - u[i] } else { 0.0 };
                let dy = if r + 1 < rows {
                    u[i + cols] - u[i]
                } else {
                    0.0
                };
                coeff[i] = 1.0 / (dx * dx + dy * dy + eps_tilde * eps_tilde).sqrt();
            }
        }
        Self {
            rows,
            cols,
            inv_dtau: 1.0 / dtau,
            coeff,
        }
    }
}

impl SpdOperator for TvOperator {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let cols = self.cols;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi * self.inv_dtau;
        }
        for r in 0..self.rows {
            for c in 0..cols {
                let i = r * cols + c;
                let k = self.coeff[i];
                if c + 1 < cols {
                    let f = k * (x[i] - x[i + 1]);
                    y[i] += f;
                    y[i + 1] -= f;
                }
                if r + 1 < self.rows {
                    let f = k * (x[i] - x[i + cols]);
                    y[i] += f;
                    y[i + cols] -= f;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let cols = self.cols;
        let mut d = vec![self.inv_dtau; self.rows * cols];
        for r in 0..self.rows {
            for c in 0..cols {
                let i = r * cols + c;
                let k = self.coeff[i];
                if c + 1 < cols {
                    d[i] += k;
                    d[i + 1] += k;
                }
                if r + 1 < self.rows {
                    d[i] += k;
                    d[i + cols] += k;
                }
            }
        }
        d
    }
}

/// State of the flow, advanced one step at a time.
pub struct TvFlow {
    rows: usize,
    cols: usize,
    dtau: f64,
    eps_tilde: f64,
    /// Transport velocity `(ε/2)∇log(S_{0*})`, per pixel.
    bx: Vec<f64>,
    by: Vec<f64>,
    current: Vec<f64>,
    max_cg: usize,
    pub cg_iterations: Vec<usize>,
}

impl TvFlow {
    pub fn new(s0_image: &Tfr, params: &FilterParams) -> Result<Self> {
        params.validate()?;
        let q = s0_image.require_image()?;
        let (rows, cols) = s0_image.values.dim();
        let current: Vec<f64> = s0_image.values.iter().copied().collect();
        let (bx, by) = if params.eps > 0.0 {
            transport_field(
                &s0_image.values,
                params.sigma_smooth,
                1e-3 * q as f64,
                params.eps,
            )
        } else {
            (vec![0.0; rows * cols], vec![0.0; rows * cols])
        };
        let max_cg = (10.0 * ((rows * cols) as f64).sqrt()).ceil() as usize;
        Ok(Self {
            rows,
            cols,
            dtau: params.dtau,
            eps_tilde: params.eps_tilde,
            bx,
            by,
            current,
            max_cg,
            cg_iterations: Vec::new(),
        })
    }

    pub fn values(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.rows, self.cols), self.current.clone()).expect("shape")
    }

    /// Advances one `δτ` step and returns the relative change.
    pub fn step(&mut self) -> Result<f64> {
        let (rows, cols) = (self.rows, self.cols);
        let u = &self.current;
        let inv_dtau = 1.0 / self.dtau;
        let mut rhs = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                let (bx, by) = (self.bx[i], self.by[i]);
                // upwind: difference taken on the side the flow comes from
                let ux = if bx > 0.0 {
                    if c > 0 {
                        u[i] - u[i - 1]
                    } else {
                        0.0
                    }
                } else if c + 1 < cols {
                    u[i + 1] - u[i]
                } else {
                    0.0
                };
                let uy = if by > 0.0 {
                    if r > 0 {
                        u[i] - u[i - cols]
                    } else {
                        0.0
                    }
                } else if r + 1 < rows {
                    u[i + cols] - u[i]
                } else {
                    0.0
                };
                rhs[i] = u[i] * inv_dtau - (bx * ux + by * uy);
            }
        }
        let op = TvOperator::new(u, rows, cols, self.dtau, self.eps_tilde);
        let mut next = u.clone();
        let outcome = cg::solve(&op, &rhs, &mut next, CG_TOLERANCE, self.max_cg)?;
        self.cg_iterations.push(outcome.iterations);
        let change = relative_change(&next, &self.current);
        self.current = next;
        Ok(change)
    }
}

/// `(ε/2)∇log(max(G_σ * S_0, floor))` with central differences inside the
/// grid and zero normal component on the boundary.
fn transport_field(s0: &Array2<f64>, sigma: f64, floor: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let k = gaussian_kernel(sigma);
    let smoothed = convolve_axis(&convolve_axis(s0, &k, Axis(1)), &k, Axis(0));
    let log = smoothed.mapv(|v| v.max(floor).ln());
    let (rows, cols) = log.dim();
    let mut bx = vec![0.0; rows * cols];
    let mut by = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c > 0 && c + 1 < cols {
                bx[i] = 0.5 * eps * 0.5 * (log[[r, c + 1]] - log[[r, c - 1]]);
            }
            if r > 0 && r + 1 < rows {
                by[i] = 0.5 * eps * 0.5 * (log[[r + 1, c]] - log[[r - 1, c]]);
            }
        }
    }
    (bx, by)
}

/// Runs the flow for `params.pde_steps()` steps.
pub fn tv_transport_denoise(s0_image: &Tfr, params: &FilterParams) -> Result<FilterResult> {
    let steps = params.pde_steps()?;
    let q = s0_image.require_image()?;
    let start = Instant::now();
    let mut flow = TvFlow::new(s0_image, params)?;
    let setup_time = start.elapsed().as_secs_f64();

    let iter_start = Instant::now();
    let mut per_iter_change = Vec::with_capacity(steps);
    for _ in 0..steps {
        per_iter_change.push(flow.step()?);
    }
    let qf = q as f64;
    let values = flow.values().mapv(|v| v.clamp(0.0, qf));
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn operator_is_symmetric_with_unit_row_sums() {
        let u = [0.0, 3.0, 1.0, 7.0, 2.0, 2.0];
        let op = TvOperator::new(&u, 2, 3, 0.5, 1.0);
        let n = 6;
        let mut cols = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op.apply(&e, &mut cols[j]);
        }
        let diagonal = op.diagonal();
        for (i, col) in cols.iter().enumerate() {
            assert!((0..n).all(|j| (cols[j][i] - col[j]).abs() < 1e-15));
            let row_sum: f64 = (0..n).map(|j| cols[j][i]).sum();
            assert!((row_sum - 2.0).abs() < 1e-14);
            assert!((diagonal[i] - col[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn functional_of_flat_image_is_area_times_eps() {
        let v = Array2::from_elem((3, 4), 5.0);
        assert!((tv_functional(&v, 0.5) - 6.0).abs() < 1e-12);
        let ramp = array![[0.0, 3.0]];
        // node 0: dx = 3; node 1: dx = 0
        assert!((tv_functional(&ramp, 4.0) - (5.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = Tfr::image(Array2::from_elem((10, 12), 80.0), 255).unwrap();
        let r = tv_transport_denoise(&img, &FilterParams::default()).unwrap();
        assert_eq!(r.iterations, 20);
        for v in r.image.values.iter() {
            assert!((v - 80.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_eps_needs_explicit_steps() {
        let img = Tfr::image(Array2::from_elem((4, 4), 1.0), 255).unwrap();
        let p = FilterParams {
            eps: 0.0,
            ..Default::default()
        };
        assert!(tv_transport_denoise(&img, &p).is_err());
        let p = FilterParams {
            eps: 0.0,
            steps: Some(3),
            ..Default::default()
        };
        assert_eq!(tv_transport_denoise(&img, &p).unwrap().iterations, 3);
    }

    #[test]
    fn transport_points_up_the_log_gradient() {
        let mut s0 = Array2::zeros((9, 9));
        s0[[4, 4]] = 200.0;
        let (bx, by) = transport_field(&s0, 1.0, 0.255, 0.1);
        // left of the peak the field points right (+x), above it points down (+y)
        assert!(bx[4 * 9 + 2] > 0.0 && bx[4 * 9 + 6] < 0.0);
        assert!(by[2 * 9 + 4] > 0.0 && by[6 * 9 + 4] < 0.0);
        assert_eq!(bx[4 * 9], 0.0);
    }
}
