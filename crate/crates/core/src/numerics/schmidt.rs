//! Schmidt number of a sampled bipartite kernel.

use nalgebra::DMatrix;

use crate::error::{KdError, Result};

/// Uniform symmetric grid `[-h, h]` with `points` nodes on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub halfwidth: f64,
    pub points: usize,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self {
            halfwidth: 8.0,
            points: 401,
        }
    }
}

impl KernelGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.halfwidth / (self.points - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.halfwidth + i as f64 * self.step()
    }

    /// Samples `kernel(p_i, q_j)` into row `i`, column `j`.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, kernel: F) -> DMatrix<f64> {
        DMatrix::from_fn(self.points, self.points, |i, j| {
            kernel(self.coordinate(i), self.coordinate(j))
        })
    }

    /// Area element `h^2` of the grid.
    pub fn weight(&self) -> f64 {
        self.step() * self.step()
    }
}

/// `(sum lambda_k)^2 / sum lambda_k^2`, with `lambda_k` the squared singular
/// values of `sqrt(grid_weight) * kernel_samples`.
///
/// The ratio is invariant under rescaling the kernel, so `grid_weight` only
/// matters for the intermediate magnitudes.
pub fn schmidt_via_svd(kernel_samples: &DMatrix<f64>, grid_weight: f64) -> Result<f64> {
    if let Some(bad) = kernel_samples.iter().find(|v| !v.is_finite()) {
        return Err(KdError::NonFinite(format!("kernel sample {bad}")));
    }
    if !(grid_weight > 0.0 && grid_weight.is_finite()) {
        return Err(KdError::domain(format!("grid weight {grid_weight} must be positive")));
    }
    let peak = kernel_samples.amax();
    if peak == 0.0 {
        return Err(KdError::domain("kernel is identically zero"));
    }
    // sqrt(grid_weight) and 1/peak are common factors; dropping both keeps the
    // singular values near one without changing the ratio.
    let scaled = kernel_samples / peak;
    let singular = scaled.singular_values();
    let (sum, sum_sq) = singular.iter().fold((0.0, 0.0), |(s, s2), &sv| {
        let lambda = sv * sv;
        (s + lambda, s2 + lambda * lambda)
    });
    Ok(sum * sum / sum_sq)
}
