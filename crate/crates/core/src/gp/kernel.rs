//! Matérn-5/2 kernel with per-dimension lengthscales.

use crate::error::{Error, Result};

/// Lower bound on the learned noise variance, in normalized output units.
pub const NOISE_FLOOR: f64 = 1e-6;

pub(crate) const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    /// Signal variance of the (normalized) process.
    pub output_scale: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    /// Starting point for hyperparameter search and the parameters of the
    /// prior model: lengthscale `0.2·√d`, unit output scale, noise at the floor.
    pub fn default_for(d: usize) -> Self {
        Self {
            lengthscales: vec![0.2 * (d as f64).sqrt(); d],
            output_scale: 1.0,
            noise_variance: NOISE_FLOOR,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.lengthscales.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.lengthscales.len(),
            });
        }
        if !self.lengthscales.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::InvalidConfig("lengthscales must be positive".into()));
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(Error::InvalidConfig("output scale must be positive".into()));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= NOISE_FLOOR) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be at least {NOISE_FLOOR:e}"
            )));
        }
        Ok(())
    }

    /// Squared distance scaled by the lengthscales.
    #[inline]
    pub(crate) fn scaled_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let t = (x - y) / l;
                t * t
            })
            .sum()
    }

    /// `k(a, b) = s² (1 + √5 r + 5r²/3) exp(−√5 r)`.
    #[inline]
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        matern52(self.scaled_sq_dist(a, b), self.output_scale)
    }

    /// Gradient of `k(x, b)` with respect to `x`, accumulated as `weight · ∇k`.
    #[inline]
    pub(crate) fn accumulate_kernel_grad(&self, x: &[f64], b: &[f64], weight: f64, grad: &mut [f64]) {
        let r2 = self.scaled_sq_dist(x, b);
        let r = r2.sqrt();
        // dk/dx_j = −s² (5/3)(1 + √5 r) e^{−√5 r} (x_j − b_j)/l_j²
        let common = -self.output_scale * (5.0 / 3.0) * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp();
        for ((g, (xi, bi)), l) in grad.iter_mut().zip(x.iter().zip(b)).zip(&self.lengthscales) {
            *g += weight * common * (xi - bi) / (l * l);
        }
    }
}

#[inline]
pub(crate) fn matern52(r2: f64, output_scale: f64) -> f64 {
    let r = r2.sqrt();
    output_scale * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
}
