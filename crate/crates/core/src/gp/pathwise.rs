//! Pathwise posterior function draws.
//!
//! A prior function is drawn with random Fourier features of the Matérn-5/2
//! spectral density (a Student-t with 5 degrees of freedom, scaled by the
//! inverse lengthscales) and then corrected by the exact update
//! `f(x) + k(x, X)(K + σ²I)⁻¹(y − f(X) − ε)`. One draw can be evaluated at any
//! number of locations in time linear in that number, which makes candidate
//! sets far beyond what a dense joint factorization allows practical.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::GpModel;
use crate::domain::{Point, RngStream};

pub struct PathwiseDraw<'a> {
    model: &'a GpModel,
    /// Feature frequencies, `d` per feature.
    omegas: Vec<f64>,
    phases: Vec<f64>,
    weights: Vec<f64>,
    amplitude: f64,
    update: DVector<f64>,
}

impl GpModel {
    /// Draws one posterior sample path using `num_features` Fourier features.
    pub fn pathwise_draw(&self, num_features: usize, rng: &mut RngStream) -> PathwiseDraw<'_> {
        let d = self.dim();
        let f = num_features.max(1);
        let chi = ChiSquared::new(5.0).expect("positive degrees of freedom");
        let mut omegas = Vec::with_capacity(f * d);
        for _ in 0..f {
            let u: f64 = chi.sample(rng);
            let t = (5.0 / u).sqrt();
            for l in &self.params.lengthscales {
                let z: f64 = StandardNormal.sample(rng);
                omegas.push(z * t / l);
            }
        }
        let phases = (0..f).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let weights = (0..f).map(|_| StandardNormal.sample(rng)).collect();
        let mut draw = PathwiseDraw {
            model: self,
            omegas,
            phases,
            weights,
            amplitude: (2.0 * self.params.output_scale / f as f64).sqrt(),
            update: DVector::zeros(0),
        };

        let n = self.data.len();
        if n > 0 {
            let noise_sd = self.diag_noise.sqrt();
            let mut resid = DVector::zeros(n);
            for (i, p) in self.data.points.iter().enumerate() {
                let eps: f64 = StandardNormal.sample(rng);
                resid[i] = self.y_norm[i] - draw.prior(p.coords()) - noise_sd * eps;
            }
            let w = self.chol.solve_lower_triangular(&resid).expect("nonzero diagonal");
            draw.update = self.chol.tr_solve_lower_triangular(&w).expect("nonzero diagonal");
        }
        draw
    }
}

/// Taylor coefficients of `cos` in `r²`, `(−1)ⁱ/(2i)!`.
const COS_COEFFS: [f64; 14] = [
    1.0,
    -0.5,
    0.041666666666666664,
    -0.001388888888888889,
    2.48015873015873e-05,
    -2.755731922398589e-07,
    2.08767569878681e-09,
    -1.1470745597729725e-11,
    4.779477332387385e-14,
    -1.5619206968586225e-16,
    4.110317623312165e-19,
    -8.896791392450574e-22,
    1.6117375710961184e-24,
    -2.4795962632247976e-27,
];

/// Adding then subtracting this rounds any `|t| < 2⁵¹` to the nearest integer.
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// `cos(x)` to roughly 1e-13 absolute error, without branches or library
/// calls so that loops over many arguments vectorize.
#[inline(always)]
fn fast_cos(x: f64) -> f64 {
    let t = x * (1.0 / TAU);
    let n = (t + ROUND_MAGIC) - ROUND_MAGIC;
    let r = (t - n) * TAU;
    let r2 = r * r;
    let mut p = COS_COEFFS[13];
    for c in COS_COEFFS[..13].iter().rev() {
        p = p * r2 + c;
    }
    p
}

impl PathwiseDraw<'_> {
    fn prior(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut acc = 0.0;
        for (k, (phase, w)) in self.phases.iter().zip(&self.weights).enumerate() {
            let om = &self.omegas[k * d..(k + 1) * d];
            let arg: f64 = om.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
            acc += w * fast_cos(arg);
        }
        self.amplitude * acc
    }

    /// Value of the sampled function at `x`, objective units.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let m = self.model;
        let mut v = self.prior(x);
        for (p, u) in m.data.points.iter().zip(self.update.iter()) {
            v += u * m.params.kernel(p.coords(), x);
        }
        v * m.scale + m.shift
    }

    /// [`PathwiseDraw::evaluate`] at many locations, feature-major so the
    /// inner loops run over locations.
    pub fn evaluate_many(&self, xs: &[Point]) -> Vec<f64> {
        let m = self.model;
        let d = m.dim();
        let n = xs.len();
        let columns: Vec<Vec<f64>> = (0..d).map(|j| xs.iter().map(|x| x.coords()[j]).collect()).collect();
        let mut acc = vec![0.0; n];
        let mut arg = vec![0.0; n];
        for (k, (phase, w)) in self.phases.iter().zip(&self.weights).enumerate() {
            arg.fill(*phase);
            for (om, col) in self.omegas[k * d..(k + 1) * d].iter().zip(&columns) {
                for (a, c) in arg.iter_mut().zip(col) {
                    *a += om * c;
                }
            }
            for (s, a) in acc.iter_mut().zip(&arg) {
                *s += w * fast_cos(*a);
            }
        }
        xs.iter()
            .zip(acc)
            .map(|(x, s)| {
                let mut v = self.amplitude * s;
                for (p, u) in m.data.points.iter().zip(self.update.iter()) {
                    v += u * m.params.kernel(p.coords(), x.coords());
                }
                v * m.scale + m.shift
            })
            .collect()
    }
}
