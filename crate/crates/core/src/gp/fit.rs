//! Hyperparameter fitting by multi-start ascent of the log marginal likelihood.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::kernel::{KernelParams, NOISE_FLOOR, SQRT5};
use super::Dataset;
use crate::domain::RngStream;
use crate::error::Result;
use crate::optim::{minimize_box, LbfgsOptions};

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Random log-space starts in addition to the default start.
    pub random_starts: usize,
    /// Ascent iterations per start.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            random_starts: 3,
            iterations: 100,
            seed: 0x05ee_df17,
        }
    }
}

const LOG_LENGTHSCALE: (f64, f64) = (-4.605_170_185_988_091, 4.605_170_185_988_091); // [0.01, 100]
const LOG_OUTPUT_SCALE: (f64, f64) = (-4.605_170_185_988_091, 4.605_170_185_988_091);
const LOG_NOISE_MAX: f64 = 0.0;

/// Negative log marginal likelihood over `θ = [ln ℓ₁..ln ℓ_d, ln s², ln σ²]`.
struct Objective {
    n: usize,
    d: usize,
    y: DVector<f64>,
    /// Squared coordinate differences for each pair `i < j`, `d` per pair.
    sq_diff: Vec<f64>,
}

impl Objective {
    fn new(data: &Dataset, shift: f64, scale: f64) -> Self {
        let n = data.len();
        let d = data.dim();
        let pts = data.points();
        let mut sq_diff = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for i in 0..n {
            for j in 0..i {
                for (a, b) in pts[i].coords().iter().zip(pts[j].coords()) {
                    sq_diff.push((a - b) * (a - b));
                }
            }
        }
        let y = DVector::from_iterator(n, data.values().iter().map(|v| (v - shift) / scale));
        Self { n, d, y, sq_diff }
    }

    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (n, d) = (self.n, self.d);
        let inv_l2: Vec<f64> = theta[..d].iter().map(|t| (-2.0 * t).exp()).collect();
        let sf2 = theta[d].exp();
        let sn2 = theta[d + 1].exp();

        let mut k = DMatrix::zeros(n, n);
        // dk/dln ℓ_j = g · Δ_j²/ℓ_j² for the pair, with g stored per pair.
        let mut g_pair = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let mut p = 0;
        for i in 0..n {
            for j in 0..i {
                let diffs = &self.sq_diff[p * d..(p + 1) * d];
                let r2: f64 = diffs.iter().zip(&inv_l2).map(|(a, b)| a * b).sum();
                let r = r2.sqrt();
                let e = (-SQRT5 * r).exp();
                let kv = sf2 * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * e;
                k[(i, j)] = kv;
                k[(j, i)] = kv;
                g_pair.push(sf2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e);
                p += 1;
            }
            k[(i, i)] = sf2 + sn2;
        }

        let Some(chol) = k.clone().cholesky() else {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        };
        let alpha = chol.solve(&self.y);
        let logdet: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let nll = 0.5 * self.y.dot(&alpha) + logdet + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // W = α αᵀ − K⁻¹ ; ∂(−LML)/∂θ = −½ tr(W ∂K/∂θ)
        let kinv = chol.inverse();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut tr_sf = 0.0;
        let mut tr_noise = 0.0;
        let mut p = 0;
        for i in 0..n {
            let w_ii = alpha[i] * alpha[i] - kinv[(i, i)];
            tr_sf += w_ii * sf2;
            tr_noise += w_ii * sn2;
            for j in 0..i {
                let w = alpha[i] * alpha[j] - kinv[(i, j)];
                tr_sf += 2.0 * w * (k[(i, j)]);
                let coef = 2.0 * w * g_pair[p];
                let diffs = &self.sq_diff[p * d..(p + 1) * d];
                for ((gj, dj), il) in grad[..d].iter_mut().zip(diffs).zip(&inv_l2) {
                    *gj += coef * dj * il;
                }
                p += 1;
            }
        }
        for gj in grad[..d].iter_mut() {
            *gj *= -0.5;
        }
        grad[d] = -0.5 * tr_sf;
        grad[d + 1] = -0.5 * tr_noise;
        nll
    }
}

pub(super) fn optimize_hyperparameters(
    data: &Dataset,
    shift: f64,
    scale: f64,
    opts: &FitOptions,
) -> Result<KernelParams> {
    let d = data.dim();
    let objective = Objective::new(data, shift, scale);
    let mut lower = vec![LOG_LENGTHSCALE.0; d];
    let mut upper = vec![LOG_LENGTHSCALE.1; d];
    lower.extend([LOG_OUTPUT_SCALE.0, NOISE_FLOOR.ln()]);
    upper.extend([LOG_OUTPUT_SCALE.1, LOG_NOISE_MAX]);

    let default = KernelParams::default_for(d);
    let default_theta: Vec<f64> = default
        .lengthscales
        .iter()
        .map(|l| l.ln())
        .chain([default.output_scale.ln(), (1e-4f64).ln()])
        .collect();

    let mut rng = RngStream::new(opts.seed ^ data.len() as u64, d as u64);
    let mut starts = vec![default_theta.clone()];
    for _ in 0..opts.random_starts {
        let mut t: Vec<f64> = default_theta[..d]
            .iter()
            .map(|v| v + rng.random_range(-1.5..1.5))
            .collect();
        t.push(rng.random_range(0.25f64.ln()..4f64.ln()));
        t.push(rng.random_range(NOISE_FLOOR.ln()..(1e-2f64).ln()));
        starts.push(t);
    }

    let lbfgs = LbfgsOptions {
        max_iters: opts.iterations,
        grad_tol: 1e-6,
        rel_tol: 1e-10,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let res = minimize_box(|t, g| objective.eval(t, g), start, &lower, &upper, &lbfgs);
        if res.value.is_finite() && best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let theta = best.map(|(_, t)| t).unwrap_or(default_theta);
    Ok(KernelParams {
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        output_scale: theta[d].exp(),
        noise_variance: theta[d + 1].exp().max(NOISE_FLOOR),
    })
}
