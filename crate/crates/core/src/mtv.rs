//! Minimal terminal variance batch design.
//!
//! The integral of `p*(x) σ²(x | arms)` is replaced by a sum over a frozen set
//! of `p*` samples, and the stacked `q·d` arm vector is chosen by multi-start
//! bound-constrained minimization of that sum.

use rand::seq::SliceRandom;

use crate::domain::{Point, RngStream, SobolSequence};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::optim::{minimize_box, numeric_gradient, LbfgsOptions};
use crate::samplers::{PstarSampler, StsConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct MtvConfig {
    pub num_pstar_samples: usize,
    /// Batch size `q`.
    pub num_arms: usize,
    pub minimizer_starts: usize,
    pub minimizer_steps: usize,
    /// Source of the `p*` samples (stagger sampler by default).
    pub pstar_sampler: PstarSampler,
}

impl MtvConfig {
    pub fn new(num_arms: usize) -> Self {
        Self {
            num_pstar_samples: 16,
            num_arms,
            minimizer_starts: 4,
            minimizer_steps: 100,
            pstar_sampler: PstarSampler::Sts(StsConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_pstar_samples == 0 || self.num_arms == 0 || self.minimizer_starts == 0 || self.minimizer_steps == 0
        {
            return Err(Error::InvalidConfig("MTV counts must all be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BatchDesign {
    pub arms: Vec<Point>,
    /// `mtv_objective(arms)` over the frozen `p*` samples.
    pub objective_value: f64,
    /// Lowest objective among the minimizer's starting batches.
    pub best_start_value: f64,
    pub pstar_points: Vec<Point>,
}

/// `n` independent stagger samples from `p*`.
pub fn pstar_samples(model: &GpModel, d: usize, n: usize, rng: &mut RngStream) -> Result<Vec<Point>> {
    if model.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: d,
        });
    }
    PstarSampler::Sts(StsConfig::default()).sample_many(model, n, rng)
}

/// `Σᵢ σ²(xᵢ | arms)` over the `p*` points.
pub fn mtv_objective(model: &GpModel, pstar_points: &[Point], arms: &[Point]) -> Result<f64> {
    if pstar_points.is_empty() || arms.is_empty() {
        return Err(Error::InvalidConfig("MTV objective needs p* points and arms".into()));
    }
    Ok(model.conditional_variance(pstar_points, arms)?.iter().sum())
}

fn stacked_objective(model: &GpModel, pstar: &[&[f64]], flat: &[f64], d: usize) -> f64 {
    let arms: Vec<&[f64]> = flat.chunks(d).collect();
    match model.conditional_variance_raw(pstar, &arms) {
        Ok(v) => v.iter().sum(),
        Err(_) => f64::INFINITY,
    }
}

/// Designs a `q`-arm batch minimizing the `p*`-weighted terminal variance.
///
/// Starting batches alternate between random `q`-subsets of the `p*` points
/// (padded with Sobol' points when `q` exceeds their number) and blocks of a
/// scrambled Sobol' sequence.
pub fn design_batch(model: &GpModel, d: usize, cfg: &MtvConfig, rng: &mut RngStream) -> Result<BatchDesign> {
    cfg.validate()?;
    if model.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: d,
        });
    }
    let q = cfg.num_arms;
    let pstar = cfg.pstar_sampler.sample_many(model, cfg.num_pstar_samples, rng)?;
    let pstar_refs: Vec<&[f64]> = pstar.iter().map(|p| p.coords()).collect();
    let sobol = SobolSequence::new(d, rng)?;

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.minimizer_starts);
    let mut sobol_block = 0;
    for s in 0..cfg.minimizer_starts {
        let mut flat = Vec::with_capacity(q * d);
        if s % 2 == 0 {
            let mut idx: Vec<usize> = (0..pstar.len()).collect();
            if s > 0 {
                idx.shuffle(rng);
            }
            for &i in idx.iter().take(q) {
                flat.extend_from_slice(pstar[i].coords());
            }
        }
        let missing = q - flat.len() / d;
        if missing > 0 {
            for p in sobol.points(sobol_block * q, missing)? {
                flat.extend_from_slice(p.coords());
            }
            sobol_block += 1;
        }
        starts.push(flat);
    }

    let lower = vec![0.0; q * d];
    let upper = vec![1.0; q * d];
    let opts = LbfgsOptions {
        max_iters: cfg.minimizer_steps,
        grad_tol: 1e-12,
        rel_tol: 1e-12,
        ..Default::default()
    };
    let mut best_start_value = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut obj = |x: &[f64]| stacked_objective(model, &pstar_refs, x, d);
        best_start_value = best_start_value.min(obj(&start));
        let res = minimize_box(
            |x, g| numeric_gradient(&mut obj, x, &lower, &upper, 1e-4, g),
            &start,
            &lower,
            &upper,
            &opts,
        );
        if best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let (_, flat) = best.expect("at least one start");
    let arms: Vec<Point> = flat.chunks(d).map(|c| Point::clamped(c.to_vec())).collect();
    let objective_value = mtv_objective(model, &pstar, &arms)?;
    Ok(BatchDesign {
        arms,
        objective_value,
        best_start_value,
        pstar_points: pstar,
    })
}
