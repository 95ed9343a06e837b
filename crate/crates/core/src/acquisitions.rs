//! Expected Improvement, Upper Confidence Bound and Simple Regret, with a
//! multi-start maximizer and the Sobol' first-round rule.

use statrs::function::erf::erfc;

use crate::domain::{uniform_point, Point, RngStream, SobolSequence};
use crate::error::{Error, Result};
use crate::gp::{pick_max, prefer_first, ArgmaxBudget, GpModel};
use crate::optim::{minimize_box, numeric_gradient, LbfgsOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcqKind {
    Ei,
    Ucb,
    /// Simple regret: the posterior mean.
    Sr,
    Random,
    Sobol,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcqSpec {
    pub kind: AcqKind,
    /// UCB exploration weight.
    pub beta: f64,
}

impl AcqSpec {
    pub fn new(kind: AcqKind) -> Self {
        Self { kind, beta: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_finite() && self.beta >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig("UCB beta must be non-negative".into()))
        }
    }

    /// Whether arms come from maximizing a model-based acquisition.
    pub fn uses_model(&self) -> bool {
        matches!(self.kind, AcqKind::Ei | AcqKind::Ucb | AcqKind::Sr)
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[max(0, Y − best)]` for `Y ~ N(mu, sigma²)`.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    let diff = mu - best;
    if sigma <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sigma;
    (diff * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

pub fn ucb(mu: f64, sigma: f64, beta: f64) -> f64 {
    mu + beta * sigma
}

/// Acquisition value of `spec` at `x` under `model`.
pub fn acquisition_value(spec: &AcqSpec, model: &GpModel, best: f64, x: &[f64]) -> f64 {
    let (mu, var) = model.predict(x);
    let sigma = var.max(0.0).sqrt();
    match spec.kind {
        AcqKind::Ei => expected_improvement(mu, sigma, best),
        AcqKind::Ucb => ucb(mu, sigma, spec.beta),
        AcqKind::Sr | AcqKind::Random | AcqKind::Sobol => mu,
    }
}

/// Maximizes a model-based acquisition over the unit box.
///
/// Local searches (central-difference gradients) start from the best points
/// of a uniform screen plus the measured points. Among equal maxima a result
/// reached from a measured point wins, then the lexicographically smallest
/// location.
pub fn maximize_acquisition(
    spec: &AcqSpec,
    model: &GpModel,
    budget: ArgmaxBudget,
    rng: &mut RngStream,
) -> Result<(f64, Point)> {
    let d = model.dim();
    let best = model.dataset().best().map(|(_, y)| y).unwrap_or(f64::NEG_INFINITY);
    let value = |x: &[f64]| acquisition_value(spec, model, best, x);

    let starts = budget.starts.max(1);
    let mut screen: Vec<(f64, Point, bool)> = model
        .dataset()
        .points()
        .iter()
        .map(|p| (p.clone(), true))
        .chain((0..64 * starts).map(|_| (uniform_point(rng, d).expect("d ≥ 1"), false)))
        .map(|(p, measured)| (value(p.coords()), p, measured))
        .collect();
    screen.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.2.cmp(&a.2)).then(a.1.lex_cmp(&b.1)));
    screen.truncate(starts);

    let lower = vec![0.0; d];
    let upper = vec![1.0; d];
    let opts = LbfgsOptions {
        max_iters: budget.steps,
        grad_tol: 1e-10,
        rel_tol: 1e-14,
        ..Default::default()
    };
    let mut from_measured: Option<(f64, Point)> = None;
    let mut from_screen: Option<(f64, Point)> = None;
    for (v0, p0, measured) in screen {
        let mut neg = |x: &[f64]| -value(x);
        let res = minimize_box(
            |x, g| numeric_gradient(&mut neg, x, &lower, &upper, 1e-6, g),
            p0.coords(),
            &lower,
            &upper,
            &opts,
        );
        let local = (-res.value, Point::clamped(res.x));
        let winner = pick_max((v0, p0), local);
        let slot = if measured { &mut from_measured } else { &mut from_screen };
        *slot = Some(match slot.take() {
            None => winner,
            Some(b) => pick_max(b, winner),
        });
    }
    Ok(prefer_first(from_measured, from_screen).expect("at least one start"))
}

/// Proposes one arm. Model-based kinds fall back to the Sobol' point for
/// `round_index` while there are no measurements; `sobol` always returns
/// the `round_index`-th point of `sobol`.
pub fn propose_arm(
    spec: &AcqSpec,
    model: &GpModel,
    d: usize,
    round_index: usize,
    sobol: &SobolSequence,
    rng: &mut RngStream,
) -> Result<Point> {
    Ok(propose_batch(spec, model, d, 1, round_index, sobol, rng)?.remove(0))
}

/// Proposes `q` arms. Model-based kinds pick them greedily, conditioning on a
/// fantasized observation at the posterior mean after each pick.
pub fn propose_batch(
    spec: &AcqSpec,
    model: &GpModel,
    d: usize,
    q: usize,
    round_index: usize,
    sobol: &SobolSequence,
    rng: &mut RngStream,
) -> Result<Vec<Point>> {
    spec.validate()?;
    if model.dim() != d || sobol.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: model.dim(),
        });
    }
    match spec.kind {
        AcqKind::Random => (0..q).map(|_| uniform_point(rng, d)).collect(),
        AcqKind::Sobol => sobol.points(round_index * q, q),
        _ if model.dataset().is_empty() => sobol.points(round_index * q, q),
        _ => {
            let budget = ArgmaxBudget::default();
            let mut arms = Vec::with_capacity(q);
            let mut current = model.clone();
            for i in 0..q {
                let (_, arm) = maximize_acquisition(spec, &current, budget, rng)?;
                if i + 1 < q {
                    let (mu, _) = current.predict(arm.coords());
                    current = current.fantasize(std::slice::from_ref(&arm), &[mu])?;
                }
                arms.push(arm);
            }
            Ok(arms)
        }
    }
}
