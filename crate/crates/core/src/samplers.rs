//! Samplers of the maximizer distribution `p*(x)` of a GP posterior.
//!
//! * [`sts_sample`]: the stagger Thompson sampler. Starting from the maximizer
//!   of the posterior mean, it repeatedly proposes a move toward a uniform
//!   target point by a log-uniform fraction of the distance and accepts the
//!   move when a joint posterior draw at the two points favors it.
//! * [`ts_sample`]: Thompson sampling over a uniform candidate set.
//! * [`pss_sample`]: a Hit-and-Run walk with bisection-located chords, a
//!   Gaussian step along the chord and an adaptive step scale.

use rand_distr::{Distribution, StandardNormal};

use crate::domain::{uniform_point, Point, RngStream};
use crate::error::{Error, Result};
use crate::gp::{ArgmaxBudget, GpModel};

/// `ln 10⁶`: stagger lengths are log-uniform on `[10⁻⁶, 1]`.
pub const DEFAULT_STAGGER_K: f64 = 13.815_510_557_964_274;

/// How the stagger chain picks its starting arm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// Maximizer of the posterior mean.
    ArgmaxMean,
    Uniform,
    /// The measured point with the highest value.
    BestMeasured,
    /// Argmax of one joint posterior draw over the measured points.
    ThompsonAtMeasured,
}

/// How the perturbation length is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProposalMode {
    /// `s = exp(−k U)`.
    Stagger,
    /// `s = U`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StsConfig {
    /// Refinement iterations `M`.
    pub iterations: usize,
    pub k: f64,
    pub init: InitMode,
    pub proposal: ProposalMode,
    pub argmax_budget: ArgmaxBudget,
}

impl Default for StsConfig {
    fn default() -> Self {
        Self {
            iterations: 30,
            k: DEFAULT_STAGGER_K,
            init: InitMode::ArgmaxMean,
            proposal: ProposalMode::Stagger,
            argmax_budget: ArgmaxBudget::default(),
        }
    }
}

impl StsConfig {
    /// The canonical sampler and its ablations by name:
    /// `sts`, `sts-ui`, `sts-m`, `sts-t`, `sts-ns`.
    pub fn variant(name: &str) -> Option<Self> {
        let base = Self::default();
        let cfg = match name {
            "sts" => base,
            "sts-ui" => Self {
                init: InitMode::Uniform,
                ..base
            },
            "sts-m" => Self {
                init: InitMode::BestMeasured,
                ..base
            },
            "sts-t" => Self {
                init: InitMode::ThompsonAtMeasured,
                ..base
            },
            "sts-ns" => Self {
                proposal: ProposalMode::Uniform,
                ..base
            },
            _ => return None,
        };
        Some(cfg)
    }

    pub fn with_iterations(self, iterations: usize) -> Self {
        Self { iterations, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidConfig("stagger constant k must be positive".into()));
        }
        Ok(())
    }
}

/// A stagger length for a given uniform draw `u`: `exp(−k u)`.
pub fn stagger_from_uniform(u: f64, k: f64) -> f64 {
    (-k * u).exp()
}

/// Draws a stagger length in `(0, 1]`. The distribution does not depend on
/// the chain's state.
pub fn stagger_length(rng: &mut RngStream, k: f64) -> f64 {
    stagger_from_uniform(rng.uniform(), k)
}

/// `x_a + s (x_t − x_a)`; a convex combination, so it stays in the box.
pub fn perturb(x_a: &Point, x_t: &Point, s: f64) -> Result<Point> {
    if x_a.dim() != x_t.dim() {
        return Err(Error::DimensionMismatch {
            expected: x_a.dim(),
            got: x_t.dim(),
        });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidConfig(format!("perturbation length {s} outside [0, 1]")));
    }
    let coords = x_a
        .coords()
        .iter()
        .zip(x_t.coords())
        .map(|(a, t)| a + s * (t - a))
        .collect();
    Ok(Point::clamped(coords))
}

fn check_model_dim(model: &GpModel, d: usize) -> Result<()> {
    if model.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: d,
        });
    }
    Ok(())
}

/// Stagger sampler bound to one model, with the mean maximizer computed once
/// and shared by every draw.
pub struct StsSampler<'a> {
    model: &'a GpModel,
    cfg: StsConfig,
    anchor: Option<Point>,
}

impl<'a> StsSampler<'a> {
    pub fn new(model: &'a GpModel, cfg: StsConfig, rng: &mut RngStream) -> Result<Self> {
        cfg.validate()?;
        let anchor = if cfg.init == InitMode::ArgmaxMean && !model.dataset().is_empty() {
            Some(model.argmax_mean(cfg.argmax_budget, rng))
        } else {
            None
        };
        Ok(Self { model, cfg, anchor })
    }

    /// The posterior-mean maximizer the chains start from, when used.
    pub fn anchor(&self) -> Option<&Point> {
        self.anchor.as_ref()
    }

    fn initial(&self, rng: &mut RngStream) -> Result<Point> {
        let d = self.model.dim();
        let data = self.model.dataset();
        Ok(match self.cfg.init {
            InitMode::ArgmaxMean => self.anchor.clone().expect("computed for non-empty data"),
            InitMode::Uniform => uniform_point(rng, d)?,
            InitMode::BestMeasured => data.best().expect("non-empty data").0.clone(),
            InitMode::ThompsonAtMeasured => {
                let ys = self.model.joint_sample(data.points(), rng)?;
                let i = argmax(&ys);
                data.points()[i].clone()
            }
        })
    }

    pub fn draw(&self, rng: &mut RngStream) -> Result<Point> {
        let d = self.model.dim();
        if self.model.dataset().is_empty() {
            return uniform_point(rng, d);
        }
        let mut arm = self.initial(rng)?;
        let mut pair = [arm.clone(), arm.clone()];
        for _ in 0..self.cfg.iterations {
            let target = uniform_point(rng, d)?;
            let s = match self.cfg.proposal {
                ProposalMode::Stagger => stagger_length(rng, self.cfg.k),
                ProposalMode::Uniform => rng.uniform(),
            };
            let proposal = perturb(&arm, &target, s)?;
            pair[0] = arm;
            pair[1] = proposal;
            let ys = self.model.joint_sample(&pair, rng)?;
            arm = if ys[1] > ys[0] {
                pair[1].clone()
            } else {
                pair[0].clone()
            };
        }
        Ok(arm)
    }
}

/// One stagger Thompson sample.
pub fn sts_sample(model: &GpModel, d: usize, cfg: &StsConfig, rng: &mut RngStream) -> Result<Point> {
    check_model_dim(model, d)?;
    StsSampler::new(model, cfg.clone(), rng)?.draw(rng)
}

/// How a candidate-set Thompson sample draws the joint posterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointMethod {
    /// Dense factorization up to [`EXACT_CANDIDATE_LIMIT`] candidates,
    /// pathwise draws with [`DEFAULT_FEATURES`] features above it.
    Auto,
    Exact,
    Pathwise {
        features: usize,
    },
}

pub const EXACT_CANDIDATE_LIMIT: usize = 512;
pub const DEFAULT_FEATURES: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct TsConfig {
    pub num_candidates: usize,
    pub joint: JointMethod,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self {
            num_candidates: 1000,
            joint: JointMethod::Auto,
        }
    }
}

impl TsConfig {
    pub fn with_candidates(num_candidates: usize) -> Self {
        Self {
            num_candidates,
            ..Self::default()
        }
    }
}

/// First index of the largest value.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Thompson sample over `num_candidates` uniform candidates: the candidate
/// with the largest value in one joint posterior draw.
pub fn ts_sample(model: &GpModel, d: usize, cfg: &TsConfig, rng: &mut RngStream) -> Result<Point> {
    check_model_dim(model, d)?;
    if cfg.num_candidates == 0 {
        return Err(Error::InvalidConfig("num_candidates must be at least 1".into()));
    }
    if model.dataset().is_empty() {
        return uniform_point(rng, d);
    }
    let candidates = (0..cfg.num_candidates)
        .map(|_| uniform_point(rng, d))
        .collect::<Result<Vec<_>>>()?;
    if candidates.len() == 1 {
        return Ok(candidates.into_iter().next().expect("one candidate"));
    }
    let features = match cfg.joint {
        JointMethod::Exact => None,
        JointMethod::Auto if cfg.num_candidates <= EXACT_CANDIDATE_LIMIT => None,
        JointMethod::Auto => Some(DEFAULT_FEATURES),
        JointMethod::Pathwise { features } => Some(features),
    };
    let values = match features {
        None => model.joint_sample(&candidates, rng)?,
        Some(f) => model.pathwise_draw(f, rng).evaluate_many(&candidates),
    };
    let i = argmax(&values);
    Ok(candidates.into_iter().nth(i).expect("index in range"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PssConfig {
    pub iterations: usize,
    /// Initial proposal standard deviation as a fraction of the chord length.
    pub proposal_scale: f64,
    pub scale_up: f64,
    pub scale_down: f64,
    pub bisection_steps: usize,
}

impl Default for PssConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            proposal_scale: 0.5,
            scale_up: 1.1,
            scale_down: 0.9,
            bisection_steps: 16,
        }
    }
}

impl PssConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.iterations >= 1
            && self.proposal_scale > 0.0
            && self.scale_up > 1.0
            && self.scale_down > 0.0
            && self.scale_down < 1.0
            && self.bisection_steps >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid PSS configuration {self:?}")))
        }
    }
}

fn inside(x: &[f64], dir: &[f64], t: f64) -> bool {
    x.iter().zip(dir).all(|(a, u)| (0.0..=1.0).contains(&(a + t * u)))
}

/// Largest `t ≥ 0` (to within `2^-steps`) with `x + t·dir` in the box,
/// found by bisection. The returned parameter is always inside.
fn bisect_exit(x: &[f64], dir: &[f64], steps: usize) -> f64 {
    let reach = (x.len() as f64).sqrt() * 1.000_001;
    let extra = reach.log2().ceil().max(0.0) as usize;
    let (mut lo, mut hi) = (0.0, reach);
    if inside(x, dir, hi) {
        return hi;
    }
    for _ in 0..steps + extra {
        let mid = 0.5 * (lo + hi);
        if inside(x, dir, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Chord parameters `(t_lo ≤ 0, t_hi ≥ 0)` of the line `x + t·dir` through
/// the unit box.
pub fn chord_bounds(x: &[f64], dir: &[f64], steps: usize) -> (f64, f64) {
    let back: Vec<f64> = dir.iter().map(|u| -u).collect();
    (-bisect_exit(x, &back, steps), bisect_exit(x, dir, steps))
}

/// One Hit-and-Run sample with a Gaussian chord proposal and an adaptive scale.
pub fn pss_sample(model: &GpModel, d: usize, cfg: &PssConfig, rng: &mut RngStream) -> Result<Point> {
    check_model_dim(model, d)?;
    cfg.validate()?;
    let mut x = uniform_point(rng, d)?;
    if model.dataset().is_empty() {
        return Ok(x);
    }
    let mut scale = cfg.proposal_scale;
    for _ in 0..cfg.iterations {
        let dir = loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|c| c / norm).collect::<Vec<f64>>();
            }
        };
        let (t_lo, t_hi) = chord_bounds(x.coords(), &dir, cfg.bisection_steps);
        let chord = t_hi - t_lo;
        let z: f64 = StandardNormal.sample(rng);
        let t = (z * scale * chord).clamp(t_lo, t_hi);
        let proposal = Point::clamped(x.coords().iter().zip(&dir).map(|(a, u)| a + t * u).collect());
        let ys = model.joint_sample(&[x.clone(), proposal.clone()], rng)?;
        if ys[1] > ys[0] {
            x = proposal;
            scale *= cfg.scale_up;
        } else {
            scale *= cfg.scale_down;
        }
    }
    Ok(x)
}

/// A sampler of `p*` selected at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum PstarSampler {
    Sts(StsConfig),
    Ts(TsConfig),
    Pss(PssConfig),
}

impl PstarSampler {
    /// `n` independent draws, each on its own sub-stream of one forked stream.
    pub fn sample_many(&self, model: &GpModel, n: usize, rng: &mut RngStream) -> Result<Vec<Point>> {
        let d = model.dim();
        let base = rng.fork();
        match self {
            PstarSampler::Sts(cfg) => {
                let sampler = StsSampler::new(model, cfg.clone(), &mut base.substream(0))?;
                (0..n)
                    .map(|i| sampler.draw(&mut base.substream(i as u64 + 1)))
                    .collect()
            }
            PstarSampler::Ts(cfg) => (0..n)
                .map(|i| ts_sample(model, d, cfg, &mut base.substream(i as u64 + 1)))
                .collect(),
            PstarSampler::Pss(cfg) => (0..n)
                .map(|i| pss_sample(model, d, cfg, &mut base.substream(i as u64 + 1)))
                .collect(),
        }
    }
}
