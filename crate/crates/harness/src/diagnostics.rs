//! Sampler diagnostics: how close 64 draws land to a known optimum, how
//! spread out they are, and how evenly the posterior spreads the chance of
//! being the maximizer across them.

use std::time::Instant;

use stagger::domain::mix64;
use stagger::samplers::PstarSampler;
use stagger::testbed::TestFunction;
use stagger::{GpModel, Point, RngStream, SobolSequence};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::method::MethodSpec;
use crate::runner::{check_traces, fnv1a, run_experiment};

pub const DIAGNOSTIC_SAMPLES: usize = 64;
pub const PMAX_DRAWS: usize = 1024;

/// Where the diagnostic points come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagnosticSampler {
    Pstar(PstarSampler),
    /// The first points of a scrambled Sobol' sequence, ignoring the model.
    Sobol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    /// `Σ‖x_i − x*‖² / 64`.
    pub rmse: f64,
    /// Mean signed deviation `x_ij − x*_j` over samples and coordinates.
    pub bias: f64,
    /// Geometric mean over dimensions of the per-dimension standard deviation.
    pub scale: f64,
    /// Standard deviation over samples of `p_max,i`.
    pub std_p_max: f64,
    /// Seconds spent drawing the samples.
    pub duration: f64,
    pub samples: Vec<Point>,
}

/// Draws 64 points with `sampler` and summarizes them against `true_opt`.
pub fn diagnostics(
    model: &GpModel,
    sampler: &DiagnosticSampler,
    true_opt: &Point,
    rng: &mut RngStream,
) -> Result<DiagnosticsRecord> {
    let d = model.dim();
    let start = Instant::now();
    let samples = match sampler {
        DiagnosticSampler::Pstar(s) => s.sample_many(model, DIAGNOSTIC_SAMPLES, rng)?,
        DiagnosticSampler::Sobol => SobolSequence::new(d, rng)?.points(0, DIAGNOSTIC_SAMPLES)?,
    };
    let duration = start.elapsed().as_secs_f64();
    summarize(model, samples, true_opt, duration, rng)
}

/// Diagnostics of a given sample set.
pub fn summarize(
    model: &GpModel,
    samples: Vec<Point>,
    true_opt: &Point,
    duration: f64,
    rng: &mut RngStream,
) -> Result<DiagnosticsRecord> {
    let d = true_opt.dim();
    if samples.is_empty() {
        return Err(HarnessError::Config("diagnostics need at least one sample".into()));
    }
    if let Some(p) = samples.iter().find(|p| p.dim() != d) {
        return Err(stagger::Error::DimensionMismatch {
            expected: d,
            got: p.dim(),
        }
        .into());
    }
    let n = samples.len() as f64;
    let rmse = samples.iter().map(|x| x.sq_distance(true_opt)).sum::<f64>() / n;
    let bias = samples
        .iter()
        .flat_map(|x| x.coords().iter().zip(true_opt.coords()).map(|(a, b)| a - b))
        .sum::<f64>()
        / (n * d as f64);
    let log_std_sum: f64 = (0..d)
        .map(|j| {
            // Shifted by the first sample so identical coordinates give exactly zero.
            let x0 = samples[0].coords()[j];
            let mean = samples.iter().map(|x| x.coords()[j] - x0).sum::<f64>() / n;
            let var = samples.iter().map(|x| (x.coords()[j] - x0 - mean).powi(2)).sum::<f64>() / n;
            var.sqrt().ln()
        })
        .sum();
    let scale = (log_std_sum / d as f64).exp();
    let p = p_max(model, &samples, PMAX_DRAWS, rng)?;
    let mean_p = p.iter().sum::<f64>() / n;
    let std_p_max = (p.iter().map(|v| (v - mean_p).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DiagnosticsRecord {
        rmse,
        bias,
        scale,
        std_p_max,
        duration,
        samples,
    })
}

/// Fraction of `draws` joint posterior samples at `points` in which each
/// point holds the maximum. Ties go to the earliest point.
pub fn p_max(model: &GpModel, points: &[Point], draws: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let sampler = model.joint_sampler(points)?;
    let mut wins = vec![0usize; points.len()];
    for _ in 0..draws {
        let y = sampler.draw(rng);
        let mut best = 0;
        for (i, v) in y.iter().enumerate() {
            if *v > y[best] {
                best = i;
            }
        }
        wins[best] += 1;
    }
    Ok(wins.into_iter().map(|w| w as f64 / draws as f64).collect())
}

pub const SOBOL_BASELINE: &str = "sobol-baseline";

/// Settings of the sampler comparison on the undistorted sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnoseConfig {
    pub num_dim: usize,
    pub num_rounds: usize,
    pub seeds: usize,
    pub seed: u64,
    /// Sampler names: any `p*` sampler method, or `sobol-baseline`, which
    /// places Sobol' points on the model of the `sts` run.
    pub samplers: Vec<String>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            num_dim: 5,
            num_rounds: 30,
            seeds: 5,
            seed: 0,
            samplers: ["sts", "pss", "ts-1000", "ts-10000", SOBOL_BASELINE]
                .map(String::from)
                .to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRun {
    pub sampler: String,
    pub seed_index: usize,
    pub record: DiagnosticsRecord,
    /// Mean seconds per round spent generating arms during the run.
    pub mean_round_time: f64,
    pub final_best: f64,
}

fn driver_of(sampler: &str) -> &str {
    if sampler == SOBOL_BASELINE {
        "sts"
    } else {
        sampler
    }
}

/// Optimizes the sphere once per sampler and seed, one arm per round, then
/// runs [`diagnostics`] on the final model. Results are ordered by sampler,
/// then seed.
pub fn run_diagnostics(cfg: &DiagnoseConfig) -> Result<Vec<DiagnosticRun>> {
    if cfg.samplers.is_empty() || cfg.seeds == 0 {
        return Err(HarnessError::Config(
            "diagnose needs at least one sampler and one seed".into(),
        ));
    }
    let mut drivers: Vec<MethodSpec> = Vec::new();
    let mut diag_samplers = Vec::with_capacity(cfg.samplers.len());
    for name in &cfg.samplers {
        let spec = MethodSpec::parse(driver_of(name))?;
        let sampler = if name == SOBOL_BASELINE {
            DiagnosticSampler::Sobol
        } else {
            DiagnosticSampler::Pstar(
                spec.pstar_sampler()
                    .ok_or_else(|| HarnessError::Config(format!("`{name}` is not a sampler of p*")))?,
            )
        };
        if !drivers.iter().any(|m| m.name == spec.name) {
            drivers.push(spec);
        }
        diag_samplers.push(sampler);
    }
    let exp = ExperimentConfig {
        functions: vec!["sphere".into()],
        num_dim: cfg.num_dim,
        num_rounds: cfg.num_rounds,
        num_arms: 1,
        methods: drivers,
        repeats: cfg.seeds,
        seed: cfg.seed,
        distort: false,
    };
    let traces = run_experiment(&exp)?;
    check_traces(&traces)?;
    let (true_opt, _) = TestFunction::by_name("sphere", cfg.num_dim)?
        .known_optimum()
        .expect("sphere has a known optimum");
    let mut runs = Vec::new();
    for (name, sampler) in cfg.samplers.iter().zip(&diag_samplers) {
        for seed_index in 0..cfg.seeds {
            let trace = traces
                .iter()
                .find(|t| t.method == driver_of(name) && t.repeat == seed_index)
                .expect("every driver ran every seed");
            let model = GpModel::fit(&trace.dataset(cfg.num_dim)?)?;
            let mut rng = RngStream::new(mix64(cfg.seed ^ fnv1a(name)), seed_index as u64);
            let record = diagnostics(&model, sampler, &true_opt, &mut rng)?;
            runs.push(DiagnosticRun {
                sampler: name.clone(),
                seed_index,
                record,
                mean_round_time: trace.mean_wall_time(),
                final_best: trace.final_best().unwrap_or(f64::NEG_INFINITY),
            });
        }
    }
    Ok(runs)
}
