//! Runs every (method, function, repeat) cell of an experiment.

use std::time::Instant;

use rayon::prelude::*;
use stagger::acquisitions::propose_batch;
use stagger::domain::mix64;
use stagger::mtv::{design_batch, MtvConfig};
use stagger::testbed::TestFunction;
use stagger::{Dataset, GpModel, Point, RngStream, SobolSequence};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::method::{MethodKind, MethodSpec};

/// One optimization run of one method on one (function, repeat) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub method: String,
    pub function: String,
    pub repeat: usize,
    /// Largest measured value after each round.
    pub best_so_far: Vec<f64>,
    /// Seconds spent generating arms in each round.
    pub wall_time: Vec<f64>,
    /// Arms measured in each round; empty when read back from CSV.
    pub arms: Vec<Vec<Point>>,
    /// Measured values, aligned with `arms`.
    pub values: Vec<Vec<f64>>,
    /// Set when the run stopped early; the vectors then cover the completed
    /// rounds only.
    pub error: Option<String>,
}

impl RunTrace {
    pub fn num_rounds(&self) -> usize {
        self.best_so_far.len()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.best_so_far.last().copied()
    }

    pub fn mean_wall_time(&self) -> f64 {
        if self.wall_time.is_empty() {
            return 0.0;
        }
        self.wall_time.iter().sum::<f64>() / self.wall_time.len() as f64
    }

    /// Every measurement of the run as a dataset.
    pub fn dataset(&self, d: usize) -> Result<Dataset> {
        let mut data = Dataset::new(d)?;
        for (arms, values) in self.arms.iter().zip(&self.values) {
            for (x, &y) in arms.iter().zip(values) {
                data.push(x.clone(), y)?;
            }
        }
        Ok(data)
    }
}

pub(crate) fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn cell_id(function_index: usize, repeat: usize) -> u64 {
    ((function_index as u64) << 32) | repeat as u64
}

/// Seed of the distortion applied to one (function, repeat) cell. Every
/// method sees the same distortion.
pub fn distortion_seed(seed: u64, function_index: usize, repeat: usize) -> u64 {
    mix64(seed ^ mix64(cell_id(function_index, repeat)))
}

/// The random stream owned by one trace.
pub fn trace_stream(seed: u64, method: &str, function_index: usize, repeat: usize) -> RngStream {
    RngStream::new(mix64(seed ^ fnv1a(method)), cell_id(function_index, repeat))
}

/// The objective of one (function, repeat) cell.
pub fn cell_function(cfg: &ExperimentConfig, function_index: usize, repeat: usize) -> Result<TestFunction> {
    let name = cfg
        .functions
        .get(function_index)
        .ok_or_else(|| HarnessError::Config(format!("no function at index {function_index}")))?;
    let f = TestFunction::by_name(name, cfg.num_dim).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(if cfg.distort {
        f.distort(distortion_seed(cfg.seed, function_index, repeat))
    } else {
        f
    })
}

fn generate_arms(
    method: &MethodSpec,
    model: Option<&GpModel>,
    d: usize,
    q: usize,
    round: usize,
    sobol: &SobolSequence,
    rng: &mut RngStream,
) -> stagger::Result<Vec<Point>> {
    if let Some(sampler) = method.pstar_sampler() {
        let model = model.expect("model-based method without a model");
        return sampler.sample_many(model, q, rng);
    }
    match &method.kind {
        MethodKind::Acquisition(spec) => {
            let prior;
            let model = match model {
                Some(m) => m,
                None => {
                    prior = GpModel::fit(&Dataset::new(d)?)?;
                    &prior
                }
            };
            propose_batch(spec, model, d, q, round, sobol, rng)
        }
        MethodKind::Mtv(sampler) => {
            let model = model.expect("model-based method without a model");
            let cfg = MtvConfig {
                pstar_sampler: sampler.clone(),
                ..MtvConfig::new(q)
            };
            Ok(design_batch(model, d, &cfg, rng)?.arms)
        }
        _ => unreachable!("p* samplers handled above"),
    }
}

/// Runs one trace. Failures are recorded in [`RunTrace::error`].
pub fn run_trace(cfg: &ExperimentConfig, method: &MethodSpec, function_index: usize, repeat: usize) -> RunTrace {
    let d = cfg.num_dim;
    let mut trace = RunTrace {
        method: method.name.clone(),
        function: cfg.functions.get(function_index).cloned().unwrap_or_default(),
        repeat,
        best_so_far: Vec::with_capacity(cfg.num_rounds),
        wall_time: Vec::with_capacity(cfg.num_rounds),
        arms: Vec::with_capacity(cfg.num_rounds),
        values: Vec::with_capacity(cfg.num_rounds),
        error: None,
    };
    if let Err(e) = fill_trace(cfg, method, function_index, repeat, d, &mut trace) {
        trace.error = Some(e.to_string());
    }
    trace
}

fn fill_trace(
    cfg: &ExperimentConfig,
    method: &MethodSpec,
    function_index: usize,
    repeat: usize,
    d: usize,
    trace: &mut RunTrace,
) -> Result<()> {
    let f = cell_function(cfg, function_index, repeat)?;
    let mut rng = trace_stream(cfg.seed, &method.name, function_index, repeat);
    let sobol = SobolSequence::new(d, &mut rng)?;
    let mut data = Dataset::new(d)?;
    let mut best = f64::NEG_INFINITY;
    for round in 0..cfg.num_rounds {
        let model = if method.uses_model() {
            Some(GpModel::fit(&data)?)
        } else {
            None
        };
        let start = Instant::now();
        let arms = generate_arms(method, model.as_ref(), d, cfg.num_arms, round, &sobol, &mut rng)?;
        let elapsed = start.elapsed().as_secs_f64();
        let values = arms
            .iter()
            .map(|x| f.evaluate_unit(x))
            .collect::<stagger::Result<Vec<f64>>>()?;
        for (x, &y) in arms.iter().zip(&values) {
            data.push(x.clone(), y)?;
            best = best.max(y);
        }
        trace.best_so_far.push(best);
        trace.wall_time.push(elapsed);
        trace.arms.push(arms);
        trace.values.push(values);
    }
    Ok(())
}

/// Runs every cell, in parallel, and returns the traces ordered by method,
/// then function, then repeat. A failing trace carries its error and does
/// not stop the others.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    cfg.validate()?;
    let jobs: Vec<(&MethodSpec, usize, usize)> = cfg
        .methods
        .iter()
        .flat_map(|m| (0..cfg.functions.len()).flat_map(move |fi| (0..cfg.repeats).map(move |r| (m, fi, r))))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(m, fi, r)| run_trace(cfg, m, fi, r))
        .collect())
}

/// Fails with the first recorded trace error, if any.
pub fn check_traces(traces: &[RunTrace]) -> Result<()> {
    let failed: Vec<&RunTrace> = traces.iter().filter(|t| t.error.is_some()).collect();
    match failed.first() {
        None => Ok(()),
        Some(t) => Err(HarnessError::Traces {
            failed: failed.len(),
            total: traces.len(),
            first: format!(
                "{} on {} (repeat {}): {}",
                t.method,
                t.function,
                t.repeat,
                t.error.as_deref().unwrap_or_default()
            ),
        }),
    }
}
