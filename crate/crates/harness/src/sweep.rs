//! Ablation and refinement-iteration sweeps of the stagger sampler.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::method::MethodSpec;
use crate::runner::{check_traces, run_experiment, RunTrace};
use crate::score::{rank_scores, ScoreTable};

pub const ABLATION_VARIANTS: [&str; 5] = ["sts", "sts-ui", "sts-m", "sts-t", "sts-ns"];

/// Method used as the second contestant when a sweep has a single `M`.
pub const SWEEP_REFERENCE: &str = "random";

#[derive(Clone, Debug)]
pub struct Comparison {
    pub traces: Vec<RunTrace>,
    pub table: ScoreTable,
}

fn compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let traces = run_experiment(cfg)?;
    check_traces(&traces)?;
    let table = rank_scores(&traces)?;
    Ok(Comparison { traces, table })
}

/// Runs the canonical sampler against its four ablations on the functions,
/// dimension, rounds, arms, repeats and seed of `base`.
pub fn ablate(base: &ExperimentConfig) -> Result<Comparison> {
    compare(&ablation_config(base)?)
}

/// `base` with the ablation variants as its methods.
pub fn ablation_config(base: &ExperimentConfig) -> Result<ExperimentConfig> {
    let methods = ABLATION_VARIANTS
        .iter()
        .map(|m| MethodSpec::parse(m))
        .collect::<Result<_>>()?;
    base.with_methods(methods)
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub ms: Vec<usize>,
    pub comparison: Comparison,
}

impl SweepResult {
    pub fn method_name(m: usize) -> String {
        format!("sts@{m}")
    }

    /// `(M, score, se)`, one row per swept value.
    pub fn rows(&self) -> Vec<(usize, f64, f64)> {
        let t = &self.comparison.table;
        self.ms
            .iter()
            .map(|&m| {
                let name = Self::method_name(m);
                (m, t.score_of(&name).unwrap(), t.se_of(&name).unwrap())
            })
            .collect()
    }
}

/// Scores the canonical sampler with each number of refinement iterations
/// in `ms`, ranked against each other. A single value is ranked against
/// [`SWEEP_REFERENCE`].
pub fn sweep_m(base: &ExperimentConfig, ms: &[usize]) -> Result<SweepResult> {
    let (cfg, unique) = sweep_config(base, ms)?;
    let comparison = compare(&cfg)?;
    Ok(SweepResult { ms: unique, comparison })
}

/// `base` with one method per distinct value of `ms`, plus the reference
/// method when there is only one; also returns the distinct values.
pub fn sweep_config(base: &ExperimentConfig, ms: &[usize]) -> Result<(ExperimentConfig, Vec<usize>)> {
    let mut unique: Vec<usize> = Vec::new();
    for &m in ms {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    if unique.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one M value".into()));
    }
    let mut methods: Vec<MethodSpec> = unique
        .iter()
        .map(|&m| MethodSpec::parse(&SweepResult::method_name(m)))
        .collect::<Result<_>>()?;
    if methods.len() == 1 {
        methods.push(MethodSpec::parse(SWEEP_REFERENCE)?);
    }
    Ok((base.with_methods(methods)?, unique))
}
