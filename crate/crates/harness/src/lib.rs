//! Benchmark harness for the `stagger` toolkit: configurable optimization
//! runs over distorted test functions, per-round rank scores, sampler
//! diagnostics, ablations and iteration-count sweeps, and CSV/SVG output.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod method;
pub mod runner;
pub mod score;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use method::{MethodKind, MethodSpec};
pub use runner::{run_experiment, run_trace, RunTrace};
pub use score::{rank_scores, scaled_ranks, ScoreTable};
