//! Bayesian-optimization building blocks on the unit box: a Gaussian-process
//! surrogate, Thompson-style samplers of the maximizer distribution
//! (including the stagger sampler), classical acquisitions, minimal terminal
//! variance batch design, and a set of distortable benchmark functions.

pub mod acquisitions;
pub mod domain;
pub mod error;
pub mod gp;
pub mod mtv;
pub mod optim;
pub mod samplers;
pub mod testbed;

pub use domain::{sobol_points, uniform_point, Point, RngStream, SobolSequence};
pub use error::{Error, Result};
pub use gp::{ArgmaxBudget, Dataset, GpModel, KernelParams, PosteriorGaussian};
