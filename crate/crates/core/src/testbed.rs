//! Benchmark objectives on the unit box, maximization convention.
//!
//! Each function is evaluated by mapping `[0, 1]^d` affinely onto its usual
//! native domain and negating the classical (minimization) form, so larger is
//! always better. Seeded [`Distortion`]s re-parameterize the box with a
//! coordinate permutation, reflections and toroidal shifts.

use std::f64::consts::{E, PI};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::{check_dim, Point, RngStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Ackley,
    DixonPrice,
    Griewank,
    Levy,
    Michalewicz,
    Rastrigin,
    Rosenbrock,
    /// `−‖x − 0.65·1‖²` directly on the unit box.
    Sphere,
    StyblinskiTang,
}

impl Benchmark {
    pub const ALL: [Benchmark; 9] = [
        Benchmark::Ackley,
        Benchmark::DixonPrice,
        Benchmark::Griewank,
        Benchmark::Levy,
        Benchmark::Michalewicz,
        Benchmark::Rastrigin,
        Benchmark::Rosenbrock,
        Benchmark::Sphere,
        Benchmark::StyblinskiTang,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ackley => "ackley",
            Benchmark::DixonPrice => "dixonprice",
            Benchmark::Griewank => "griewank",
            Benchmark::Levy => "levy",
            Benchmark::Michalewicz => "michalewicz",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Sphere => "sphere",
            Benchmark::StyblinskiTang => "stybtang",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| Error::UnknownFunction(name.to_string()))
    }

    /// Per-dimension native domain.
    pub fn native_bounds(self) -> (f64, f64) {
        match self {
            Benchmark::Ackley => (-32.768, 32.768),
            Benchmark::DixonPrice | Benchmark::Levy => (-10.0, 10.0),
            Benchmark::Griewank => (-600.0, 600.0),
            Benchmark::Michalewicz => (0.0, PI),
            Benchmark::Rastrigin => (-5.12, 5.12),
            Benchmark::Rosenbrock => (-5.0, 10.0),
            Benchmark::Sphere => (0.0, 1.0),
            Benchmark::StyblinskiTang => (-5.0, 5.0),
        }
    }

    /// The classical form, to be minimized.
    pub fn classical(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Benchmark::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            Benchmark::DixonPrice => {
                let head = (x[0] - 1.0).powi(2);
                head + x
                    .windows(2)
                    .enumerate()
                    .map(|(i, w)| (i + 2) as f64 * (2.0 * w[1] * w[1] - w[0]).powi(2))
                    .sum::<f64>()
            }
            Benchmark::Griewank => {
                let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                s - p + 1.0
            }
            Benchmark::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let last = w[w.len() - 1];
                let mid: f64 = w[..w.len() - 1]
                    .iter()
                    .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                    .sum();
                (PI * w[0]).sin().powi(2) + mid + (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2))
            }
            Benchmark::Michalewicz => -x
                .iter()
                .enumerate()
                .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(20))
                .sum::<f64>(),
            Benchmark::Rastrigin => 10.0 * d + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
            Benchmark::Sphere => x.iter().map(|v| (v - 0.65).powi(2)).sum(),
            Benchmark::StyblinskiTang => 0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>(),
        }
    }

    /// Unit-box coordinate of the optimum (identical in every dimension) and
    /// the optimal value, where the optimum has a simple closed form.
    pub fn optimum_coordinate(self) -> Option<f64> {
        let (lo, hi) = self.native_bounds();
        let native = match self {
            Benchmark::Ackley | Benchmark::Griewank | Benchmark::Rastrigin => 0.0,
            Benchmark::Levy | Benchmark::Rosenbrock => 1.0,
            Benchmark::Sphere => 0.65,
            Benchmark::DixonPrice | Benchmark::Michalewicz | Benchmark::StyblinskiTang => return None,
        };
        Some((native - lo) / (hi - lo))
    }
}

/// Permutation, reflection and toroidal shift of the unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct Distortion {
    pub permutation: Vec<usize>,
    pub reflections: Vec<bool>,
    pub shifts: Vec<f64>,
}

impl Distortion {
    pub fn identity(d: usize) -> Self {
        Self {
            permutation: (0..d).collect(),
            reflections: vec![false; d],
            shifts: vec![0.0; d],
        }
    }

    pub fn random(d: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, 0x0d15_70f7);
        let mut permutation: Vec<usize> = (0..d).collect();
        permutation.shuffle(&mut rng);
        let reflections = (0..d).map(|_| rng.random_bool(0.5)).collect();
        let shifts = (0..d).map(|_| rng.uniform()).collect();
        Self {
            permutation,
            reflections,
            shifts,
        }
    }

    pub fn dim(&self) -> usize {
        self.permutation.len()
    }

    /// Maps a box point to the coordinates the underlying function sees.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut v = x[self.permutation[i]];
                if self.reflections[i] {
                    v = 1.0 - v;
                }
                let t = v + self.shifts[i];
                t - t.floor()
            })
            .collect()
    }

    /// Inverse of [`Distortion::apply`] for coordinates in `[0, 1)`.
    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.dim() {
            let t = y[i] - self.shifts[i];
            let mut v = t - t.floor();
            if self.reflections[i] {
                v = 1.0 - v;
            }
            x[self.permutation[i]] = v;
        }
        x
    }
}

/// A benchmark in a fixed dimension, possibly distorted.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    benchmark: Benchmark,
    dim: usize,
    /// Applied last-to-first on evaluation.
    distortions: Vec<Distortion>,
}

impl TestFunction {
    pub fn new(benchmark: Benchmark, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            benchmark,
            dim,
            distortions: Vec::new(),
        })
    }

    /// Registry lookup by name.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        Self::new(Benchmark::from_name(name)?, dim)
    }

    pub fn name(&self) -> &'static str {
        self.benchmark.name()
    }

    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A copy re-parameterized by `distortion`: `g(x) = f(D(x))`.
    pub fn with_distortion(&self, distortion: Distortion) -> Result<Self> {
        if distortion.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: distortion.dim(),
            });
        }
        let mut out = self.clone();
        out.distortions.push(distortion);
        Ok(out)
    }

    pub fn distort(&self, seed: u64) -> Self {
        self.with_distortion(Distortion::random(self.dim, seed))
            .expect("dimension matches by construction")
    }

    /// Value at a unit-box point (larger is better).
    pub fn evaluate_unit(&self, x: &Point) -> Result<f64> {
        self.evaluate_coords(x.coords())
    }

    pub fn evaluate_coords(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (index, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfBounds { index, value });
            }
        }
        let mut u = x.to_vec();
        for dist in self.distortions.iter().rev() {
            u = dist.apply(&u);
        }
        let (lo, hi) = self.benchmark.native_bounds();
        let native: Vec<f64> = u.iter().map(|v| lo + (hi - lo) * v).collect();
        Ok(-self.benchmark.classical(&native))
    }

    /// Location (unit box) and value of the global maximum, when known.
    pub fn known_optimum(&self) -> Option<(Point, f64)> {
        let c = self.benchmark.optimum_coordinate()?;
        let mut loc = vec![c; self.dim];
        for dist in &self.distortions {
            loc = dist.invert(&loc);
        }
        let loc = Point::clamped(loc);
        let value = -self.benchmark.classical(&{
            let (lo, hi) = self.benchmark.native_bounds();
            vec![lo + (hi - lo) * c; self.dim]
        });
        Some((loc, value))
    }
}

/// Seeded random re-parameterization of `f`.
pub fn distort(f: &TestFunction, seed: u64) -> TestFunction {
    f.distort(seed)
}
