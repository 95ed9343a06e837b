//! Gaussian-process surrogate on the unit box.
//!
//! Targets are standardized before fitting; every public quantity (means,
//! covariances, samples, variances) is reported back in objective units.
//! A fitted [`GpModel`] is immutable and can be shared across threads.

mod fit;
mod kernel;
mod linalg;
mod pathwise;

use nalgebra::{DMatrix, DVector};

use crate::domain::{check_dim, uniform_point, Point, RngStream};
use crate::error::{Error, Result};
use crate::optim::{minimize_box, LbfgsOptions};

pub use fit::FitOptions;
pub use kernel::{KernelParams, NOISE_FLOOR};
pub use linalg::{cholesky_with_jitter, psd_factor, MvnSampler, JITTER_LADDER};
pub use pathwise::PathwiseDraw;

/// Measured `(x, y)` pairs sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<Point>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            points: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn from_parts(dim: usize, points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        let mut data = Self::new(dim)?;
        if points.len() != values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        for (p, y) in points.into_iter().zip(values) {
            data.push(p, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, point: Point, value: f64) -> Result<()> {
        if point.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.dim(),
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("measurement"));
        }
        self.points.push(point);
        self.values.push(value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The measurement with the largest value (first one on ties).
    pub fn best(&self) -> Option<(&Point, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &y) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| y > b) {
                best = Some((i, y));
            }
        }
        best.map(|(i, y)| (&self.points[i], y))
    }

    /// Copy sorted by coordinates, then value.
    fn canonical(&self) -> Dataset {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.points[a]
                .lex_cmp(&self.points[b])
                .then(self.values[a].total_cmp(&self.values[b]))
        });
        Dataset {
            dim: self.dim,
            points: order.iter().map(|&i| self.points[i].clone()).collect(),
            values: order.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// Multivariate normal over a finite set of query points (objective units).
#[derive(Clone, Debug)]
pub struct PosteriorGaussian {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl PosteriorGaussian {
    pub fn variances(&self) -> Vec<f64> {
        self.covariance.diagonal().iter().map(|v| v.max(0.0)).collect()
    }
}

/// Budget for the multi-start maximization of the posterior mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArgmaxBudget {
    pub starts: usize,
    pub steps: usize,
}

impl Default for ArgmaxBudget {
    fn default() -> Self {
        Self { starts: 8, steps: 64 }
    }
}

/// A Gaussian process conditioned on a [`Dataset`].
#[derive(Clone, Debug)]
pub struct GpModel {
    data: Dataset,
    params: KernelParams,
    shift: f64,
    scale: f64,
    /// Noise variance plus any jitter needed to factor the Gram matrix.
    diag_noise: f64,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    y_norm: DVector<f64>,
}

fn normalization(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 1.0);
    }
    let var = values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd > 1e-12 * mean.abs().max(1.0) {
        (mean, sd)
    } else {
        (mean, 1.0)
    }
}

impl GpModel {
    /// Fits kernel hyperparameters by maximizing the log marginal likelihood
    /// and conditions on `data`. Empty data yields the prior model.
    pub fn fit(data: &Dataset) -> Result<Self> {
        Self::fit_with(data, &FitOptions::default())
    }

    pub fn fit_with(data: &Dataset, opts: &FitOptions) -> Result<Self> {
        let data = data.canonical();
        if data.is_empty() {
            let params = KernelParams::default_for(data.dim());
            return Self::condition(data, params, 0.0, 1.0);
        }
        let (shift, scale) = normalization(&data.values);
        let params = fit::optimize_hyperparameters(&data, shift, scale, opts)?;
        Self::condition(data, params, shift, scale)
    }

    /// Conditions on `data` with fixed hyperparameters (no fitting).
    pub fn with_params(data: &Dataset, params: KernelParams) -> Result<Self> {
        params.validate(data.dim())?;
        let data = data.canonical();
        let (shift, scale) = normalization(&data.values);
        Self::condition(data, params, shift, scale)
    }

    fn condition(data: Dataset, params: KernelParams, shift: f64, scale: f64) -> Result<Self> {
        params.validate(data.dim())?;
        let n = data.len();
        let y_norm = DVector::from_iterator(n, data.values.iter().map(|y| (y - shift) / scale));
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = params.kernel(data.points[i].coords(), data.points[j].coords());
                gram[(i, j)] = k;
                gram[(j, i)] = k;
            }
            gram[(i, i)] += params.noise_variance;
        }
        let (chol, jitter) = cholesky_with_jitter(&gram, 1.0, "training Gram matrix")?;
        let alpha = solve_cholesky(&chol, &y_norm);
        let diag_noise = params.noise_variance + jitter;
        Ok(Self {
            data,
            params,
            shift,
            scale,
            diag_noise,
            chol,
            alpha,
            y_norm,
        })
    }

    /// A model with the same hyperparameters and normalization, additionally
    /// conditioned on `(points, values)`. Used for fantasized batch steps.
    pub fn fantasize(&self, points: &[Point], values: &[f64]) -> Result<Self> {
        let mut data = self.data.clone();
        for (p, &y) in points.iter().zip(values) {
            data.push(p.clone(), y)?;
        }
        Self::condition(data.canonical(), self.params.clone(), self.shift, self.scale)
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// `(shift, scale)` mapping objective units to normalized units.
    pub fn normalization(&self) -> (f64, f64) {
        (self.shift, self.scale)
    }

    /// Prior variance in objective units.
    pub fn prior_variance(&self) -> f64 {
        self.params.output_scale * self.scale * self.scale
    }

    /// Log marginal likelihood of the normalized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.data.len() as f64;
        let logdet: f64 = self.chol.diagonal().iter().map(|v| v.ln()).sum();
        -0.5 * self.y_norm.dot(&self.alpha) - logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    fn check_query(&self, query: &[Point]) -> Result<()> {
        for p in query {
            if p.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    got: p.dim(),
                });
            }
        }
        Ok(())
    }

    /// `L⁻¹ K(X, query)` (n × m).
    fn whitened_cross(&self, query: &[&[f64]]) -> DMatrix<f64> {
        let n = self.data.len();
        let mut cross = DMatrix::zeros(n, query.len());
        for (c, q) in query.iter().enumerate() {
            for (r, x) in self.data.points.iter().enumerate() {
                cross[(r, c)] = self.params.kernel(x.coords(), q);
            }
        }
        if n > 0 {
            self.chol.solve_lower_triangular_mut(&mut cross);
        }
        cross
    }

    /// Normalized posterior mean and covariance at `query`.
    fn posterior_normalized(&self, query: &[&[f64]]) -> (DVector<f64>, DMatrix<f64>) {
        let m = query.len();
        let v = self.whitened_cross(query);
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let k = self.params.kernel(query[i], query[j]) - v.column(i).dot(&v.column(j));
                cov[(i, j)] = k;
                cov[(j, i)] = k;
            }
        }
        // mean = K(q, X) α = Vᵀ L⁻¹ y
        let mean = if self.data.is_empty() {
            DVector::zeros(m)
        } else {
            let w = self
                .chol
                .solve_lower_triangular(&self.y_norm)
                .expect("factor has a nonzero diagonal");
            v.transpose() * w
        };
        (mean, cov)
    }

    /// Exact posterior mean vector and covariance matrix at `query`.
    pub fn posterior(&self, query: &[Point]) -> Result<PosteriorGaussian> {
        self.check_query(query)?;
        let refs: Vec<&[f64]> = query.iter().map(|p| p.coords()).collect();
        let (mean, cov) = self.posterior_normalized(&refs);
        Ok(PosteriorGaussian {
            mean: mean.map(|m| m * self.scale + self.shift),
            covariance: cov * (self.scale * self.scale),
        })
    }

    /// Posterior mean and variance at one location, objective units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let n = self.data.len();
        if n == 0 {
            return (self.shift, self.prior_variance());
        }
        let mut k = DVector::zeros(n);
        for (r, p) in self.data.points.iter().enumerate() {
            k[r] = self.params.kernel(p.coords(), x);
        }
        let mean = k.dot(&self.alpha);
        self.chol.solve_lower_triangular_mut(&mut k);
        let var = (self.params.output_scale - k.norm_squared()).max(0.0);
        (mean * self.scale + self.shift, var * self.scale * self.scale)
    }

    /// Posterior mean at `x` and its gradient, objective units.
    pub fn mean_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut mean = 0.0;
        for (p, a) in self.data.points.iter().zip(self.alpha.iter()) {
            mean += a * self.params.kernel(p.coords(), x);
            self.params.accumulate_kernel_grad(x, p.coords(), *a, grad);
        }
        grad.iter_mut().for_each(|g| *g *= self.scale);
        mean * self.scale + self.shift
    }

    /// One draw from the joint posterior at `query`.
    ///
    /// Repeated query points receive identical values, and points with zero
    /// posterior variance receive their posterior mean.
    pub fn joint_sample(&self, query: &[Point], rng: &mut RngStream) -> Result<Vec<f64>> {
        self.check_query(query)?;
        if query.is_empty() {
            return Ok(Vec::new());
        }
        let mut unique: Vec<&[f64]> = Vec::with_capacity(query.len());
        let mut index = Vec::with_capacity(query.len());
        for p in query {
            match unique.iter().position(|u| *u == p.coords()) {
                Some(i) => index.push(i),
                None => {
                    index.push(unique.len());
                    unique.push(p.coords());
                }
            }
        }
        let sampler = self.sampler_for(&unique)?;
        let draw = sampler.draw(rng);
        Ok(index.into_iter().map(|i| draw[i]).collect())
    }

    /// A reusable sampler for the joint posterior at `query` (objective units).
    pub fn joint_sampler(&self, query: &[Point]) -> Result<MvnSampler> {
        self.check_query(query)?;
        let refs: Vec<&[f64]> = query.iter().map(|p| p.coords()).collect();
        self.sampler_for(&refs)
    }

    fn sampler_for(&self, query: &[&[f64]]) -> Result<MvnSampler> {
        let (mean, cov) = self.posterior_normalized(query);
        let factor = psd_factor(&cov, 1.0, "posterior covariance")?;
        Ok(MvnSampler::new(
            mean.map(|m| m * self.scale + self.shift),
            factor * self.scale,
        ))
    }

    /// Posterior variance at each query point after additionally observing
    /// the `pending` locations (with the model's noise). Observed values do
    /// not enter, so none are needed.
    pub fn conditional_variance(&self, query: &[Point], pending: &[Point]) -> Result<Vec<f64>> {
        self.check_query(query)?;
        self.check_query(pending)?;
        let q: Vec<&[f64]> = query.iter().map(|p| p.coords()).collect();
        let a: Vec<&[f64]> = pending.iter().map(|p| p.coords()).collect();
        self.conditional_variance_raw(&q, &a)
    }

    pub(crate) fn conditional_variance_raw(&self, query: &[&[f64]], pending: &[&[f64]]) -> Result<Vec<f64>> {
        let s2 = self.scale * self.scale;
        let (m, p) = (query.len(), pending.len());
        let mut all: Vec<&[f64]> = Vec::with_capacity(m + p);
        all.extend_from_slice(pending);
        all.extend_from_slice(query);
        let v = self.whitened_cross(&all);
        let cov = |i: usize, j: usize| self.params.kernel(all[i], all[j]) - v.column(i).dot(&v.column(j));

        let mut base: Vec<f64> = (0..m).map(|i| cov(p + i, p + i)).collect();
        if p == 0 {
            return Ok(base.into_iter().map(|v| v.max(0.0) * s2).collect());
        }
        let mut pp = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let c = cov(i, j);
                pp[(i, j)] = c;
                pp[(j, i)] = c;
            }
            pp[(i, i)] += self.diag_noise;
        }
        let mut pq = DMatrix::zeros(p, m);
        for i in 0..p {
            for j in 0..m {
                pq[(i, j)] = cov(i, p + j);
            }
        }
        let (lp, _) = cholesky_with_jitter(&pp, 1.0, "pending covariance")?;
        lp.solve_lower_triangular_mut(&mut pq);
        for (j, b) in base.iter_mut().enumerate() {
            *b = (*b - pq.column(j).norm_squared()).max(0.0) * s2;
        }
        Ok(base)
    }

    /// Approximate maximizer of the posterior mean over the unit box.
    ///
    /// Local searches start from the best measured point and from the best
    /// points of a uniform screen. The search from the measured point is kept
    /// unless another finds a strictly larger mean, so a flat mean returns
    /// the best measured point.
    pub fn argmax_mean(&self, budget: ArgmaxBudget, rng: &mut RngStream) -> Point {
        let d = self.dim();
        let starts = budget.starts.max(1);
        let mut grad = vec![0.0; d];
        let mut screen: Vec<(f64, Point)> = (0..64 * starts)
            .map(|_| {
                let p = uniform_point(rng, d).expect("dimension checked at construction");
                (self.mean_with_gradient(p.coords(), &mut grad), p)
            })
            .collect();
        screen.sort_by(|a, b| b.0.total_cmp(&a.0));

        let mut seeds: Vec<Point> = Vec::with_capacity(starts);
        if let Some((p, _)) = self.data.best() {
            seeds.push(p.clone());
        }
        seeds.extend(screen.into_iter().map(|(_, p)| p).take(starts - seeds.len()));

        let lower = vec![0.0; d];
        let upper = vec![1.0; d];
        let opts = LbfgsOptions {
            max_iters: budget.steps,
            grad_tol: 1e-10,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let from_measured = !self.data.is_empty();
        let mut best: Option<(f64, Point)> = None;
        let mut measured: Option<(f64, Point)> = None;
        for (i, seed) in seeds.into_iter().enumerate() {
            let res = minimize_box(
                |x, g| {
                    let m = self.mean_with_gradient(x, g);
                    g.iter_mut().for_each(|v| *v = -*v);
                    -m
                },
                seed.coords(),
                &lower,
                &upper,
                &opts,
            );
            let cand = (-res.value, Point::clamped(res.x));
            if i == 0 && from_measured {
                measured = Some(cand);
                continue;
            }
            best = Some(match best {
                None => cand,
                Some(b) => pick_max(b, cand),
            });
        }
        prefer_first(measured, best).expect("at least one start").1
    }
}

/// `preferred` unless `other` is strictly larger.
pub(crate) fn prefer_first(preferred: Option<(f64, Point)>, other: Option<(f64, Point)>) -> Option<(f64, Point)> {
    match (preferred, other) {
        (Some(p), Some(o)) => Some(if o.0 > p.0 { o } else { p }),
        (p, o) => p.or(o),
    }
}

/// Larger value wins; ties go to the lexicographically smaller point.
pub(crate) fn pick_max(a: (f64, Point), b: (f64, Point)) -> (f64, Point) {
    match b.0.total_cmp(&a.0) {
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Equal => {
            if b.1.lex_cmp(&a.1).is_lt() {
                b
            } else {
                a
            }
        }
    }
}

fn solve_cholesky(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if l.nrows() == 0 {
        return DVector::zeros(0);
    }
    let w = l.solve_lower_triangular(b).expect("nonzero diagonal");
    l.tr_solve_lower_triangular(&w).expect("nonzero diagonal")
}
