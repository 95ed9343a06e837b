//! Bound-constrained local minimization.
//!
//! A projected limited-memory BFGS: the quasi-Newton direction is computed on
//! the variables that are not pinned at a bound, and the step is a projected
//! backtracking (Armijo) search along that direction. Every accepted step
//! strictly lowers the objective, so the result is never worse than the start.

use std::collections::VecDeque;

/// Options for [`minimize_box`].
#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease of one iteration falls below this.
    pub rel_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            memory: 8,
            grad_tol: 1e-8,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `objective` over the box `[lower, upper]` starting from `x0`.
///
/// `objective(x, grad)` returns the value at `x` and writes the gradient into
/// `grad`. A non-finite value is treated as `+inf` (the step is rejected).
pub fn minimize_box<F>(mut objective: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() {
        f = f64::INFINITY;
    }

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;

    while iterations < opts.max_iters && f.is_finite() {
        iterations += 1;

        // Variables held at a bound by the gradient are frozen this iteration.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg_norm = (0..n)
            .map(|i| {
                let stepped = (x[i] - g[i]).clamp(lower[i], upper[i]);
                (stepped - x[i]).abs()
            })
            .fold(0.0, f64::max);
        if pg_norm < opts.grad_tol {
            break;
        }

        let mut dir = two_loop(&g, &free, &pairs);
        let mut slope = dot(&dir, &g);
        if slope.is_nan() || slope >= 0.0 {
            pairs.clear();
            dir = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            slope = dot(&dir, &g);
        }
        if slope.is_nan() || slope >= 0.0 {
            break;
        }

        let mut step = if pairs.is_empty() {
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            (1.0 / norm).min(1.0)
        } else {
            1.0
        };

        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            project(&mut x_new, lower, upper);
            let predicted: f64 = x_new.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            f_new = objective(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= f + 1e-4 * predicted.min(0.0) && f_new < f {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if pairs.is_empty() {
                break;
            }
            // Retry from steepest descent on the next iteration.
            pairs.clear();
            continue;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(1e-300).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let decrease = f - f_new;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        f = f_new;
        if decrease <= opts.rel_tol * f.abs().max(1e-12) {
            break;
        }
    }

    Minimum {
        x,
        value: f,
        iterations,
        evaluations,
    }
}

/// L-BFGS two-loop recursion restricted to the free variables.
fn two_loop(g: &[f64], free: &[bool], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let n = g.len();
    let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
    let masked = |v: &[f64], w: &[f64]| -> f64 { (0..n).filter(|&i| free[i]).map(|i| v[i] * w[i]).sum() };
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * masked(s, &q);
        for i in 0..n {
            if free[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let yy = masked(y, y);
        let sy = masked(s, y);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * masked(y, &q);
        for i in 0..n {
            if free[i] {
                q[i] += s[i] * (a - b);
            }
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Central-difference gradient, falling back to one-sided differences at
/// the box faces. Returns `f(x)`.
pub fn numeric_gradient<F>(f: &mut F, x: &[f64], lower: &[f64], upper: &[f64], h: f64, grad: &mut [f64]) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let fx = f(x);
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let up = (x[i] + h).min(upper[i]);
        let down = (x[i] - h).max(lower[i]);
        probe[i] = up;
        let f_up = if up > x[i] { f(&probe) } else { fx };
        probe[i] = down;
        let f_down = if down < x[i] { f(&probe) } else { fx };
        probe[i] = x[i];
        let width = up - down;
        grad[i] = if width > 0.0 { (f_up - f_down) / width } else { 0.0 };
    }
    fx
}
