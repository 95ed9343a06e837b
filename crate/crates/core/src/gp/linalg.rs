//! Factorizations with jitter escalation.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::domain::RngStream;
use crate::error::{Error, Result};

/// Extra diagonal jitter tried, in order, when a factorization fails
/// (normalized units; multiplied by the caller's scale).
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

/// Cholesky factor of `a + j·scale·I` for the first rung `j` of the jitter
/// ladder that succeeds. Returns the lower factor and the jitter used.
pub fn cholesky_with_jitter(a: &DMatrix<f64>, scale: f64, context: &'static str) -> Result<(DMatrix<f64>, f64)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    for &j in &JITTER_LADDER {
        let mut m = a.clone();
        if j > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += j * scale;
            }
        }
        if let Some(ch) = m.cholesky() {
            return Ok((ch.unpack(), j * scale));
        }
    }
    Err(Error::Conditioning {
        context,
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * scale,
    })
}

/// Lower factor `L` with `L Lᵀ ≈ a` for a positive semi-definite `a`.
///
/// Pivots below `1e-10·max(diag)` are treated as exact zeros, so rank-deficient
/// covariances (duplicate or fully observed points) factor without jitter and
/// their null directions stay deterministic. A pivot below `−1e-8·max(diag)`
/// marks the matrix as indefinite and triggers the jitter ladder.
pub fn psd_factor(a: &DMatrix<f64>, scale: f64, context: &'static str) -> Result<DMatrix<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    for &j in &JITTER_LADDER {
        if let Some(l) = try_psd_factor(a, j * scale) {
            return Ok(l);
        }
    }
    Err(Error::Conditioning {
        context,
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * scale,
    })
}

fn try_psd_factor(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let m = a.nrows();
    let max_diag = (0..m).map(|i| a[(i, i)]).fold(0.0, f64::max) + jitter;
    let zero_tol = 1e-10 * max_diag;
    let neg_tol = 1e-8 * max_diag;
    // Packed row-major lower triangle: row i starts at i(i+1)/2, so the inner
    // products below run over contiguous memory.
    let start = |i: usize| i * (i + 1) / 2;
    let mut packed = vec![0.0; start(m)];
    for j in 0..m {
        let row_j = &packed[start(j)..start(j) + j];
        let pivot = a[(j, j)] + jitter - row_j.iter().map(|v| v * v).sum::<f64>();
        if pivot > zero_tol {
            let ljj = pivot.sqrt();
            packed[start(j) + j] = ljj;
            for i in j + 1..m {
                let (before, after) = packed.split_at_mut(start(i));
                let row_j = &before[start(j)..start(j) + j];
                let row_i = &mut after[..=j];
                let s: f64 = row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
                row_i[j] = (a[(i, j)] - s) / ljj;
            }
        } else if pivot < -neg_tol {
            return None;
        }
        // otherwise column j stays zero: a deterministic direction
    }
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            l[(i, j)] = packed[start(i) + j];
        }
    }
    Some(l)
}

/// Draws from `N(mean, L Lᵀ)` for a fixed factor.
#[derive(Clone, Debug)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, factor: DMatrix<f64>) -> Self {
        Self { mean, factor }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn draw(&self, rng: &mut RngStream) -> Vec<f64> {
        let m = self.mean.len();
        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        (0..m)
            .map(|i| {
                let mut v = self.mean[i];
                for (j, zj) in z.iter().enumerate().take(i + 1) {
                    let l = self.factor[(i, j)];
                    if l != 0.0 {
                        v += l * zj;
                    }
                }
                v
            })
            .collect()
    }
}
