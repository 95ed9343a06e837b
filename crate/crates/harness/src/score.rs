//! Rank-based scores.
//!
//! In every round the methods are ranked by best-so-far value (ascending,
//! ties share their mean rank) and the rank is scaled to `[0, 1]` by
//! `(rank − 1)/(M − 1)`. A method's score on one (function, repeat) cell is
//! its mean scaled rank over rounds; its overall score is the mean over
//! cells, reported with the standard error of that mean.

use std::collections::HashMap;

use crate::error::{HarnessError, Result};
use crate::runner::RunTrace;

/// Scaled ranks of one round's values.
pub fn scaled_ranks(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    if m < 2 {
        return vec![0.5; m];
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share the mean of the 1-based ranks i+1..=j+1.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = (mean_rank - 1.0) / (m - 1) as f64;
        }
        i = j + 1;
    }
    ranks
}

/// Scores within one (function, repeat) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellScores {
    pub function: String,
    pub repeat: usize,
    /// `round_ranks[i][m]`: scaled rank of method `m` in round `i`.
    pub round_ranks: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub methods: Vec<String>,
    pub scores: Vec<f64>,
    pub se: Vec<f64>,
    pub cells: Vec<CellScores>,
}

impl ScoreTable {
    pub fn score_of(&self, method: &str) -> Option<f64> {
        self.methods.iter().position(|m| m == method).map(|i| self.scores[i])
    }

    pub fn se_of(&self, method: &str) -> Option<f64> {
        self.methods.iter().position(|m| m == method).map(|i| self.se[i])
    }
}

fn score_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Score(msg.into())
}

/// Mean and standard error (sample std over √n; 0 for a single value).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Scores traces that cover the same methods on every (function, repeat)
/// cell. Methods are listed in order of first appearance.
pub fn rank_scores(traces: &[RunTrace]) -> Result<ScoreTable> {
    let mut methods: Vec<String> = Vec::new();
    let mut cell_keys: Vec<(String, usize)> = Vec::new();
    let mut lookup: HashMap<(&str, &str, usize), &RunTrace> = HashMap::new();
    for t in traces {
        if let Some(e) = &t.error {
            return Err(score_err(format!(
                "{} on {} (repeat {}) failed: {e}",
                t.method, t.function, t.repeat
            )));
        }
        if !methods.contains(&t.method) {
            methods.push(t.method.clone());
        }
        let key = (t.function.clone(), t.repeat);
        if !cell_keys.contains(&key) {
            cell_keys.push(key);
        }
        if lookup.insert((&t.method, &t.function, t.repeat), t).is_some() {
            return Err(score_err(format!(
                "duplicate trace for {} on {} (repeat {})",
                t.method, t.function, t.repeat
            )));
        }
    }
    if methods.len() < 2 {
        return Err(score_err(format!(
            "scores need at least 2 methods, got {}",
            methods.len()
        )));
    }
    let rounds = traces[0].num_rounds();
    if rounds == 0 {
        return Err(score_err("traces have no rounds"));
    }
    let mut cells = Vec::with_capacity(cell_keys.len());
    for (function, repeat) in &cell_keys {
        let cell: Vec<&RunTrace> = methods
            .iter()
            .map(|m| {
                lookup
                    .get(&(m.as_str(), function.as_str(), *repeat))
                    .copied()
                    .ok_or_else(|| score_err(format!("{m} has no trace on {function} (repeat {repeat})")))
            })
            .collect::<Result<_>>()?;
        if let Some(t) = cell.iter().find(|t| t.num_rounds() != rounds) {
            return Err(score_err(format!(
                "mismatched round counts: {} on {} has {}, expected {rounds}",
                t.method,
                t.function,
                t.num_rounds()
            )));
        }
        let round_ranks: Vec<Vec<f64>> = (0..rounds)
            .map(|i| scaled_ranks(&cell.iter().map(|t| t.best_so_far[i]).collect::<Vec<_>>()))
            .collect();
        let scores = (0..methods.len())
            .map(|m| round_ranks.iter().map(|r| r[m]).sum::<f64>() / rounds as f64)
            .collect();
        cells.push(CellScores {
            function: function.clone(),
            repeat: *repeat,
            round_ranks,
            scores,
        });
    }
    let (scores, se) = (0..methods.len())
        .map(|m| mean_and_se(&cells.iter().map(|c| c.scores[m]).collect::<Vec<_>>()))
        .unzip();
    Ok(ScoreTable {
        methods,
        scores,
        se,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_values_rank_evenly() {
        assert_eq!(scaled_ranks(&[3.0, 1.0, 2.0]), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn ties_share_the_mean_rank() {
        assert_eq!(scaled_ranks(&[1.0, 1.0, 1.0]), vec![0.5; 3]);
        let r = scaled_ranks(&[0.0, 5.0, 5.0, 9.0]);
        assert_eq!(r, vec![0.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn se_of_known_values() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_se(&[0.7]), (0.7, 0.0));
    }
}
