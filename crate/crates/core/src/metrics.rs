//! Scoring of predicted labels against ground truth.
//!
//! Cluster ids are arbitrary, so accuracy is taken under the one-to-one
//! relabeling that maximizes agreement (an assignment problem on the count
//! matrix, zero-padded to square when the id ranges differ).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `mapping[p]` is the true id assigned to predicted id `p`.
    pub mapping: Vec<usize>,
    /// `confusion[true][mapped pred]` counts, square of size `max(k, k')`.
    pub confusion: Vec<Vec<usize>>,
    /// Recall of each true class (NaN-free: empty classes report 0).
    pub recall: Vec<f64>,
}

fn id_range(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

/// Maximum-weight perfect matching on a square matrix of nonnegative weights.
///
/// Returns `assign[row] = col`. Shortest augmenting path with potentials,
/// O(n³); ties resolve deterministically.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let top = weights.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    // minimize cost = top - weight; 1-based arrays with a sentinel column 0
    let cost = |i: usize, j: usize| top - weights[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape("labels", truth.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::invalid("labels", "cannot score an empty labeling"));
    }
    Ok(())
}

/// `counts[true][mapping[pred]]` for an explicit mapping.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], mapping: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_lengths(pred, truth)?;
    if let Some(&bad) = pred.iter().find(|&&p| p >= mapping.len()) {
        return Err(Error::invalid("mapping", format!("predicted id {bad} has no mapping")));
    }
    let size = id_range(truth).max(mapping.iter().max().map_or(0, |&m| m + 1));
    let mut counts = vec![vec![0usize; size]; size];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[t][mapping[p]] += 1;
    }
    Ok(counts)
}

/// Accuracy under the best one-to-one relabeling of predicted ids.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    check_lengths(pred, truth)?;
    let size = id_range(pred).max(id_range(truth));
    let mut overlap = vec![vec![0.0; size]; size];
    for (&p, &t) in pred.iter().zip(truth) {
        overlap[p][t] += 1.0;
    }
    let mapping = max_weight_assignment(&overlap);
    score_with_mapping(pred, truth, mapping)
}

/// Score with a fixed predicted-to-true mapping (e.g. one learned on training data).
pub fn score_with_mapping(pred: &[usize], truth: &[usize], mapping: Vec<usize>) -> Result<EvalReport> {
    let confusion = confusion_matrix(pred, truth, &mapping)?;
    let correct: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let recall = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                0.0
            } else {
                row[i] as f64 / total as f64
            }
        })
        .collect();
    Ok(EvalReport {
        accuracy: correct as f64 / pred.len() as f64,
        mapping,
        confusion,
        recall,
    })
}
