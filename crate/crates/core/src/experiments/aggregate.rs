use serde::Serialize;

use crate::error::{Result, SimError};
use crate::training::TrainRecord;

/// Elementwise mean and population standard deviation over realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub count: usize,
}

/// Reduces `per_realization` in index order. Every entry must have the same length.
pub fn monte_carlo_aggregate(per_realization: &[Vec<f64>]) -> Result<Aggregate> {
    let first = per_realization
        .first()
        .ok_or_else(|| SimError::InvalidParameter("nothing to aggregate".into()))?;
    let len = first.len();
    if per_realization.iter().any(|r| r.len() != len) {
        return Err(SimError::Dimension("realizations have mismatched grids".into()));
    }
    let n = per_realization.len() as f64;
    let mut mean = vec![0.0; len];
    for r in per_realization {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; len];
    for r in per_realization {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    Ok(Aggregate {
        mean,
        std: var.into_iter().map(|s| (s / n).sqrt()).collect(),
        count: per_realization.len(),
    })
}

/// Loss trace extended to `len` episodes by holding the last value
/// (or the initial loss when no episode ran).
pub fn pad_trace(record: &TrainRecord, len: usize) -> Vec<f64> {
    let mut out = record.loss_mean.clone();
    let last = record.final_loss();
    out.resize(len.max(out.len()), last);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_have_zero_spread() {
        let a = monte_carlo_aggregate(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(a.mean, vec![1.0, 2.0]);
        assert_eq!(a.std, vec![0.0, 0.0]);
    }

    #[test]
    fn two_point_population_std() {
        let a = monte_carlo_aggregate(&[vec![0.1], vec![0.3]]).unwrap();
        assert!((a.mean[0] - 0.2).abs() < 1e-15);
        assert!((a.std[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_realization_and_errors() {
        let a = monte_carlo_aggregate(&[vec![5.0]]).unwrap();
        assert_eq!(a.std, vec![0.0]);
        assert!(monte_carlo_aggregate(&[]).is_err());
        assert!(monte_carlo_aggregate(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
