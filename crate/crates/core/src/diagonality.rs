//! How close a selected `K x K` channel is to diagonal.

use serde::Serialize;

use crate::error::{Result, SimError};
use crate::CMat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagonalityMetrics {
    pub avg_diag_power: f64,
    pub avg_offdiag_power: f64,
    /// Population variance of the normalized diagonal magnitudes.
    pub diag_variance: f64,
    pub diag_variance_db: f64,
    pub offdiag_suppression_db: f64,
}

/// Metrics of `d / ||d||_F`.
pub fn diagonality_metrics(d: &CMat) -> Result<DiagonalityMetrics> {
    let (k, cols) = d.shape();
    if k != cols {
        return Err(SimError::Dimension(format!("expected a square matrix, got {k}x{cols}")));
    }
    if k < 2 {
        return Err(SimError::UndefinedMetric(
            "off-diagonal statistics need at least two users".into(),
        ));
    }
    let fro = d.norm();
    if fro == 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let kf = k as f64;
    let mags: Vec<f64> = (0..k).map(|i| d[(i, i)].norm() / fro).collect();
    let avg_diag_power = mags.iter().map(|m| m * m).sum::<f64>() / kf;
    let mut off = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                off += d[(i, j)].norm_sqr();
            }
        }
    }
    let avg_offdiag_power = off / (fro * fro) / (kf * (kf - 1.0));
    let mean = mags.iter().sum::<f64>() / kf;
    let diag_variance = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / kf;
    Ok(DiagonalityMetrics {
        avg_diag_power,
        avg_offdiag_power,
        diag_variance,
        diag_variance_db: 10.0 * diag_variance.log10(),
        offdiag_suppression_db: 10.0 * (avg_diag_power / avg_offdiag_power).log10(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn real(rows: &[&[f64]]) -> CMat {
        CMat::from_fn(rows.len(), rows[0].len(), |i, j| Complex64::new(rows[i][j], 0.0))
    }

    #[test]
    fn identity() {
        let m = diagonality_metrics(&real(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((m.avg_diag_power - 0.5).abs() < 1e-15);
        assert_eq!(m.avg_offdiag_power, 0.0);
        assert!(m.diag_variance.abs() < 1e-30);
        assert_eq!(m.offdiag_suppression_db, f64::INFINITY);
    }

    #[test]
    fn all_ones_has_no_suppression() {
        let m = diagonality_metrics(&real(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!((m.avg_diag_power - m.avg_offdiag_power).abs() < 1e-15);
        assert!(m.offdiag_suppression_db.abs() < 1e-12);
    }

    #[test]
    fn unequal_diagonal_variance() {
        // |d| = {1, 3} / sqrt(10): mean 2/sqrt(10), variance 1/10
        let m = diagonality_metrics(&real(&[&[1.0, 0.0], &[0.0, 3.0]])).unwrap();
        assert!((m.diag_variance - 0.1).abs() < 1e-15);
        assert!((m.diag_variance_db + 10.0).abs() < 1e-12);
        assert!((m.avg_diag_power - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invariant_to_complex_scaling() {
        let d = real(&[&[1.0, 0.2, 0.1], &[0.3, 2.0, 0.0], &[0.05, 0.4, 1.5]]);
        let a = diagonality_metrics(&d).unwrap();
        let b = diagonality_metrics(&(d * Complex64::new(-3.0, 7.5))).unwrap();
        assert!((a.avg_diag_power - b.avg_diag_power).abs() < 1e-14);
        assert!((a.avg_offdiag_power - b.avg_offdiag_power).abs() < 1e-14);
        assert!((a.diag_variance_db - b.diag_variance_db).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_or_non_square() {
        assert!(diagonality_metrics(&real(&[&[1.0]])).is_err());
        assert!(diagonality_metrics(&real(&[&[1.0, 0.0]])).is_err());
        assert!(diagonality_metrics(&CMat::zeros(2, 2)).is_err());
    }
}
