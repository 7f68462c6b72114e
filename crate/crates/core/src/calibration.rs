//! Decision-threshold calibration and metric-vs-threshold sweeps.
//!
//! Thresholds are exclusive everywhere: an example is predicted positive
//! iff `score > threshold`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{MetricConfig, MetricSpec, UndefinedPolicy};
use crate::stats::{BaseCorrelations, IndicatorDataset, PredictionSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub target_rate: f64,
    pub achieved_rate: f64,
    pub n_validation: usize,
    pub tie_note: Option<String>,
}

/// Picks a threshold so that the `⌈N·p⌉` highest validation scores are
/// predicted positive. The threshold sits halfway between the last score
/// kept and the first score dropped; when both ends of the cut share a
/// score, the whole tie block is dropped and `tie_note` says by how much
/// the achieved rate misses the target. `p = 0` and `p = 1` place the
/// threshold half a unit beyond the largest or smallest score.
pub fn calibrate_threshold(scores: &[f64], target_rate: f64) -> Result<ThresholdChoice> {
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&target_rate) {
        return Err(Error::OutOfRange {
            context: "target rate".into(),
            value: target_rate,
        });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::OutOfRange {
            context: "validation score".into(),
            value: s,
        });
    }
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    // guard against N·p landing a hair above an integer
    let k = ((n as f64 * target_rate - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut tie_note = None;
    let threshold = if k == 0 {
        sorted[0] + 0.5
    } else if k == n {
        sorted[n - 1] - 0.5
    } else {
        let (kept, dropped) = (sorted[k - 1], sorted[k]);
        if kept > dropped {
            0.5 * (kept + dropped)
        } else {
            let first_tied = sorted.iter().position(|&s| s == kept).expect("present");
            let t = if first_tied == 0 {
                kept + 0.5
            } else {
                0.5 * (sorted[first_tied - 1] + kept)
            };
            let achieved = first_tied as f64 / n as f64;
            tie_note = Some(format!(
                "{} examples tied at score {kept} straddle the cut; the tie block is predicted \
                 negative, achieved rate {achieved} vs target {target_rate} (deviation {:+})",
                sorted.iter().filter(|&&s| s == kept).count(),
                achieved - target_rate
            ));
            t
        }
    };
    let achieved_rate = scores.iter().filter(|&&s| s > threshold).count() as f64 / n as f64;
    Ok(ThresholdChoice {
        threshold,
        target_rate,
        achieved_rate,
        n_validation: n,
        tie_note,
    })
}

/// Calibrates every column of a score matrix to its own target rate, e.g.
/// the training-set positive rate of each task.
pub fn calibrate_columns(scores: &Matrix, target_rates: &[f64]) -> Result<Vec<ThresholdChoice>> {
    if target_rates.len() != scores.cols() {
        return Err(Error::dims("target rates", scores.cols(), target_rates.len()));
    }
    (0..scores.cols())
        .map(|c| calibrate_threshold(&scores.column(c), target_rates[c]))
        .collect()
}

/// `1` where `score > threshold`, else `0`.
pub fn apply_threshold(scores: &Matrix, threshold: f64) -> Matrix {
    scores.map(|&s| if s > threshold { 1.0 } else { 0.0 })
}

/// Per-column thresholds.
pub fn apply_thresholds(scores: &Matrix, thresholds: &[f64]) -> Result<Matrix> {
    if thresholds.len() != scores.cols() {
        return Err(Error::dims("thresholds", scores.cols(), thresholds.len()));
    }
    Ok(Matrix::from_fn(scores.rows(), scores.cols(), |r, c| {
        if scores.at(r, c) > thresholds[c] {
            1.0
        } else {
            0.0
        }
    }))
}

/// Thresholds every score matrix in `scores` at a single cut.
pub fn threshold_predictions(scores: &PredictionSet, threshold: f64) -> Result<PredictionSet> {
    PredictionSet::new(
        scores
            .attr_pred()
            .map(|m| (scores.attribute_names().to_vec(), apply_threshold(m, threshold))),
        scores
            .task_pred()
            .map(|m| (scores.task_names().to_vec(), apply_threshold(m, threshold))),
        None,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub thresholds: Vec<f64>,
    pub values_per_metric: BTreeMap<String, Vec<f64>>,
    /// Trapezoid integral of each curve over the grid, skipping undefined points.
    pub integral_per_metric: Option<BTreeMap<String, f64>>,
    /// Grid indices whose value was undefined and left out of the integral.
    pub integration_gaps: BTreeMap<String, Vec<usize>>,
}

/// Evaluates each metric on the predictions obtained by thresholding
/// `scores` at every grid point.
pub fn threshold_sweep(
    truth: &IndicatorDataset,
    scores: &PredictionSet,
    base: &BaseCorrelations,
    grid: &[f64],
    metrics: &[MetricSpec],
    cfg: &MetricConfig,
    integrate: bool,
) -> Result<SweepCurve> {
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("threshold grid must be finite and strictly increasing"));
    }
    if metrics.is_empty() {
        return Err(Error::invalid("no metrics requested"));
    }
    let scores = scores.aligned_to(truth)?;

    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&thr| -> Result<Vec<f64>> {
            let preds = threshold_predictions(&scores, thr)?;
            metrics
                .iter()
                .map(|m| match m.evaluate(truth, &preds, base, cfg) {
                    Ok(v) => Ok(v),
                    Err(e) if !e.is_input_error() && cfg.undefined_policy != UndefinedPolicy::Error => {
                        Ok(f64::NAN)
                    }
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut values_per_metric = BTreeMap::new();
    let mut integration_gaps = BTreeMap::new();
    let mut integrals = BTreeMap::new();
    for (j, m) in metrics.iter().enumerate() {
        let curve: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let gaps: Vec<usize> = curve
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_finite())
            .map(|(i, _)| i)
            .collect();
        if integrate {
            integrals.insert(m.name(), trapezoid(grid, &curve));
        }
        if !gaps.is_empty() {
            integration_gaps.insert(m.name(), gaps);
        }
        values_per_metric.insert(m.name(), curve);
    }
    Ok(SweepCurve {
        thresholds: grid.to_vec(),
        values_per_metric,
        integral_per_metric: integrate.then_some(integrals),
        integration_gaps,
    })
}

/// Trapezoid rule over consecutive finite points.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .filter(|(_, yy)| yy[0].is_finite() && yy[1].is_finite())
        .map(|(xx, yy)| (xx[1] - xx[0]) * 0.5 * (yy[0] + yy[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_scores_half_rate() {
        let c = calibrate_threshold(&[0.9, 0.7, 0.4, 0.1], 0.5).unwrap();
        assert!((c.threshold - 0.55).abs() < 1e-12);
        assert_eq!(c.achieved_rate, 0.5);
        assert!(c.tie_note.is_none());
    }

    #[test]
    fn boundary_rates() {
        let s = [0.3, 1.0, 0.0, 0.6];
        let none = calibrate_threshold(&s, 0.0).unwrap();
        assert!(none.threshold > 1.0);
        assert_eq!(none.achieved_rate, 0.0);
        let all = calibrate_threshold(&s, 1.0).unwrap();
        assert!(all.threshold < 0.0);
        assert_eq!(all.achieved_rate, 1.0);
    }

    #[test]
    fn tie_block_is_excluded() {
        let c = calibrate_threshold(&[0.9, 0.5, 0.5, 0.5, 0.1], 0.4).unwrap();
        assert!((c.threshold - 0.7).abs() < 1e-12);
        assert_eq!(c.achieved_rate, 0.2);
        assert!(c.tie_note.is_some());
        let all_tied = calibrate_threshold(&[0.5, 0.5], 0.5).unwrap();
        assert_eq!(all_tied.achieved_rate, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(calibrate_threshold(&[], 0.5), Err(Error::EmptyDataset)));
        assert!(calibrate_threshold(&[0.1], 1.5).is_err());
        assert!(calibrate_threshold(&[f64::NAN], 0.5).is_err());
    }

    #[test]
    fn apply_threshold_examples() {
        let zeros = Matrix::filled(3, 2, 0.0);
        assert!(apply_threshold(&zeros, 0.5).iter().all(|&v| v == 0.0));
        assert!(apply_threshold(&zeros, -1.0).iter().all(|&v| v == 1.0));
        let m = Matrix::from_rows(vec![vec![0.6], vec![0.4]]).unwrap();
        assert_eq!(apply_threshold(&m, 0.55).column(0), vec![1.0, 0.0]);
    }

    #[test]
    fn per_column_calibration() {
        let m = Matrix::from_rows(vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.1, 0.3], vec![0.2, 0.4]]).unwrap();
        let choices = calibrate_columns(&m, &[0.5, 0.25]).unwrap();
        let th: Vec<f64> = choices.iter().map(|c| c.threshold).collect();
        let p = apply_thresholds(&m, &th).unwrap();
        assert_eq!(p.column(0), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.column(1), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(calibrate_columns(&m, &[0.5]).is_err());
    }

    #[test]
    fn trapezoid_skips_gaps() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(trapezoid(&x, &[1.0, 1.0, 1.0, 1.0]), 3.0);
        assert_eq!(trapezoid(&x, &[1.0, f64::NAN, 1.0, 1.0]), 1.0);
    }

    proptest! {
        #[test]
        fn achieved_rate_within_one_over_n(
            mut scores in proptest::collection::vec(0.0f64..1.0, 1..60),
            p in 0.0f64..=1.0,
        ) {
            scores.sort_by(f64::total_cmp);
            scores.dedup();
            let c = calibrate_threshold(&scores, p).unwrap();
            let n = scores.len() as f64;
            prop_assert!((c.achieved_rate - p).abs() <= 1.0 / n + 1e-12);
            let m = Matrix::from_fn(scores.len(), 1, |r, _| scores[r]);
            let applied = apply_threshold(&m, c.threshold);
            prop_assert_eq!(applied.iter().sum::<f64>() / n, c.achieved_rate);
        }

        #[test]
        fn raising_threshold_never_adds_positives(
            scores in proptest::collection::vec(0.0f64..1.0, 1..40),
            lo in 0.0f64..1.0,
            bump in 0.0f64..1.0,
        ) {
            let m = Matrix::from_fn(scores.len(), 1, |r, _| scores[r]);
            let a = apply_threshold(&m, lo);
            let b = apply_threshold(&m, lo + bump);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!(y <= x);
            }
        }
    }
}
