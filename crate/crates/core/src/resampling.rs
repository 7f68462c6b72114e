//! Confidence intervals: percentile bootstrap over test examples and
//! normal-approximation intervals across independent runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::{MetricConfig, MetricSpec};
use crate::stats::{BaseCorrelations, IndicatorDataset, PredictionSet};

pub const DEFAULT_N_BOOT: usize = 1000;

/// Share of undefined replicates above which a bootstrap estimate is refused.
pub const MAX_DROPPED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    BootstrapPercentile,
    MultirunNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub method: IntervalMethod,
    pub n_replicates_or_runs: usize,
    /// Bootstrap replicates left out because the metric was undefined on them.
    pub n_dropped: usize,
    pub seed: Option<u64>,
    pub note: Option<String>,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn overlaps(&self, other: &IntervalEstimate) -> bool {
        self.lower.max(other.lower) <= self.upper.min(other.upper)
    }
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange {
            context: "confidence level".into(),
            value: confidence,
        });
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Multiplicity of each example in one resample of size `n`. Replicate `r`
/// draws from the ChaCha stream `r` of `seed`, so results do not depend on
/// scheduling.
pub fn resample_counts(n: usize, seed: u64, replicate: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    counts
}

/// Percentile bootstrap over test examples. Ground truth and prediction rows
/// are resampled together while the base correlations stay fixed.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ci(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    base: &BaseCorrelations,
    metric: &MetricSpec,
    cfg: &MetricConfig,
    n_boot: usize,
    confidence: f64,
    seed: u64,
) -> Result<IntervalEstimate> {
    if n_boot < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 replicates"));
    }
    check_confidence(confidence)?;
    if preds.n_examples() != truth.n_examples() {
        return Err(Error::dims("prediction rows", truth.n_examples(), preds.n_examples()));
    }
    let point = metric.evaluate(truth, preds, base, cfg)?;
    let n = truth.n_examples();

    let replicates: Vec<Option<f64>> = (0..n_boot)
        .into_par_iter()
        .map(|r| -> Result<Option<f64>> {
            let counts = resample_counts(n, seed, r);
            match metric.evaluate_weighted(truth, preds, base, cfg, Some(&counts)) {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                Ok(_) => Ok(None),
                Err(Error::ZeroWeights) => Ok(None),
                Err(e) if !e.is_input_error() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut values: Vec<f64> = replicates.iter().flatten().copied().collect();
    let dropped = n_boot - values.len();
    if dropped as f64 > MAX_DROPPED_FRACTION * n_boot as f64 || values.is_empty() {
        return Err(Error::DegradedEstimate {
            dropped,
            total: n_boot,
        });
    }
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok(IntervalEstimate {
        point,
        lower: quantile(&values, alpha),
        upper: quantile(&values, 1.0 - alpha),
        confidence,
        method: IntervalMethod::BootstrapPercentile,
        n_replicates_or_runs: n_boot,
        n_dropped: dropped,
        seed: Some(seed),
        note: (dropped > 0).then(|| format!("{dropped} undefined replicates dropped")),
    })
}

/// `mean ± z·s/√n` over values from independent runs, with `z` the normal
/// quantile for the confidence level and `s` the sample standard deviation.
pub fn multirun_ci(values: &[f64], confidence: f64) -> Result<IntervalEstimate> {
    if values.len() < 2 {
        return Err(Error::invalid("multi-run interval needs at least 2 values"));
    }
    check_confidence(confidence)?;
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::OutOfRange {
            context: "run value".into(),
            value: v,
        });
    }
    let n = values.len() as f64;
    // sort first so the result does not depend on input order
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let half = z * var.sqrt() / n.sqrt();
    Ok(IntervalEstimate {
        point: mean,
        lower: mean - half,
        upper: mean + half,
        confidence,
        method: IntervalMethod::MultirunNormal,
        n_replicates_or_runs: values.len(),
        n_dropped: 0,
        seed: None,
        note: (values.len() < 10).then(|| {
            format!(
                "normal approximation with only {} runs; the interval is likely too narrow",
                values.len()
            )
        }),
    })
}
