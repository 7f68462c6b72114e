//! Bias amplification metrics and classic group-fairness baselines.
//!
//! All amplification metrics return a [`BiasAmpResult`] carrying the
//! aggregate together with the per-(attribute, task) direction indicator,
//! gap, contribution and defined mask, so the aggregate can always be
//! recomputed from the disaggregated matrices.

mod biasamp;
mod classic;

use serde::{Deserialize, Serialize};

pub use biasamp::{biasamp_directional, biasamp_mals, delta_pair};
pub use classic::{
    accuracy_difference, fpr_difference, mean_subgroup_accuracy, tpr_difference, GroupPair,
    SubgroupGrouping,
};

pub(crate) use biasamp::{directional_weighted, mals_weighted};
pub(crate) use classic::{
    accuracy_difference_weighted, fpr_difference_weighted, mean_subgroup_accuracy_weighted,
    tpr_difference_weighted,
};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::{BaseCorrelations, IndicatorDataset, PredictionSet};

/// What to do with (attribute, task) pairs whose conditional probabilities
/// have a zero denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedPolicy {
    /// Leave the pair out and shrink the normalization accordingly.
    #[default]
    SkipAndRenormalize,
    /// Make the aggregate NaN.
    PropagateNan,
    /// Fail with [`Error::Undefined`].
    Error,
}

/// Second term of the directional gap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaBaseline {
    /// Ground-truth conditional measured on the test set.
    #[default]
    TestGroundTruth,
    /// Conditional taken from the base correlations.
    BaseCorrelations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub undefined_policy: UndefinedPolicy,
    /// Dead band for the direction indicator: a pair counts as positively
    /// correlated only when its statistic exceeds the threshold by more than
    /// this amount.
    pub tie_epsilon: f64,
    pub delta_baseline: DeltaBaseline,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            undefined_policy: UndefinedPolicy::SkipAndRenormalize,
            tie_epsilon: 0.0,
            delta_baseline: DeltaBaseline::TestGroundTruth,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tie_epsilon.is_finite() || self.tie_epsilon < 0.0 {
            return Err(Error::invalid(format!(
                "tie_epsilon must be a finite non-negative number, got {}",
                self.tie_epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Prediction-conditioned score, positive correlations only.
    Mals,
    /// Directional, attribute influencing task prediction.
    At,
    /// Directional, task influencing attribute prediction.
    Ta,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mals => "biasamp_mals",
            MetricKind::At => "biasamp_at",
            MetricKind::Ta => "biasamp_ta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mals" | "biasamp_mals" => Ok(MetricKind::Mals),
            "at" | "a_to_t" | "biasamp_at" => Ok(MetricKind::At),
            "ta" | "t_to_a" | "biasamp_ta" => Ok(MetricKind::Ta),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AToT,
    TToA,
}

impl Direction {
    pub fn kind(self) -> MetricKind {
        match self {
            Direction::AToT => MetricKind::At,
            Direction::TToA => MetricKind::Ta,
        }
    }
}

/// Aggregate amplification score with its per-pair breakdown. Matrices are
/// indexed `[attribute][task]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasAmpResult {
    pub metric_kind: MetricKind,
    pub aggregate: f64,
    pub attribute_names: Vec<String>,
    pub task_names: Vec<String>,
    /// Direction indicator `y_at`.
    pub y: Matrix<bool>,
    /// Gap `Δ_at`; NaN where undefined.
    pub delta: Matrix,
    /// Term actually summed; NaN where undefined.
    pub contribution: Matrix,
    pub defined_mask: Matrix<bool>,
    /// Divisor applied to the summed contributions.
    pub normalization: f64,
}

impl BiasAmpResult {
    /// Sum of defined contributions over the normalization.
    pub fn recomputed_aggregate(&self) -> f64 {
        let sum: f64 = self
            .contribution
            .iter()
            .zip(self.defined_mask.iter())
            .filter(|(_, &d)| d)
            .map(|(c, _)| *c)
            .sum();
        sum / self.normalization
    }

    pub fn all_defined(&self) -> bool {
        self.defined_mask.iter().all(|&d| d)
    }
}

/// Turns raw per-pair gaps into a [`BiasAmpResult`] following the
/// undefined-pair policy.
pub(crate) fn assemble(
    kind: MetricKind,
    names: (&[String], &[String]),
    y: Matrix<bool>,
    delta: Matrix,
    defined: Matrix<bool>,
    policy: UndefinedPolicy,
) -> Result<BiasAmpResult> {
    let (na, nt) = delta.shape();
    let contribution = Matrix::from_fn(na, nt, |a, t| {
        if !defined.get(a, t) {
            return f64::NAN;
        }
        let d = delta.at(a, t);
        let on = *y.get(a, t);
        match kind {
            MetricKind::Mals => {
                if on {
                    d
                } else {
                    0.0
                }
            }
            MetricKind::At | MetricKind::Ta => {
                if on {
                    d
                } else {
                    -d
                }
            }
        }
    });
    let delta = Matrix::from_fn(na, nt, |a, t| {
        if *defined.get(a, t) {
            delta.at(a, t)
        } else {
            f64::NAN
        }
    });

    let full_norm = match kind {
        MetricKind::Mals => nt as f64,
        _ => (na * nt) as f64,
    };
    let any_undefined = defined.iter().any(|d| !d);
    if any_undefined && policy == UndefinedPolicy::Error {
        let (a, t) = (0..na)
            .flat_map(|a| (0..nt).map(move |t| (a, t)))
            .find(|&(a, t)| !defined.get(a, t))
            .expect("an undefined pair exists");
        return Err(Error::Undefined(format!(
            "{} for attribute `{}`, task `{}`",
            kind.name(),
            names.0[a],
            names.1[t]
        )));
    }

    let sum: f64 = contribution
        .iter()
        .zip(defined.iter())
        .filter(|(_, &d)| d)
        .map(|(c, _)| *c)
        .sum();
    let (aggregate, normalization) = match policy {
        UndefinedPolicy::PropagateNan if any_undefined => (f64::NAN, full_norm),
        UndefinedPolicy::SkipAndRenormalize if any_undefined => {
            let norm = match kind {
                MetricKind::Mals => (0..nt)
                    .filter(|&t| (0..na).any(|a| *defined.get(a, t)))
                    .count(),
                _ => defined.iter().filter(|&&d| d).count(),
            } as f64;
            if norm == 0.0 {
                return Err(Error::NoDefinedPairs(kind.name().into()));
            }
            (sum / norm, norm)
        }
        _ => {
            if full_norm == 0.0 {
                return Err(Error::NoDefinedPairs(kind.name().into()));
            }
            (sum / full_norm, full_norm)
        }
    };

    Ok(BiasAmpResult {
        metric_kind: kind,
        aggregate,
        attribute_names: names.0.to_vec(),
        task_names: names.1.to_vec(),
        y,
        delta,
        contribution,
        defined_mask: defined,
        normalization,
    })
}

/// A scalar metric that can be evaluated on (truth, predictions, base).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricSpec {
    BiasAmp { kind: MetricKind },
    FprDifference(GroupPair),
    TprDifference(GroupPair),
    AccuracyDifference(GroupPair),
    MeanSubgroupAccuracy { task: usize, grouping: SubgroupGrouping },
}

impl MetricSpec {
    pub fn name(&self) -> String {
        match self {
            MetricSpec::BiasAmp { kind } => kind.name().to_string(),
            MetricSpec::FprDifference(_) => "fpr_difference".into(),
            MetricSpec::TprDifference(_) => "tpr_difference".into(),
            MetricSpec::AccuracyDifference(_) => "accuracy_difference".into(),
            MetricSpec::MeanSubgroupAccuracy { grouping, .. } => match grouping {
                SubgroupGrouping::Attribute => "mean_subgroup_accuracy".into(),
                SubgroupGrouping::AttributeTask => "mean_subgroup_accuracy_cells".into(),
            },
        }
    }

    /// Evaluates the metric to a scalar. Classic metrics use every attribute
    /// group for mean subgroup accuracy.
    pub fn evaluate(
        &self,
        truth: &IndicatorDataset,
        preds: &PredictionSet,
        base: &BaseCorrelations,
        cfg: &MetricConfig,
    ) -> Result<f64> {
        self.evaluate_weighted(truth, preds, base, cfg, None)
    }

    /// As [`MetricSpec::evaluate`] with extra per-example multiplicities
    /// applied on top of the dataset weights.
    pub(crate) fn evaluate_weighted(
        &self,
        truth: &IndicatorDataset,
        preds: &PredictionSet,
        base: &BaseCorrelations,
        cfg: &MetricConfig,
        extra: Option<&[f64]>,
    ) -> Result<f64> {
        let weights = combine_weights(truth.weights(), extra);
        let w = weights.as_deref();
        match *self {
            MetricSpec::BiasAmp { kind: MetricKind::Mals } => {
                Ok(mals_weighted(base, preds, cfg, w)?.aggregate)
            }
            MetricSpec::BiasAmp { kind: MetricKind::At } => {
                Ok(directional_weighted(Direction::AToT, base, truth, preds, cfg, w)?.aggregate)
            }
            MetricSpec::BiasAmp { kind: MetricKind::Ta } => {
                Ok(directional_weighted(Direction::TToA, base, truth, preds, cfg, w)?.aggregate)
            }
            MetricSpec::FprDifference(g) => fpr_difference_weighted(truth, preds, g, w),
            MetricSpec::TprDifference(g) => tpr_difference_weighted(truth, preds, g, w),
            MetricSpec::AccuracyDifference(g) => accuracy_difference_weighted(truth, preds, g, w),
            MetricSpec::MeanSubgroupAccuracy { task, grouping } => {
                let groups: Vec<usize> = (0..truth.attribute_names().len()).collect();
                mean_subgroup_accuracy_weighted(
                    truth,
                    preds,
                    task,
                    &groups,
                    grouping,
                    cfg.undefined_policy,
                    w,
                )
            }
        }
    }
}

pub(crate) fn combine_weights(base: Option<&[f64]>, extra: Option<&[f64]>) -> Option<Vec<f64>> {
    match (base, extra) {
        (None, None) => None,
        (Some(b), None) => Some(b.to_vec()),
        (None, Some(e)) => Some(e.to_vec()),
        (Some(b), Some(e)) => Some(b.iter().zip(e).map(|(x, y)| x * y).collect()),
    }
}

pub(crate) fn check_names(expected: &[String], found: &[String], what: &str) -> Result<()> {
    if expected != found {
        return Err(Error::invalid(format!(
            "{what} columns {found:?} do not match {expected:?}"
        )));
    }
    Ok(())
}
