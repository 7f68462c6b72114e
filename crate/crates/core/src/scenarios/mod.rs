//! Deterministic toy datasets and model behaviours with frozen expected
//! metric values, plus an independent counting oracle for differential
//! testing.
//!
//! In every bundle the training set equals the test ground truth, so the
//! base correlations are those of the test data.

mod rate_sweep;
mod oracle;

use std::collections::BTreeMap;

use serde::Serialize;

pub use rate_sweep::{rate_sweep_bundle, rate_sweep_grid, rate_sweep, RateSweepTable, SWEEP_WOMEN};
pub use oracle::{counting_oracle, differential_check, random_instance, DifferentialReport, OracleResult, RandomInstance};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{biasamp_directional, biasamp_mals, delta_pair, Direction, MetricConfig, MetricKind};
use crate::stats::{BaseCorrelations, BaseSource, IndicatorDataset, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExpectedMetric {
    Aggregate { kind: MetricKind },
    /// Single `Δ_at` of the prediction-conditioned score.
    MalsDelta { attribute: usize, task: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub metric: ExpectedMetric,
    pub value: f64,
    pub tolerance: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationOutcome {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub provenance: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBundle {
    pub name: String,
    pub description: String,
    pub train: IndicatorDataset,
    pub test_truth: IndicatorDataset,
    pub test_preds: PredictionSet,
    pub expected: BTreeMap<String, Expectation>,
}

impl ScenarioBundle {
    pub fn base(&self) -> BaseCorrelations {
        BaseCorrelations::from_dataset(&self.train, BaseSource::EmpiricalTrain)
            .expect("scenario training sets are valid")
    }

    pub fn evaluate(&self, kind: MetricKind, cfg: &MetricConfig) -> Result<crate::metrics::BiasAmpResult> {
        let base = self.base();
        match kind {
            MetricKind::Mals => biasamp_mals(&base, &self.test_preds, cfg),
            MetricKind::At => biasamp_directional(Direction::AToT, &base, &self.test_truth, &self.test_preds, cfg),
            MetricKind::Ta => biasamp_directional(Direction::TToA, &base, &self.test_truth, &self.test_preds, cfg),
        }
    }

    /// Evaluates every expectation with the default metric configuration.
    pub fn check(&self) -> Vec<ExpectationOutcome> {
        let cfg = MetricConfig::default();
        self.expected
            .iter()
            .map(|(name, e)| {
                let actual = match e.metric {
                    ExpectedMetric::Aggregate { kind } => self.evaluate(kind, &cfg).map(|r| r.aggregate),
                    ExpectedMetric::MalsDelta { attribute, task } => {
                        delta_pair(&self.base(), &self.test_preds, attribute, task)
                    }
                };
                let (actual, error) = match actual {
                    Ok(v) => (Some(v), None),
                    Err(err) => (None, Some(err.to_string())),
                };
                ExpectationOutcome {
                    name: name.clone(),
                    expected: e.value,
                    actual,
                    tolerance: e.tolerance,
                    passed: actual.is_some_and(|v| (v - e.value).abs() <= e.tolerance),
                    provenance: e.provenance.clone(),
                    error,
                }
            })
            .collect()
    }
}

/// A block of identical examples.
struct Cell {
    count: usize,
    attrs: Vec<f64>,
    task: f64,
    pred_attrs: Vec<f64>,
    pred_task: f64,
}

fn cell(count: usize, group: usize, n_groups: usize, task: f64, pred_task: f64) -> Cell {
    let one_hot: Vec<f64> = (0..n_groups).map(|g| (g == group) as u8 as f64).collect();
    Cell {
        count,
        attrs: one_hot.clone(),
        task,
        pred_attrs: one_hot,
        pred_task,
    }
}

fn build(name: &str, description: &str, attr_names: &[&str], task_name: &str, cells: &[Cell]) -> ScenarioBundle {
    let mut truth_rows = Vec::new();
    let mut pred_attr = Vec::new();
    let mut pred_task = Vec::new();
    for c in cells {
        for _ in 0..c.count {
            truth_rows.push((c.attrs.clone(), vec![c.task]));
            pred_attr.push(c.pred_attrs.clone());
            pred_task.push(vec![c.pred_task]);
        }
    }
    let truth = IndicatorDataset::from_rows(attr_names, &[task_name], &truth_rows).expect("valid fixture");
    let preds = PredictionSet::for_dataset(
        &truth,
        Some(Matrix::from_rows(pred_attr).expect("rectangular")),
        Some(Matrix::from_rows(pred_task).expect("rectangular")),
    )
    .expect("valid fixture");
    ScenarioBundle {
        name: name.into(),
        description: description.into(),
        train: truth.clone(),
        test_truth: truth,
        test_preds: preds,
        expected: BTreeMap::new(),
    }
}

impl ScenarioBundle {
    fn expect(mut self, name: &str, metric: ExpectedMetric, value: f64, tolerance: f64, provenance: &str) -> Self {
        self.expected.insert(
            name.into(),
            Expectation {
                metric,
                value,
                tolerance,
                provenance: provenance.into(),
            },
        );
        self
    }

    fn expect_aggregate(self, kind: MetricKind, value: f64, tolerance: f64, provenance: &str) -> Self {
        self.expect(kind.name(), ExpectedMetric::Aggregate { kind }, value, tolerance, provenance)
    }
}

/// Three disjoint groups, one task. A1 is 10/40 (T=0/T=1), A2 40/10, A3
/// 10/20. The model is perfect on A1, predicts T̂=0 on all of A2 and T̂=1 on
/// all of A3; attributes are predicted perfectly.
pub fn shortcoming1_three_group() -> ScenarioBundle {
    build(
        "shortcoming1-three-group",
        "three disjoint groups (10/40, 40/10, 10/20); model perfect on A1, T̂=0 on A2, T̂=1 on A3",
        &["A1", "A2", "A3"],
        "T",
        &[
            cell(10, 0, 3, 0.0, 0.0),
            cell(40, 0, 3, 1.0, 1.0),
            cell(40, 1, 3, 0.0, 0.0),
            cell(10, 1, 3, 1.0, 0.0),
            cell(10, 2, 3, 0.0, 1.0),
            cell(20, 2, 3, 1.0, 1.0),
        ],
    )
    .expect_aggregate(MetricKind::Mals, 0.0, 0.0, "reference: prediction-conditioned score misses this amplification")
    .expect_aggregate(MetricKind::At, 0.1778, 1e-4, "reference A→T value for this scenario")
    .expect_aggregate(MetricKind::Ta, 0.0, 1e-9, "reference T→A value for this scenario")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoGroupVariant {
    /// Perfect on A1, predicts T̂=0 on all of A2.
    DeflateA2,
    /// Perfect on A2, predicts T̂=1 on all of A1.
    InflateA1,
    Perfect,
}

/// The A1/A2 half of the three-group dataset (100 examples).
pub fn shortcoming1_two_group(variant: TwoGroupVariant) -> ScenarioBundle {
    let (deflate, inflate) = match variant {
        TwoGroupVariant::DeflateA2 => (true, false),
        TwoGroupVariant::InflateA1 => (false, true),
        TwoGroupVariant::Perfect => (false, false),
    };
    let suffix = match variant {
        TwoGroupVariant::DeflateA2 => "deflate",
        TwoGroupVariant::InflateA1 => "inflate",
        TwoGroupVariant::Perfect => "perfect",
    };
    let bundle = build(
        &format!("shortcoming1-two-group-{suffix}"),
        "two disjoint groups (10/40, 40/10)",
        &["A1", "A2"],
        "T",
        &[
            cell(10, 0, 2, 0.0, if inflate { 1.0 } else { 0.0 }),
            cell(40, 0, 2, 1.0, 1.0),
            cell(40, 1, 2, 0.0, 0.0),
            cell(10, 1, 2, 1.0, if deflate { 0.0 } else { 1.0 }),
        ],
    );
    let (delta, at, prov) = match variant {
        TwoGroupVariant::DeflateA2 => (0.2, 0.1, "reference Δ_1 = 40/40 − 40/50"),
        TwoGroupVariant::InflateA1 => (50.0 / 60.0 - 40.0 / 50.0, 0.1, "reference Δ_1 = 50/60 − 40/50"),
        TwoGroupVariant::Perfect => (0.0, 0.0, "perfect model"),
    };
    bundle
        .expect(
            "mals_delta_A1",
            ExpectedMetric::MalsDelta { attribute: 0, task: 0 },
            delta,
            1e-9,
            prov,
        )
        .expect_aggregate(MetricKind::Mals, delta, 1e-9, "single positive pair, |T| = 1")
        .expect_aggregate(
            MetricKind::At,
            at,
            1e-9,
            "one pair with |Δ| = 0.2 and matching sign, divided by |A||T| = 2",
        )
        .expect_aggregate(MetricKind::Ta, 0.0, 1e-9, "attributes predicted perfectly")
}

/// Two disjoint groups with imbalanced sizes: A1 is 60/30, A2 10/20. The
/// model predicts T̂=0 on all of A1 and T̂=1 on all of A2.
pub fn shortcoming2_imbalanced() -> ScenarioBundle {
    build(
        "shortcoming2",
        "imbalanced groups (60/30, 10/20); model predicts T̂=0 on A1 and T̂=1 on A2",
        &["A1", "A2"],
        "T",
        &[
            cell(60, 0, 2, 0.0, 0.0),
            cell(30, 0, 2, 1.0, 0.0),
            cell(10, 1, 2, 0.0, 1.0),
            cell(20, 1, 2, 1.0, 1.0),
        ],
    )
    .expect_aggregate(MetricKind::Mals, -0.6, 1e-9, "reference: 0/30 − 30/50")
    .expect_aggregate(MetricKind::At, 0.3333, 1e-4, "reference A→T value for this scenario")
    .expect_aggregate(MetricKind::Ta, 0.0, 1e-9, "reference T→A value for this scenario")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskLevel {
    Original,
    NoisyMask,
    FullMask,
}

/// Synthetic stand-in for hiding the person in an image: as the attribute
/// cue is removed, attribute-conditioned task errors vanish while
/// task-conditioned attribute errors grow.
///
/// Data: woman/T=1 30, woman/T=0 20, man/T=1 20, man/T=0 30. Per level
/// (original, noisy, full), this many woman/T=0 examples get T̂=1: 10, 5, 0;
/// and this many man/T=1 examples are predicted as woman: 2, 6, 10.
pub fn masking_fixture(level: MaskLevel) -> ScenarioBundle {
    let (fp_women, flipped_men, suffix) = match level {
        MaskLevel::Original => (10, 2, "original"),
        MaskLevel::NoisyMask => (5, 6, "noisy"),
        MaskLevel::FullMask => (0, 10, "full"),
    };
    let woman = [1.0, 0.0];
    let man = [0.0, 1.0];
    let c = |count, attrs: [f64; 2], task, pred_attrs: [f64; 2], pred_task| Cell {
        count,
        attrs: attrs.to_vec(),
        task,
        pred_attrs: pred_attrs.to_vec(),
        pred_task,
    };
    let cells = [
        c(30, woman, 1.0, woman, 1.0),
        c(fp_women, woman, 0.0, woman, 1.0),
        c(20 - fp_women, woman, 0.0, woman, 0.0),
        c(flipped_men, man, 1.0, woman, 1.0),
        c(20 - flipped_men, man, 1.0, man, 1.0),
        c(30, man, 0.0, man, 0.0),
    ];
    let (at, ta, mals) = match level {
        MaskLevel::Original => (0.1, 0.04, 42.0 / 60.0 - 0.6),
        MaskLevel::NoisyMask => (0.05, 0.12, 41.0 / 55.0 - 0.6),
        MaskLevel::FullMask => (0.0, 0.2, 40.0 / 50.0 - 0.6),
    };
    build(
        &format!("masking-{suffix}"),
        "synthetic masking level: task errors driven by the attribute shrink, attribute errors driven by the task grow",
        &["woman", "man"],
        "object",
        &cells,
    )
    .expect_aggregate(MetricKind::At, at, 1e-9, "fixture-defined, hand counted")
    .expect_aggregate(MetricKind::Ta, ta, 1e-9, "fixture-defined, hand counted")
    .expect_aggregate(MetricKind::Mals, mals, 1e-9, "fixture-defined, hand counted")
}

pub const SCENARIO_NAMES: &[&str] = &[
    "shortcoming1-three-group",
    "shortcoming1-two-group-deflate",
    "shortcoming1-two-group-inflate",
    "shortcoming1-two-group-perfect",
    "shortcoming2",
    "masking-original",
    "masking-noisy",
    "masking-full",
    "rate-sweep-calibrated",
];

pub fn by_name(name: &str) -> Result<ScenarioBundle> {
    Ok(match name {
        "shortcoming1-three-group" => shortcoming1_three_group(),
        "shortcoming1-two-group-deflate" => shortcoming1_two_group(TwoGroupVariant::DeflateA2),
        "shortcoming1-two-group-inflate" => shortcoming1_two_group(TwoGroupVariant::InflateA1),
        "shortcoming1-two-group-perfect" => shortcoming1_two_group(TwoGroupVariant::Perfect),
        "shortcoming2" => shortcoming2_imbalanced(),
        "masking-original" => masking_fixture(MaskLevel::Original),
        "masking-noisy" => masking_fixture(MaskLevel::NoisyMask),
        "masking-full" => masking_fixture(MaskLevel::FullMask),
        "rate-sweep-calibrated" => rate_sweep_bundle(0.75)?,
        other => {
            return Err(Error::invalid(format!(
                "unknown scenario `{other}`; known: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    })
}

pub fn all() -> Vec<ScenarioBundle> {
    SCENARIO_NAMES.iter().map(|n| by_name(n).expect("registered")).collect()
}
