//! Woman/man × painting example: how each metric responds as the share of
//! women predicted to be painting moves across the ground-truth rate 0.75.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    accuracy_difference, fpr_difference, mean_subgroup_accuracy, tpr_difference, GroupPair, MetricConfig,
    MetricKind, SubgroupGrouping,
};

use super::{build, cell, ScenarioBundle};

/// Number of women in the dataset; the sweep variable moves in steps of
/// `1 / SWEEP_WOMEN`.
pub const SWEEP_WOMEN: usize = 40;
const WOMEN_PAINTING: usize = 30;

const WOMAN: usize = 0;
const MAN: usize = 1;

/// 80 examples (woman/painting 30, woman/not 10, man/painting 10, man/not
/// 30). The model is perfect on men and on attributes; `x·40` women are
/// predicted painting, true painters first, so false positives only
/// appear once all 30 painters are covered.
pub fn rate_sweep_bundle(x: f64) -> Result<ScenarioBundle> {
    let scaled = x * SWEEP_WOMEN as f64;
    let k = scaled.round();
    if !(0.0..=1.0).contains(&x) || (scaled - k).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "x = {x} is not a multiple of 1/{SWEEP_WOMEN} in [0, 1]"
        )));
    }
    let k = k as usize;
    let tp = k.min(WOMEN_PAINTING);
    let fp = k.saturating_sub(WOMEN_PAINTING);
    let mut bundle = build(
        &format!("rate-sweep-x{k}of{SWEEP_WOMEN}"),
        "woman/man × painting (30/10/10/30); perfect on men, women predicted painting at rate x",
        &["woman", "man"],
        "painting",
        &[
            cell(tp, WOMAN, 2, 1.0, 1.0),
            cell(WOMEN_PAINTING - tp, WOMAN, 2, 1.0, 0.0),
            cell(fp, WOMAN, 2, 0.0, 1.0),
            cell(10 - fp, WOMAN, 2, 0.0, 0.0),
            cell(10, MAN, 2, 1.0, 1.0),
            cell(30, MAN, 2, 0.0, 0.0),
        ],
    );
    if k == WOMEN_PAINTING {
        bundle.name = "rate-sweep-calibrated".into();
        bundle = bundle
            .expect_aggregate(MetricKind::At, 0.0, 1e-12, "predictions equal ground truth")
            .expect_aggregate(MetricKind::Mals, 0.0, 1e-12, "predictions equal ground truth");
    }
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSweepTable {
    pub x: Vec<f64>,
    pub values_per_metric: BTreeMap<String, Vec<f64>>,
}

/// Evaluates FPR/TPR/accuracy differences (woman minus man), mean subgroup
/// accuracy (per attribute group and per attribute×task cell), the
/// prediction-conditioned score and A→T at every `x`.
pub fn rate_sweep(x_grid: &[f64]) -> Result<RateSweepTable> {
    let cfg = MetricConfig::default();
    let pair = GroupPair::new(0, MAN, WOMAN);
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &x in x_grid {
        let b = rate_sweep_bundle(x)?;
        let (truth, preds) = (&b.test_truth, &b.test_preds);
        let row = [
            ("fpr_difference", fpr_difference(truth, preds, pair)?),
            ("tpr_difference", tpr_difference(truth, preds, pair)?),
            ("accuracy_difference", accuracy_difference(truth, preds, pair)?),
            (
                "mean_subgroup_accuracy",
                mean_subgroup_accuracy(truth, preds, 0, &[WOMAN, MAN], SubgroupGrouping::Attribute, cfg.undefined_policy)?,
            ),
            (
                "mean_subgroup_accuracy_cells",
                mean_subgroup_accuracy(
                    truth,
                    preds,
                    0,
                    &[WOMAN, MAN],
                    SubgroupGrouping::AttributeTask,
                    cfg.undefined_policy,
                )?,
            ),
            ("biasamp_mals", b.evaluate(MetricKind::Mals, &cfg)?.aggregate),
            ("biasamp_at", b.evaluate(MetricKind::At, &cfg)?.aggregate),
        ];
        for (name, v) in row {
            values.entry(name.to_string()).or_default().push(v);
        }
    }
    Ok(RateSweepTable {
        x: x_grid.to_vec(),
        values_per_metric: values,
    })
}

/// `{0, 1/40, …, 1}`.
pub fn rate_sweep_grid() -> Vec<f64> {
    (0..=SWEEP_WOMEN).map(|k| k as f64 / SWEEP_WOMEN as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_point_is_optimal() {
        let t = rate_sweep(&[0.75]).unwrap();
        let v = |m: &str| t.values_per_metric[m][0];
        assert_eq!(v("biasamp_at"), 0.0);
        assert_eq!(v("fpr_difference"), 0.0);
        assert_eq!(v("tpr_difference"), 0.0);
        assert_eq!(v("accuracy_difference"), 0.0);
        assert_eq!(v("mean_subgroup_accuracy"), 1.0);
        assert_eq!(v("mean_subgroup_accuracy_cells"), 1.0);
    }

    #[test]
    fn full_overprediction_fpr() {
        let b = rate_sweep_bundle(1.0).unwrap();
        let d = fpr_difference(&b.test_truth, &b.test_preds, GroupPair::new(0, MAN, WOMAN)).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn at_equals_half_of_x_minus_truth() {
        // Δ(woman, painting) = x − 0.75, men contribute 0, |A||T| = 2.
        let grid = rate_sweep_grid();
        let t = rate_sweep(&grid).unwrap();
        for (x, v) in grid.iter().zip(&t.values_per_metric["biasamp_at"]) {
            assert!((v - (x - 0.75) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_x_rejected() {
        assert!(rate_sweep_bundle(0.3333).is_err());
        assert!(rate_sweep_bundle(1.5).is_err());
    }
}
