use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::{independence_gap, BaseCorrelations, IndicatorDataset, PredictionSet};

use super::{assemble, check_names, BiasAmpResult, DeltaBaseline, Direction, MetricConfig, MetricKind};

/// `Σ_i w_i·cond_i·target_i / Σ_i w_i·cond_i`, or `None` on an empty slice.
fn conditional_mean(cond: &Matrix, ci: usize, target: &Matrix, ti: usize, w: Option<&[f64]>) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..cond.rows() {
        let wc = w.map_or(1.0, |w| w[i]) * cond.at(i, ci);
        den += wc;
        num += wc * target.at(i, ti);
    }
    (den > 0.0).then(|| num / den)
}

fn check_weight_len(w: Option<&[f64]>, n: usize) -> Result<()> {
    match w {
        Some(w) if w.len() != n => Err(Error::dims("example weights", n, w.len())),
        _ => Ok(()),
    }
}

/// Prediction-conditioned amplification score. Only pairs whose base
/// `P(A_a=1 | T_t=1)` exceeds `1/|A|` contribute, each with
/// `P(Â_a=1 | T̂_t=1) − P(A_a=1 | T_t=1)`; the sum is divided by `|T|`.
///
/// No ground truth is read from the test set: the predicted conditional is
/// measured on the predictions alone.
pub fn biasamp_mals(base: &BaseCorrelations, preds: &PredictionSet, cfg: &MetricConfig) -> Result<BiasAmpResult> {
    mals_weighted(base, preds, cfg, None)
}

pub(crate) fn mals_weighted(
    base: &BaseCorrelations,
    preds: &PredictionSet,
    cfg: &MetricConfig,
    w: Option<&[f64]>,
) -> Result<BiasAmpResult> {
    cfg.validate()?;
    let attr_pred = preds
        .attr_pred()
        .ok_or_else(|| Error::Missing("biasamp_mals needs attribute predictions".into()))?;
    let task_pred = preds
        .task_pred()
        .ok_or_else(|| Error::Missing("biasamp_mals needs task predictions".into()))?;
    check_names(&base.attribute_names, preds.attribute_names(), "predicted attribute")?;
    check_names(&base.task_names, preds.task_names(), "predicted task")?;
    check_weight_len(w, preds.n_examples())?;

    let (na, nt) = (base.n_attributes(), base.n_tasks());
    let threshold = 1.0 / na as f64;
    let stats = &base.stats;
    let mut y = Matrix::filled(na, nt, false);
    let mut delta = Matrix::filled(na, nt, f64::NAN);
    let mut defined = Matrix::filled(na, nt, false);
    for t in 0..nt {
        for a in 0..na {
            let base_defined = *stats.defined_mask.attr_given_task.get(a, t);
            let base_cond = stats.p_attr_given_task.at(a, t);
            y.set(a, t, base_defined && base_cond > threshold + cfg.tie_epsilon);
            if let (true, Some(pred_cond)) = (base_defined, conditional_mean(task_pred, t, attr_pred, a, w)) {
                delta.set(a, t, pred_cond - base_cond);
                defined.set(a, t, true);
            }
        }
    }
    assemble(
        MetricKind::Mals,
        (&base.attribute_names, &base.task_names),
        y,
        delta,
        defined,
        cfg.undefined_policy,
    )
}

/// Directional amplification score.
///
/// The indicator `y_at` marks pairs whose base joint probability exceeds
/// the product of marginals (by more than `tie_epsilon`). For
/// [`Direction::AToT`] the gap is `P(T̂_t=1 | A_a=1) − P(T_t=1 | A_a=1)`,
/// conditioning on ground-truth attributes; for [`Direction::TToA`] it is
/// `P(Â_a=1 | T_t=1) − P(A_a=1 | T_t=1)`. Each pair contributes `Δ` when
/// `y_at = 1` and `−Δ` otherwise, and the sum is divided by `|A|·|T|`.
pub fn biasamp_directional(
    direction: Direction,
    base: &BaseCorrelations,
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    cfg: &MetricConfig,
) -> Result<BiasAmpResult> {
    directional_weighted(direction, base, truth, preds, cfg, truth.weights())
}

pub(crate) fn directional_weighted(
    direction: Direction,
    base: &BaseCorrelations,
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    cfg: &MetricConfig,
    w: Option<&[f64]>,
) -> Result<BiasAmpResult> {
    cfg.validate()?;
    check_names(&base.attribute_names, truth.attribute_names(), "ground-truth attribute")?;
    check_names(&base.task_names, truth.task_names(), "ground-truth task")?;
    if preds.n_examples() != truth.n_examples() {
        return Err(Error::dims("prediction rows", truth.n_examples(), preds.n_examples()));
    }
    check_weight_len(w, truth.n_examples())?;

    let (na, nt) = (base.n_attributes(), base.n_tasks());
    let gap = independence_gap(&base.stats);
    let y = Matrix::from_fn(na, nt, |a, t| gap.at(a, t) > cfg.tie_epsilon);
    let mut delta = Matrix::filled(na, nt, f64::NAN);
    let mut defined = Matrix::filled(na, nt, false);

    match direction {
        Direction::AToT => {
            let task_pred = preds
                .task_pred()
                .ok_or_else(|| Error::Missing("A→T needs task predictions".into()))?;
            check_names(&base.task_names, preds.task_names(), "predicted task")?;
            for a in 0..na {
                for t in 0..nt {
                    let predicted = conditional_mean(truth.attrs(), a, task_pred, t, w);
                    let reference = match cfg.delta_baseline {
                        DeltaBaseline::TestGroundTruth => conditional_mean(truth.attrs(), a, truth.tasks(), t, w),
                        DeltaBaseline::BaseCorrelations => base
                            .stats
                            .defined_mask
                            .task_given_attr
                            .get(a, t)
                            .then(|| base.stats.p_task_given_attr.at(a, t)),
                    };
                    if let (Some(p), Some(r)) = (predicted, reference) {
                        delta.set(a, t, p - r);
                        defined.set(a, t, true);
                    }
                }
            }
        }
        Direction::TToA => {
            let attr_pred = preds
                .attr_pred()
                .ok_or_else(|| Error::Missing("T→A needs attribute predictions".into()))?;
            check_names(&base.attribute_names, preds.attribute_names(), "predicted attribute")?;
            for a in 0..na {
                for t in 0..nt {
                    let predicted = conditional_mean(truth.tasks(), t, attr_pred, a, w);
                    let reference = match cfg.delta_baseline {
                        DeltaBaseline::TestGroundTruth => conditional_mean(truth.tasks(), t, truth.attrs(), a, w),
                        DeltaBaseline::BaseCorrelations => base
                            .stats
                            .defined_mask
                            .attr_given_task
                            .get(a, t)
                            .then(|| base.stats.p_attr_given_task.at(a, t)),
                    };
                    if let (Some(p), Some(r)) = (predicted, reference) {
                        delta.set(a, t, p - r);
                        defined.set(a, t, true);
                    }
                }
            }
        }
    }

    assemble(
        direction.kind(),
        (&base.attribute_names, &base.task_names),
        y,
        delta,
        defined,
        cfg.undefined_policy,
    )
}

/// The single `Δ_at` term of the prediction-conditioned score, regardless of
/// whether the pair's indicator is on.
pub fn delta_pair(base: &BaseCorrelations, preds: &PredictionSet, attr: usize, task: usize) -> Result<f64> {
    let attr_pred = preds
        .attr_pred()
        .ok_or_else(|| Error::Missing("attribute predictions".into()))?;
    let task_pred = preds
        .task_pred()
        .ok_or_else(|| Error::Missing("task predictions".into()))?;
    if attr >= base.n_attributes() || task >= base.n_tasks() {
        return Err(Error::invalid(format!("pair ({attr}, {task}) out of range")));
    }
    check_names(&base.attribute_names, preds.attribute_names(), "predicted attribute")?;
    check_names(&base.task_names, preds.task_names(), "predicted task")?;
    if !base.stats.defined_mask.attr_given_task.get(attr, task) {
        return Err(Error::Undefined(format!(
            "base P(A|T) for `{}`, `{}`",
            base.attribute_names[attr], base.task_names[task]
        )));
    }
    let predicted = conditional_mean(task_pred, task, attr_pred, attr, None).ok_or_else(|| {
        Error::Undefined(format!("no example predicted positive for `{}`", base.task_names[task]))
    })?;
    Ok(predicted - base.stats.p_attr_given_task.at(attr, task))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::UndefinedPolicy;
    use crate::stats::BaseSource;

    /// (count, attribute one-hot, task, predicted task)
    type Cell<'a> = (usize, &'a [f64], f64, f64);

    fn build(names: &[&str], cells: &[Cell]) -> (IndicatorDataset, PredictionSet) {
        let mut rows = Vec::new();
        let mut pred = Vec::new();
        for &(count, attrs, t, tp) in cells {
            for _ in 0..count {
                rows.push((attrs.to_vec(), vec![t]));
                pred.push(vec![tp]);
            }
        }
        let truth = IndicatorDataset::from_rows(names, &["t"], &rows).unwrap();
        let preds = PredictionSet::for_dataset(
            &truth,
            Some(truth.attrs().clone()),
            Some(Matrix::from_rows(pred).unwrap()),
        )
        .unwrap();
        (truth, preds)
    }

    fn base(d: &IndicatorDataset) -> BaseCorrelations {
        BaseCorrelations::from_dataset(d, BaseSource::EmpiricalTrain).unwrap()
    }

    #[test]
    fn two_group_delta_pairs() {
        let g1: &[f64] = &[1.0, 0.0];
        let g2: &[f64] = &[0.0, 1.0];
        let (truth, deflate) = build(&["a1", "a2"], &[(10, g1, 0.0, 0.0), (40, g1, 1.0, 1.0), (40, g2, 0.0, 0.0), (10, g2, 1.0, 0.0)]);
        let b = base(&truth);
        assert!((delta_pair(&b, &deflate, 0, 0).unwrap() - 0.2).abs() < 1e-12);
        let (_, inflate) = build(&["a1", "a2"], &[(10, g1, 0.0, 1.0), (40, g1, 1.0, 1.0), (40, g2, 0.0, 0.0), (10, g2, 1.0, 1.0)]);
        assert!((delta_pair(&b, &inflate, 0, 0).unwrap() - (50.0 / 60.0 - 40.0 / 50.0)).abs() < 1e-12);
        let perfect = PredictionSet::perfect(&truth);
        assert_eq!(delta_pair(&b, &perfect, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn shortcoming2_mals_is_negative() {
        let g1: &[f64] = &[1.0, 0.0];
        let g2: &[f64] = &[0.0, 1.0];
        let (truth, preds) = build(&["a1", "a2"], &[(60, g1, 0.0, 0.0), (30, g1, 1.0, 0.0), (10, g2, 0.0, 1.0), (20, g2, 1.0, 1.0)]);
        let r = biasamp_mals(&base(&truth), &preds, &MetricConfig::default()).unwrap();
        assert!((r.aggregate + 0.6).abs() < 1e-12);
        assert!(*r.y.get(0, 0));
        assert!(!r.y.get(1, 0));
    }

    #[test]
    fn perfect_predictor_is_zero_everywhere() {
        let g1: &[f64] = &[1.0, 0.0];
        let g2: &[f64] = &[0.0, 1.0];
        let (truth, _) = build(&["a1", "a2"], &[(3, g1, 0.0, 0.0), (5, g1, 1.0, 1.0), (4, g2, 0.0, 0.0), (1, g2, 1.0, 0.0)]);
        let p = PredictionSet::perfect(&truth);
        let b = base(&truth);
        let cfg = MetricConfig::default();
        assert_eq!(biasamp_mals(&b, &p, &cfg).unwrap().aggregate, 0.0);
        assert_eq!(biasamp_directional(Direction::AToT, &b, &truth, &p, &cfg).unwrap().aggregate, 0.0);
        assert_eq!(biasamp_directional(Direction::TToA, &b, &truth, &p, &cfg).unwrap().aggregate, 0.0);
    }

    #[test]
    fn missing_prediction_side_is_an_error() {
        let g1: &[f64] = &[1.0];
        let (truth, _) = build(&["a"], &[(2, g1, 1.0, 1.0)]);
        let only_tasks = PredictionSet::for_dataset(&truth, None, Some(truth.tasks().clone())).unwrap();
        let b = base(&truth);
        let cfg = MetricConfig::default();
        assert!(matches!(biasamp_mals(&b, &only_tasks, &cfg), Err(Error::Missing(_))));
        assert!(matches!(
            biasamp_directional(Direction::TToA, &b, &truth, &only_tasks, &cfg),
            Err(Error::Missing(_))
        ));
        assert!(biasamp_directional(Direction::AToT, &b, &truth, &only_tasks, &cfg).is_ok());
    }

    #[test]
    fn undefined_policies() {
        // Attribute a2 never occurs in the test set, so A→T is undefined for it.
        let g1: &[f64] = &[1.0, 0.0];
        let (truth, preds) = build(&["a1", "a2"], &[(2, g1, 1.0, 1.0), (2, g1, 0.0, 1.0)]);
        let train_rows = vec![(vec![1.0, 0.0], vec![1.0]), (vec![0.0, 1.0], vec![0.0])];
        let train = IndicatorDataset::from_rows(&["a1", "a2"], &["t"], &train_rows).unwrap();
        let b = base(&train);

        let skip = biasamp_directional(Direction::AToT, &b, &truth, &preds, &MetricConfig::default()).unwrap();
        assert_eq!(skip.normalization, 1.0);
        assert!(!skip.defined_mask.get(1, 0));
        assert!((skip.aggregate - 0.5).abs() < 1e-12);

        let nan_cfg = MetricConfig {
            undefined_policy: UndefinedPolicy::PropagateNan,
            ..Default::default()
        };
        let nan = biasamp_directional(Direction::AToT, &b, &truth, &preds, &nan_cfg).unwrap();
        assert!(nan.aggregate.is_nan());
        assert_eq!(nan.normalization, 2.0);

        let err_cfg = MetricConfig {
            undefined_policy: UndefinedPolicy::Error,
            ..Default::default()
        };
        assert!(matches!(
            biasamp_directional(Direction::AToT, &b, &truth, &preds, &err_cfg),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn tie_epsilon_dead_band() {
        // Base with P(A|T) = 0.5 + 1e-7 on two attributes: y is on only while
        // the tilt exceeds the dead band.
        let b = BaseCorrelations {
            attribute_names: vec!["he".into(), "she".into()],
            task_names: vec!["cook".into()],
            stats: crate::stats::CorrelationStats::from_probabilities(
                vec![0.5, 0.5],
                vec![0.2],
                Matrix::from_rows(vec![vec![0.2 * (0.5 + 1e-7)], vec![0.2 * (0.5 - 1e-7)]]).unwrap(),
            )
            .unwrap(),
            source: BaseSource::UserSupplied,
            description: None,
        };
        let rows = vec![(vec![1.0, 0.0], vec![1.0]), (vec![0.0, 1.0], vec![1.0])];
        let truth = IndicatorDataset::from_rows(&["he", "she"], &["cook"], &rows).unwrap();
        let p = PredictionSet::perfect(&truth);
        let r = biasamp_directional(Direction::AToT, &b, &truth, &p, &MetricConfig::default()).unwrap();
        assert!(*r.y.get(0, 0) && !r.y.get(1, 0));
        let banded = MetricConfig {
            tie_epsilon: 1e-6,
            ..Default::default()
        };
        let r = biasamp_directional(Direction::AToT, &b, &truth, &p, &banded).unwrap();
        assert!(!r.y.get(0, 0) && !r.y.get(1, 0));
        assert!(MetricConfig { tie_epsilon: -1.0, ..Default::default() }.validate().is_err());
    }
}
