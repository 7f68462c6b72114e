//! Error-rate fairness baselines over two (or more) disjoint attribute groups.
//!
//! These need discrete task predictions and binary ground truth; group
//! membership is read from the ground-truth attribute columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{IndicatorDataset, PredictionSet};

use super::UndefinedPolicy;

/// Task column and the two attribute groups compared. Differences are
/// reported as `metric(group_b) − metric(group_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPair {
    pub task: usize,
    pub group_a: usize,
    pub group_b: usize,
}

impl GroupPair {
    pub fn new(task: usize, group_a: usize, group_b: usize) -> Self {
        Self { task, group_a, group_b }
    }
}

/// How subgroups are formed for [`mean_subgroup_accuracy`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupGrouping {
    /// One subgroup per attribute group; the mean of per-group accuracies.
    #[default]
    Attribute,
    /// One subgroup per (attribute group, ground-truth task value) cell.
    AttributeTask,
}

struct Confusion {
    tp: f64,
    fp: f64,
    tn: f64,
    fn_: f64,
}

impl Confusion {
    fn positives(&self) -> f64 {
        self.tp + self.fn_
    }

    fn negatives(&self) -> f64 {
        self.fp + self.tn
    }

    fn total(&self) -> f64 {
        self.positives() + self.negatives()
    }
}

fn validate(truth: &IndicatorDataset, preds: &PredictionSet, task: usize, groups: &[usize]) -> Result<()> {
    let task_pred = preds
        .task_pred()
        .ok_or_else(|| Error::Missing("classic metrics need task predictions".into()))?;
    if preds.n_examples() != truth.n_examples() {
        return Err(Error::dims("prediction rows", truth.n_examples(), preds.n_examples()));
    }
    if preds.task_names() != truth.task_names() {
        return Err(Error::invalid("predicted task columns do not match ground truth"));
    }
    if task >= truth.task_names().len() {
        return Err(Error::invalid(format!("task index {task} out of range")));
    }
    let na = truth.attribute_names().len();
    for (i, &g) in groups.iter().enumerate() {
        if g >= na {
            return Err(Error::invalid(format!("attribute index {g} out of range")));
        }
        if groups[..i].contains(&g) {
            return Err(Error::invalid(format!(
                "group `{}` listed twice",
                truth.attribute_names()[g]
            )));
        }
    }
    for i in 0..truth.n_examples() {
        let tv = truth.tasks().at(i, task);
        let pv = task_pred.at(i, task);
        if !(tv == 0.0 || tv == 1.0) || !(pv == 0.0 || pv == 1.0) {
            return Err(Error::invalid(
                "classic metrics need binary ground truth and discrete task predictions",
            ));
        }
        let mut members = 0;
        for &g in groups {
            let v = truth.attrs().at(i, g);
            if !(v == 0.0 || v == 1.0) {
                return Err(Error::invalid("classic metrics need binary attribute ground truth"));
            }
            if v == 1.0 {
                members += 1;
            }
        }
        if members > 1 {
            return Err(Error::invalid(format!(
                "example {i} belongs to more than one compared group; groups must be disjoint"
            )));
        }
    }
    Ok(())
}

fn confusion(truth: &IndicatorDataset, preds: &PredictionSet, task: usize, group: usize, w: Option<&[f64]>) -> Confusion {
    let task_pred = preds.task_pred().expect("validated");
    let mut c = Confusion { tp: 0.0, fp: 0.0, tn: 0.0, fn_: 0.0 };
    for i in 0..truth.n_examples() {
        if truth.attrs().at(i, group) != 1.0 {
            continue;
        }
        let wi = w.map_or(1.0, |w| w[i]);
        match (truth.tasks().at(i, task) == 1.0, task_pred.at(i, task) == 1.0) {
            (true, true) => c.tp += wi,
            (true, false) => c.fn_ += wi,
            (false, true) => c.fp += wi,
            (false, false) => c.tn += wi,
        }
    }
    c
}

fn group_rate(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    g: GroupPair,
    w: Option<&[f64]>,
    rate: impl Fn(&Confusion) -> Option<f64>,
    what: &str,
) -> Result<f64> {
    validate(truth, preds, g.task, &[g.group_a, g.group_b])?;
    let mut values = [0.0; 2];
    for (slot, group) in values.iter_mut().zip([g.group_a, g.group_b]) {
        let c = confusion(truth, preds, g.task, group, w);
        let name = &truth.attribute_names()[group];
        if c.total() == 0.0 {
            return Err(Error::Undefined(format!("group `{name}` is empty")));
        }
        *slot = rate(&c).ok_or_else(|| Error::Undefined(format!("group `{name}` has no {what}")))?;
    }
    Ok(values[1] - values[0])
}

/// `FPR(group_b) − FPR(group_a)` with `FPR = P(T̂=1 | T=0, group)`.
pub fn fpr_difference(truth: &IndicatorDataset, preds: &PredictionSet, g: GroupPair) -> Result<f64> {
    fpr_difference_weighted(truth, preds, g, truth.weights())
}

pub(crate) fn fpr_difference_weighted(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    g: GroupPair,
    w: Option<&[f64]>,
) -> Result<f64> {
    group_rate(truth, preds, g, w, |c| (c.negatives() > 0.0).then(|| c.fp / c.negatives()), "negatives")
}

/// `TPR(group_b) − TPR(group_a)` with `TPR = P(T̂=1 | T=1, group)`.
pub fn tpr_difference(truth: &IndicatorDataset, preds: &PredictionSet, g: GroupPair) -> Result<f64> {
    tpr_difference_weighted(truth, preds, g, truth.weights())
}

pub(crate) fn tpr_difference_weighted(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    g: GroupPair,
    w: Option<&[f64]>,
) -> Result<f64> {
    group_rate(truth, preds, g, w, |c| (c.positives() > 0.0).then(|| c.tp / c.positives()), "positives")
}

/// Task accuracy on `group_b` minus task accuracy on `group_a`.
pub fn accuracy_difference(truth: &IndicatorDataset, preds: &PredictionSet, g: GroupPair) -> Result<f64> {
    accuracy_difference_weighted(truth, preds, g, truth.weights())
}

pub(crate) fn accuracy_difference_weighted(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    g: GroupPair,
    w: Option<&[f64]>,
) -> Result<f64> {
    group_rate(truth, preds, g, w, |c| Some((c.tp + c.tn) / c.total()), "examples")
}

/// Unweighted mean of task accuracy over subgroups formed from `groups`
/// (and, for [`SubgroupGrouping::AttributeTask`], the ground-truth task value).
pub fn mean_subgroup_accuracy(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    task: usize,
    groups: &[usize],
    grouping: SubgroupGrouping,
    policy: UndefinedPolicy,
) -> Result<f64> {
    mean_subgroup_accuracy_weighted(truth, preds, task, groups, grouping, policy, truth.weights())
}

pub(crate) fn mean_subgroup_accuracy_weighted(
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    task: usize,
    groups: &[usize],
    grouping: SubgroupGrouping,
    policy: UndefinedPolicy,
    w: Option<&[f64]>,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::invalid("mean subgroup accuracy needs at least one group"));
    }
    validate(truth, preds, task, groups)?;
    let mut accuracies = Vec::new();
    let mut undefined = Vec::new();
    for &g in groups {
        let c = confusion(truth, preds, task, g, w);
        let name = &truth.attribute_names()[g];
        let cells: Vec<(String, f64, f64)> = match grouping {
            SubgroupGrouping::Attribute => vec![(name.clone(), c.tp + c.tn, c.total())],
            SubgroupGrouping::AttributeTask => vec![
                (format!("({name}, T=1)"), c.tp, c.positives()),
                (format!("({name}, T=0)"), c.tn, c.negatives()),
            ],
        };
        for (label, correct, total) in cells {
            if total > 0.0 {
                accuracies.push(correct / total);
            } else {
                undefined.push(label);
            }
        }
    }
    if !undefined.is_empty() {
        match policy {
            UndefinedPolicy::Error => {
                return Err(Error::Undefined(format!("empty subgroup {}", undefined.join(", "))))
            }
            UndefinedPolicy::PropagateNan => return Ok(f64::NAN),
            UndefinedPolicy::SkipAndRenormalize => {}
        }
    }
    if accuracies.is_empty() {
        return Err(Error::NoDefinedPairs("mean_subgroup_accuracy".into()));
    }
    Ok(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
}
