//! Dataset model and empirical probability estimation.
//!
//! Attributes and tasks are binary indicator columns. A row may carry zero,
//! one or several attributes at once, so nothing here assumes the attribute
//! columns partition the data. Entries may also be soft values in `[0, 1]`,
//! in which case every probability becomes a weighted mean of the scores.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Absolute tolerance for probability identities.
pub const EPS_NUM: f64 = 1e-9;

fn check_unit_interval(m: &Matrix, what: &str) -> Result<()> {
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m.at(r, c);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    context: format!("{what} row {r} column {c}"),
                    value: v,
                });
            }
        }
    }
    Ok(())
}

fn check_names(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.trim().is_empty() {
            return Err(Error::invalid(format!("empty {what} name")));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::invalid(format!("duplicate {what} name `{n}`")));
        }
    }
    Ok(())
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::dims("example weights", n, weights.len()));
    }
    if let Some((i, &w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < 0.0)
    {
        return Err(Error::OutOfRange {
            context: format!("weight of example {i}"),
            value: w,
        });
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(())
}

fn is_binary(m: &Matrix) -> bool {
    m.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Ground-truth attribute and task indicators over `N` examples.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorDataset {
    attribute_names: Vec<String>,
    task_names: Vec<String>,
    attrs: Matrix,
    tasks: Matrix,
    weights: Option<Vec<f64>>,
}

impl IndicatorDataset {
    pub fn new(
        attribute_names: Vec<String>,
        task_names: Vec<String>,
        attrs: Matrix,
        tasks: Matrix,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = attrs.rows();
        if n == 0 || tasks.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if tasks.rows() != n {
            return Err(Error::dims("task rows", n, tasks.rows()));
        }
        if attrs.cols() != attribute_names.len() {
            return Err(Error::dims("attribute columns", attribute_names.len(), attrs.cols()));
        }
        if tasks.cols() != task_names.len() {
            return Err(Error::dims("task columns", task_names.len(), tasks.cols()));
        }
        check_names(&attribute_names, "attribute")?;
        check_names(&task_names, "task")?;
        check_unit_interval(&attrs, "attribute matrix")?;
        check_unit_interval(&tasks, "task matrix")?;
        if let Some(w) = &weights {
            check_weights(w, n)?;
        }
        Ok(Self {
            attribute_names,
            task_names,
            attrs,
            tasks,
            weights,
        })
    }

    /// Convenience constructor from per-example `(attributes, tasks)` rows.
    pub fn from_rows(
        attribute_names: &[&str],
        task_names: &[&str],
        rows: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<Self> {
        let attrs = Matrix::from_rows(rows.iter().map(|r| r.0.clone()).collect())
            .ok_or_else(|| Error::invalid("ragged attribute rows"))?;
        let tasks = Matrix::from_rows(rows.iter().map(|r| r.1.clone()).collect())
            .ok_or_else(|| Error::invalid("ragged task rows"))?;
        Self::new(
            attribute_names.iter().map(|s| s.to_string()).collect(),
            task_names.iter().map(|s| s.to_string()).collect(),
            attrs,
            tasks,
            None,
        )
    }

    pub fn n_examples(&self) -> usize {
        self.attrs.rows()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn task_names(&self) -> &[String] {
        &self.task_names
    }

    pub fn attrs(&self) -> &Matrix {
        &self.attrs
    }

    pub fn tasks(&self) -> &Matrix {
        &self.tasks
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn with_weights(mut self, weights: Option<Vec<f64>>) -> Result<Self> {
        if let Some(w) = &weights {
            check_weights(w, self.n_examples())?;
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn attrs_binary(&self) -> bool {
        is_binary(&self.attrs)
    }

    pub fn is_binary(&self) -> bool {
        is_binary(&self.attrs) && is_binary(&self.tasks)
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attribute_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown attribute `{name}`")))
    }

    pub fn task_index(&self, name: &str) -> Result<usize> {
        self.task_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown task `{name}`")))
    }

    pub fn stats(&self) -> Result<CorrelationStats> {
        compute_stats(&self.attrs, &self.tasks, self.weights())
    }

    /// Rows picked by index (with repetition), weights carried along.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let weights = self
            .weights
            .as_ref()
            .map(|w| idx.iter().map(|&i| w[i]).collect());
        Self::new(
            self.attribute_names.clone(),
            self.task_names.clone(),
            self.attrs.select_rows(idx),
            self.tasks.select_rows(idx),
            weights,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Discrete,
    Soft,
}

/// Model outputs for attributes and/or tasks over `N` examples.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    n_examples: usize,
    attribute_names: Vec<String>,
    task_names: Vec<String>,
    attr_pred: Option<Matrix>,
    task_pred: Option<Matrix>,
    kind: PredictionKind,
}

impl PredictionSet {
    /// Builds a prediction set. `kind = None` infers discrete when every
    /// entry is 0 or 1.
    pub fn new(
        attr: Option<(Vec<String>, Matrix)>,
        task: Option<(Vec<String>, Matrix)>,
        kind: Option<PredictionKind>,
    ) -> Result<Self> {
        if attr.is_none() && task.is_none() {
            return Err(Error::Missing(
                "prediction set needs attribute or task predictions".into(),
            ));
        }
        let mut n = None;
        let mut binary = true;
        for (what, part) in [("attribute", &attr), ("task", &task)] {
            if let Some((names, m)) = part {
                if m.rows() == 0 {
                    return Err(Error::EmptyDataset);
                }
                if let Some(prev) = n {
                    if prev != m.rows() {
                        return Err(Error::dims("prediction rows", prev, m.rows()));
                    }
                }
                n = Some(m.rows());
                if names.len() != m.cols() {
                    return Err(Error::dims(format!("{what} prediction columns"), names.len(), m.cols()));
                }
                check_names(names, what)?;
                check_unit_interval(m, &format!("{what} predictions"))?;
                binary &= is_binary(m);
            }
        }
        let kind = match kind {
            Some(PredictionKind::Discrete) if !binary => {
                return Err(Error::invalid(
                    "discrete predictions must contain only 0 and 1",
                ))
            }
            Some(k) => k,
            None if binary => PredictionKind::Discrete,
            None => PredictionKind::Soft,
        };
        let (attribute_names, attr_pred) = match attr {
            Some((n, m)) => (n, Some(m)),
            None => (Vec::new(), None),
        };
        let (task_names, task_pred) = match task {
            Some((n, m)) => (n, Some(m)),
            None => (Vec::new(), None),
        };
        Ok(Self {
            n_examples: n.unwrap_or(0),
            attribute_names,
            task_names,
            attr_pred,
            task_pred,
            kind,
        })
    }

    /// Predictions with the same column names as `truth`.
    pub fn for_dataset(
        truth: &IndicatorDataset,
        attr_pred: Option<Matrix>,
        task_pred: Option<Matrix>,
    ) -> Result<Self> {
        Self::new(
            attr_pred.map(|m| (truth.attribute_names().to_vec(), m)),
            task_pred.map(|m| (truth.task_names().to_vec(), m)),
            None,
        )
    }

    /// Predictions identical to the ground truth.
    pub fn perfect(truth: &IndicatorDataset) -> Self {
        Self::for_dataset(truth, Some(truth.attrs().clone()), Some(truth.tasks().clone()))
            .expect("ground truth is a valid prediction set")
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    pub fn kind(&self) -> PredictionKind {
        self.kind
    }

    pub fn attr_pred(&self) -> Option<&Matrix> {
        self.attr_pred.as_ref()
    }

    pub fn task_pred(&self) -> Option<&Matrix> {
        self.task_pred.as_ref()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn task_names(&self) -> &[String] {
        &self.task_names
    }

    /// Reorders prediction columns to follow the dataset's column order.
    /// Column names must match the dataset's as sets.
    pub fn aligned_to(&self, truth: &IndicatorDataset) -> Result<Self> {
        if self.n_examples != truth.n_examples() {
            return Err(Error::dims(
                "prediction rows vs ground truth",
                truth.n_examples(),
                self.n_examples,
            ));
        }
        fn reorder(names: &[String], m: &Matrix, target: &[String], what: &str) -> Result<Matrix> {
            if names.len() != target.len() {
                return Err(Error::dims(format!("{what} prediction columns"), target.len(), names.len()));
            }
            let idx = target
                .iter()
                .map(|t| {
                    names.iter().position(|n| n == t).ok_or_else(|| {
                        Error::invalid(format!("no {what} prediction column for `{t}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Matrix::from_fn(m.rows(), target.len(), |r, c| m.at(r, idx[c])))
        }
        let attr = match &self.attr_pred {
            Some(m) => Some((
                truth.attribute_names().to_vec(),
                reorder(&self.attribute_names, m, truth.attribute_names(), "attribute")?,
            )),
            None => None,
        };
        let task = match &self.task_pred {
            Some(m) => Some((
                truth.task_names().to_vec(),
                reorder(&self.task_names, m, truth.task_names(), "task")?,
            )),
            None => None,
        };
        Self::new(attr, task, Some(self.kind))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.attr_pred
                .as_ref()
                .map(|m| (self.attribute_names.clone(), m.select_rows(idx))),
            self.task_pred
                .as_ref()
                .map(|m| (self.task_names.clone(), m.select_rows(idx))),
            Some(self.kind),
        )
    }
}

/// Weighted counts backing an empirical [`CorrelationStats`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCounts {
    pub total: f64,
    pub attr: Vec<f64>,
    pub task: Vec<f64>,
    pub joint: Matrix,
}

/// Which conditionals have a nonzero denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinedMask {
    /// `P(A_a=1 | T_t=1)` is defined (task marginal > 0).
    pub attr_given_task: Matrix<bool>,
    /// `P(T_t=1 | A_a=1)` is defined (attribute marginal > 0).
    pub task_given_attr: Matrix<bool>,
}

/// Marginal, joint and conditional probabilities, indexed `[attribute][task]`.
/// Undefined conditionals hold NaN and are `false` in the mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationStats {
    pub p_attr: Vec<f64>,
    pub p_task: Vec<f64>,
    pub p_joint: Matrix,
    pub p_attr_given_task: Matrix,
    pub p_task_given_attr: Matrix,
    pub support_counts: Option<SupportCounts>,
    pub defined_mask: DefinedMask,
}

impl CorrelationStats {
    /// Completes the conditionals from marginals and joints after checking
    /// they describe a consistent set of probabilities.
    pub fn from_probabilities(p_attr: Vec<f64>, p_task: Vec<f64>, p_joint: Matrix) -> Result<Self> {
        if p_joint.rows() != p_attr.len() {
            return Err(Error::dims("joint rows", p_attr.len(), p_joint.rows()));
        }
        if p_joint.cols() != p_task.len() {
            return Err(Error::dims("joint columns", p_task.len(), p_joint.cols()));
        }
        for (what, v) in p_attr
            .iter()
            .map(|v| ("P(A)", *v))
            .chain(p_task.iter().map(|v| ("P(T)", *v)))
            .chain(p_joint.iter().map(|v| ("P(A,T)", *v)))
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    context: what.to_string(),
                    value: v,
                });
            }
        }
        for a in 0..p_attr.len() {
            for t in 0..p_task.len() {
                let j = p_joint.at(a, t);
                let upper = p_attr[a].min(p_task[t]);
                let lower = (p_attr[a] + p_task[t] - 1.0).max(0.0);
                if j > upper + EPS_NUM || j < lower - EPS_NUM {
                    return Err(Error::invalid(format!(
                        "P(A,T)={j} for attribute {a}, task {t} is inconsistent with marginals \
                         P(A)={}, P(T)={}",
                        p_attr[a], p_task[t]
                    )));
                }
            }
        }
        let (na, nt) = (p_attr.len(), p_task.len());
        let attr_given_task_defined = Matrix::from_fn(na, nt, |_, t| p_task[t] > 0.0);
        let task_given_attr_defined = Matrix::from_fn(na, nt, |a, _| p_attr[a] > 0.0);
        let p_attr_given_task = Matrix::from_fn(na, nt, |a, t| {
            if p_task[t] > 0.0 {
                (p_joint.at(a, t) / p_task[t]).min(1.0)
            } else {
                f64::NAN
            }
        });
        let p_task_given_attr = Matrix::from_fn(na, nt, |a, t| {
            if p_attr[a] > 0.0 {
                (p_joint.at(a, t) / p_attr[a]).min(1.0)
            } else {
                f64::NAN
            }
        });
        Ok(Self {
            p_attr,
            p_task,
            p_joint,
            p_attr_given_task,
            p_task_given_attr,
            support_counts: None,
            defined_mask: DefinedMask {
                attr_given_task: attr_given_task_defined,
                task_given_attr: task_given_attr_defined,
            },
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.p_attr.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.p_task.len()
    }
}

/// Estimates every marginal, joint and conditional probability from
/// (possibly soft, possibly weighted) indicator matrices.
pub fn compute_stats(attrs: &Matrix, tasks: &Matrix, weights: Option<&[f64]>) -> Result<CorrelationStats> {
    let n = attrs.rows();
    if n == 0 || tasks.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if tasks.rows() != n {
        return Err(Error::dims("task rows", n, tasks.rows()));
    }
    check_unit_interval(attrs, "attribute matrix")?;
    check_unit_interval(tasks, "task matrix")?;
    if let Some(w) = weights {
        check_weights(w, n)?;
    }
    let (na, nt) = (attrs.cols(), tasks.cols());
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

    let mut total = 0.0;
    let mut attr = vec![0.0; na];
    let mut task = vec![0.0; nt];
    let mut joint = Matrix::filled(na, nt, 0.0);
    for i in 0..n {
        let w = weight(i);
        total += w;
        let arow = attrs.row(i);
        let trow = tasks.row(i);
        for (acc, &x) in attr.iter_mut().zip(arow) {
            *acc += w * x;
        }
        for (acc, &x) in task.iter_mut().zip(trow) {
            *acc += w * x;
        }
        for (a, &x) in arow.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (t, &y) in trow.iter().enumerate() {
                let cur = *joint.get(a, t);
                joint.set(a, t, cur + w * x * y);
            }
        }
    }

    let p_attr: Vec<f64> = attr.iter().map(|c| c / total).collect();
    let p_task: Vec<f64> = task.iter().map(|c| c / total).collect();
    let p_joint = joint.map(|c| c / total);
    let p_attr_given_task = Matrix::from_fn(na, nt, |a, t| {
        if task[t] > 0.0 {
            joint.at(a, t) / task[t]
        } else {
            f64::NAN
        }
    });
    let p_task_given_attr = Matrix::from_fn(na, nt, |a, t| {
        if attr[a] > 0.0 {
            joint.at(a, t) / attr[a]
        } else {
            f64::NAN
        }
    });
    let defined_mask = DefinedMask {
        attr_given_task: Matrix::from_fn(na, nt, |_, t| task[t] > 0.0),
        task_given_attr: Matrix::from_fn(na, nt, |a, _| attr[a] > 0.0),
    };
    Ok(CorrelationStats {
        p_attr,
        p_task,
        p_joint,
        p_attr_given_task,
        p_task_given_attr,
        support_counts: Some(SupportCounts {
            total,
            attr,
            task,
            joint,
        }),
        defined_mask,
    })
}

/// `P(A_a=1, T_t=1) − P(A_a=1)·P(T_t=1)` per pair. Positive entries mean the
/// attribute co-occurs with the task more often than independence predicts.
///
/// Empirical stats are evaluated on the counts as
/// `(n_at·n − n_a·n_t) / n²`, which is exactly zero at exact independence
/// for integer counts.
pub fn independence_gap(stats: &CorrelationStats) -> Matrix {
    Matrix::from_fn(stats.n_attributes(), stats.n_tasks(), |a, t| match &stats.support_counts {
        Some(c) => (c.joint.at(a, t) * c.total - c.attr[a] * c.task[t]) / (c.total * c.total),
        None => stats.p_joint.at(a, t) - stats.p_attr[a] * stats.p_task[t],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSource {
    EmpiricalTrain,
    EmpiricalTest,
    UserSupplied,
}

/// Reference correlation structure that amplification is measured against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseCorrelations {
    pub attribute_names: Vec<String>,
    pub task_names: Vec<String>,
    pub stats: CorrelationStats,
    pub source: BaseSource,
    pub description: Option<String>,
}

impl BaseCorrelations {
    pub fn from_dataset(data: &IndicatorDataset, source: BaseSource) -> Result<Self> {
        Ok(Self {
            attribute_names: data.attribute_names().to_vec(),
            task_names: data.task_names().to_vec(),
            stats: data.stats()?,
            source,
            description: None,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.stats.n_attributes()
    }

    pub fn n_tasks(&self) -> usize {
        self.stats.n_tasks()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts_dataset(cells: &[(usize, [f64; 2], f64)]) -> IndicatorDataset {
        // (count, attribute one-hot over two groups, task)
        let mut rows = Vec::new();
        for &(count, a, t) in cells {
            for _ in 0..count {
                rows.push((a.to_vec(), vec![t]));
            }
        }
        IndicatorDataset::from_rows(&["a1", "a2"], &["t"], &rows).unwrap()
    }

    fn shortcoming2() -> IndicatorDataset {
        counts_dataset(&[
            (60, [1.0, 0.0], 0.0),
            (30, [1.0, 0.0], 1.0),
            (10, [0.0, 1.0], 0.0),
            (20, [0.0, 1.0], 1.0),
        ])
    }

    #[test]
    fn balanced_groups_conditional() {
        let d = counts_dataset(&[
            (30, [1.0, 0.0], 1.0),
            (10, [1.0, 0.0], 0.0),
            (10, [0.0, 1.0], 1.0),
            (30, [0.0, 1.0], 0.0),
        ]);
        let s = d.stats().unwrap();
        assert!((s.p_task_given_attr.at(0, 0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_example_is_degenerate_one() {
        let d = IndicatorDataset::from_rows(&["a"], &["t"], &[(vec![1.0], vec![1.0])]).unwrap();
        let s = d.stats().unwrap();
        assert_eq!(s.p_attr, vec![1.0]);
        assert_eq!(s.p_task, vec![1.0]);
        assert_eq!(s.p_joint.at(0, 0), 1.0);
        assert_eq!(s.p_attr_given_task.at(0, 0), 1.0);
        assert_eq!(s.p_task_given_attr.at(0, 0), 1.0);
    }

    #[test]
    fn shortcoming2_conditional_and_gap() {
        let s = shortcoming2().stats().unwrap();
        assert!((s.p_attr_given_task.at(0, 0) - 0.6).abs() < 1e-12);
        let gap = independence_gap(&s);
        // 20/120 - (30/120)(50/120)
        let expected = 20.0 / 120.0 - (30.0 / 120.0) * (50.0 / 120.0);
        assert!((gap.at(1, 0) - expected).abs() < 1e-12);
        // 1/12 − (4/12)(3/12) is zero only when evaluated on counts
        let mut rows = vec![(vec![1.0], vec![1.0])];
        rows.extend((0..3).map(|_| (vec![1.0], vec![0.0])));
        rows.extend((0..2).map(|_| (vec![0.0], vec![1.0])));
        rows.extend((0..6).map(|_| (vec![0.0], vec![0.0])));
        let d = IndicatorDataset::from_rows(&["a"], &["t"], &rows).unwrap();
        assert_eq!(independence_gap(&d.stats().unwrap()).at(0, 0), 0.0);
        assert!((gap.at(1, 0) - 0.0625).abs() < 1e-12);
        assert!((gap.at(0, 0) + 0.0625).abs() < 1e-12);
    }

    #[test]
    fn oven_gap_from_supplied_probabilities() {
        let p_man = 0.712;
        let p_oven = 0.0129 / p_man;
        let s = CorrelationStats::from_probabilities(
            vec![p_man],
            vec![p_oven],
            Matrix::from_rows(vec![vec![0.0103]]).unwrap(),
        )
        .unwrap();
        assert!((independence_gap(&s).at(0, 0) + 0.0026).abs() < 1e-12);
    }

    #[test]
    fn exact_independence_gives_zero_gap() {
        // 2x2 grid with every (a, t) combination appearing equally often.
        let mut rows = Vec::new();
        for a in [0.0, 1.0] {
            for t in [0.0, 1.0] {
                for _ in 0..3 {
                    rows.push((vec![a], vec![t]));
                }
            }
        }
        let d = IndicatorDataset::from_rows(&["a"], &["t"], &rows).unwrap();
        assert_eq!(independence_gap(&d.stats().unwrap()).at(0, 0), 0.0);
    }

    #[test]
    fn undefined_conditionals_are_masked() {
        let d = IndicatorDataset::from_rows(
            &["a", "b"],
            &["t"],
            &[(vec![1.0, 0.0], vec![0.0]), (vec![1.0, 0.0], vec![0.0])],
        )
        .unwrap();
        let s = d.stats().unwrap();
        assert!(!s.defined_mask.attr_given_task.get(0, 0));
        assert!(s.p_attr_given_task.at(0, 0).is_nan());
        assert!(*s.defined_mask.task_given_attr.get(0, 0));
        assert!(!s.defined_mask.task_given_attr.get(1, 0));
    }

    #[test]
    fn error_paths() {
        let a = Matrix::filled(2, 1, 1.0);
        let t = Matrix::filled(3, 1, 1.0);
        assert!(matches!(compute_stats(&a, &t, None), Err(Error::DimensionMismatch { .. })));
        let empty = Matrix::filled(0, 1, 0.0);
        assert!(matches!(compute_stats(&empty, &empty, None), Err(Error::EmptyDataset)));
        let t2 = Matrix::filled(2, 1, 1.0);
        assert!(matches!(
            compute_stats(&a, &t2, Some(&[0.0, 0.0])),
            Err(Error::ZeroWeights)
        ));
        assert!(matches!(
            compute_stats(&a, &t2, Some(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = Matrix::filled(2, 1, 1.5);
        assert!(matches!(compute_stats(&bad, &t2, None), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = IndicatorDataset::from_rows(&["a", "a"], &["t"], &[(vec![1.0, 0.0], vec![1.0])]);
        assert!(r.is_err());
    }

    #[test]
    fn inconsistent_probabilities_rejected() {
        let r = CorrelationStats::from_probabilities(
            vec![0.3],
            vec![0.5],
            Matrix::from_rows(vec![vec![0.4]]).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn weights_match_row_duplication() {
        let d = counts_dataset(&[(1, [1.0, 0.0], 1.0), (1, [0.0, 1.0], 0.0), (1, [1.0, 0.0], 0.0)]);
        let weighted = d.clone().with_weights(Some(vec![3.0, 1.0, 2.0])).unwrap();
        let dup = d.select_rows(&[0, 0, 0, 1, 2, 2]).unwrap();
        let (s1, s2) = (weighted.stats().unwrap(), dup.stats().unwrap());
        for a in 0..2 {
            assert!((s1.p_attr[a] - s2.p_attr[a]).abs() < 1e-12);
            assert!((s1.p_joint.at(a, 0) - s2.p_joint.at(a, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_kind_inference() {
        let m = Matrix::from_rows(vec![vec![0.2], vec![1.0]]).unwrap();
        let p = PredictionSet::new(None, Some((vec!["t".into()], m.clone())), None).unwrap();
        assert_eq!(p.kind(), PredictionKind::Soft);
        assert!(PredictionSet::new(None, Some((vec!["t".into()], m)), Some(PredictionKind::Discrete)).is_err());
        assert!(PredictionSet::new(None, None, None).is_err());
    }
}
