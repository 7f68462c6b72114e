//! Brute-force recomputation of the amplification metrics.
//!
//! Everything here is written directly from the metric definitions with
//! explicit counting loops over examples. It deliberately avoids
//! `compute_stats`, `independence_gap` and the metrics module so the two
//! paths can be checked against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{biasamp_directional, biasamp_mals, DeltaBaseline, Direction, MetricConfig, MetricKind, UndefinedPolicy};
use crate::stats::{BaseCorrelations, BaseSource, IndicatorDataset, PredictionSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub aggregate: f64,
    /// `[attribute][task]`
    pub defined: Vec<Vec<bool>>,
}

/// Recomputes a metric with base correlations counted directly on `train`.
/// Only unweighted datasets of at most 10 000 examples are supported.
pub fn counting_oracle(
    train: &IndicatorDataset,
    truth: &IndicatorDataset,
    preds: &PredictionSet,
    kind: MetricKind,
    cfg: &MetricConfig,
) -> Result<OracleResult> {
    if train.weights().is_some() || truth.weights().is_some() {
        return Err(Error::invalid("the counting oracle does not handle example weights"));
    }
    if truth.n_examples() > 10_000 || train.n_examples() > 10_000 {
        return Err(Error::invalid("the counting oracle is limited to 10 000 examples"));
    }
    let na = train.attribute_names().len();
    let nt = train.task_names().len();
    let n_train = train.n_examples() as f64;
    let n_test = truth.n_examples();
    let ta = train.attrs();
    let tt = train.tasks();
    let eps = cfg.tie_epsilon;

    let mut contribution = vec![vec![0.0; nt]; na];
    let mut defined = vec![vec![false; nt]; na];

    for a in 0..na {
        for t in 0..nt {
            // training counts
            let mut c_a = 0.0;
            let mut c_t = 0.0;
            let mut c_at = 0.0;
            for i in 0..train.n_examples() {
                c_a += ta.at(i, a);
                c_t += tt.at(i, t);
                c_at += ta.at(i, a) * tt.at(i, t);
            }

            match kind {
                MetricKind::Mals => {
                    let ap = preds.attr_pred().ok_or_else(|| Error::Missing("attribute predictions".into()))?;
                    let tp = preds.task_pred().ok_or_else(|| Error::Missing("task predictions".into()))?;
                    if c_t == 0.0 {
                        continue;
                    }
                    // y = 1[P(A|T) > 1/|A|]
                    let y = if eps == 0.0 {
                        c_at * na as f64 > c_t
                    } else {
                        c_at / c_t > 1.0 / na as f64 + eps
                    };
                    let mut pred_t = 0.0;
                    let mut pred_at = 0.0;
                    for i in 0..n_test {
                        pred_t += tp.at(i, t);
                        pred_at += tp.at(i, t) * ap.at(i, a);
                    }
                    if pred_t == 0.0 {
                        continue;
                    }
                    let delta = pred_at / pred_t - c_at / c_t;
                    defined[a][t] = true;
                    contribution[a][t] = if y { delta } else { 0.0 };
                }
                MetricKind::At | MetricKind::Ta => {
                    // y = 1[P(A,T) > P(A)P(T)]
                    let y = if eps == 0.0 {
                        c_at * n_train > c_a * c_t
                    } else {
                        (c_at * n_train - c_a * c_t) / (n_train * n_train) > eps
                    };
                    let (cond, cond_col, target_truth, target_pred, target_col, base_den) = if kind == MetricKind::At {
                        let tp = preds.task_pred().ok_or_else(|| Error::Missing("task predictions".into()))?;
                        (truth.attrs(), a, truth.tasks(), tp, t, c_a)
                    } else {
                        let ap = preds.attr_pred().ok_or_else(|| Error::Missing("attribute predictions".into()))?;
                        (truth.tasks(), t, truth.attrs(), ap, a, c_t)
                    };
                    let mut den = 0.0;
                    let mut num_pred = 0.0;
                    let mut num_truth = 0.0;
                    for i in 0..n_test {
                        den += cond.at(i, cond_col);
                        num_pred += cond.at(i, cond_col) * target_pred.at(i, target_col);
                        num_truth += cond.at(i, cond_col) * target_truth.at(i, target_col);
                    }
                    if den == 0.0 {
                        continue;
                    }
                    let reference = match cfg.delta_baseline {
                        DeltaBaseline::TestGroundTruth => num_truth / den,
                        DeltaBaseline::BaseCorrelations => {
                            if base_den == 0.0 {
                                continue;
                            }
                            c_at / base_den
                        }
                    };
                    let delta = num_pred / den - reference;
                    defined[a][t] = true;
                    contribution[a][t] = if y { delta } else { -delta };
                }
            }
        }
    }

    let n_defined = defined.iter().flatten().filter(|d| **d).count();
    let all_defined = n_defined == na * nt;
    let sum: f64 = (0..na)
        .flat_map(|a| (0..nt).map(move |t| (a, t)))
        .filter(|&(a, t)| defined[a][t])
        .map(|(a, t)| contribution[a][t])
        .sum();
    let full = if kind == MetricKind::Mals { nt } else { na * nt };
    let aggregate = if all_defined {
        if full == 0 {
            return Err(Error::NoDefinedPairs(kind.name().into()));
        }
        sum / full as f64
    } else {
        match cfg.undefined_policy {
            UndefinedPolicy::Error => return Err(Error::Undefined(format!("{} (oracle)", kind.name()))),
            UndefinedPolicy::PropagateNan => f64::NAN,
            UndefinedPolicy::SkipAndRenormalize => {
                let norm = if kind == MetricKind::Mals {
                    (0..nt).filter(|&t| (0..na).any(|a| defined[a][t])).count()
                } else {
                    n_defined
                };
                if norm == 0 {
                    return Err(Error::NoDefinedPairs(kind.name().into()));
                }
                sum / norm as f64
            }
        }
    };
    Ok(OracleResult { aggregate, defined })
}

/// Random small problem: separate training and test sets plus random
/// discrete predictions. Attribute rows may have any number of ones.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub train: IndicatorDataset,
    pub truth: IndicatorDataset,
    pub preds: PredictionSet,
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
}

/// `N ≤ 12`, `|A| ≤ 3`, `|T| ≤ 2`.
pub fn random_instance<R: Rng>(rng: &mut R) -> RandomInstance {
    let na = rng.random_range(1..=3);
    let nt = rng.random_range(1..=2);
    let attr_names: Vec<String> = (0..na).map(|a| format!("a{a}")).collect();
    let task_names: Vec<String> = (0..nt).map(|t| format!("t{t}")).collect();
    let dataset = |rng: &mut R| {
        let n = rng.random_range(1..=12);
        let attrs = random_matrix(rng, n, na);
        let tasks = random_matrix(rng, n, nt);
        IndicatorDataset::new(attr_names.clone(), task_names.clone(), attrs, tasks, None).expect("valid random dataset")
    };
    let train = dataset(rng);
    let truth = dataset(rng);
    let n = truth.n_examples();
    let preds = PredictionSet::for_dataset(&truth, Some(random_matrix(rng, n, na)), Some(random_matrix(rng, n, nt)))
        .expect("valid random predictions");
    RandomInstance { train, truth, preds }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialReport {
    pub instances: usize,
    pub comparisons: usize,
    /// Comparisons where both sides agreed the metric is undefined.
    pub agreed_undefined: usize,
    pub max_abs_diff: f64,
    pub mismatches: Vec<String>,
}

impl DifferentialReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the metrics module with [`counting_oracle`] on `n_instances`
/// seeded random problems, for every metric kind and a rotation of
/// undefined-pair policies and gap baselines.
pub fn differential_check(n_instances: usize, seed: u64, tolerance: f64) -> DifferentialReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policies = [
        UndefinedPolicy::SkipAndRenormalize,
        UndefinedPolicy::PropagateNan,
        UndefinedPolicy::Error,
    ];
    let mut report = DifferentialReport {
        instances: n_instances,
        comparisons: 0,
        agreed_undefined: 0,
        max_abs_diff: 0.0,
        mismatches: Vec::new(),
    };
    for i in 0..n_instances {
        let inst = random_instance(&mut rng);
        let base = BaseCorrelations::from_dataset(&inst.train, BaseSource::EmpiricalTrain).expect("valid");
        let cfg = MetricConfig {
            undefined_policy: policies[i % 3],
            tie_epsilon: 0.0,
            delta_baseline: if i % 2 == 0 {
                DeltaBaseline::TestGroundTruth
            } else {
                DeltaBaseline::BaseCorrelations
            },
        };
        for kind in [MetricKind::Mals, MetricKind::At, MetricKind::Ta] {
            report.comparisons += 1;
            let fast = match kind {
                MetricKind::Mals => biasamp_mals(&base, &inst.preds, &cfg),
                MetricKind::At => biasamp_directional(Direction::AToT, &base, &inst.truth, &inst.preds, &cfg),
                MetricKind::Ta => biasamp_directional(Direction::TToA, &base, &inst.truth, &inst.preds, &cfg),
            };
            let slow = counting_oracle(&inst.train, &inst.truth, &inst.preds, kind, &cfg);
            let label = format!("instance {i} {} {:?}", kind.name(), cfg);
            match (fast, slow) {
                (Ok(f), Ok(s)) => {
                    if f.defined_mask.to_rows() != s.defined {
                        report.mismatches.push(format!("{label}: defined masks differ"));
                    }
                    let both_nan = f.aggregate.is_nan() && s.aggregate.is_nan();
                    if !both_nan {
                        let diff = (f.aggregate - s.aggregate).abs();
                        if diff.is_nan() || diff > tolerance {
                            report
                                .mismatches
                                .push(format!("{label}: metrics {} vs oracle {}", f.aggregate, s.aggregate));
                        } else {
                            report.max_abs_diff = report.max_abs_diff.max(diff);
                        }
                    } else {
                        report.agreed_undefined += 1;
                    }
                }
                (Err(f), Err(s)) if std::mem::discriminant(&f) == std::mem::discriminant(&s) => {
                    report.agreed_undefined += 1;
                }
                (f, s) => report.mismatches.push(format!(
                    "{label}: metrics {:?} vs oracle {:?}",
                    f.map(|r| r.aggregate),
                    s.map(|r| r.aggregate)
                )),
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{shortcoming1_three_group, shortcoming2_imbalanced};

    #[test]
    fn oracle_reproduces_reference_values() {
        let cfg = MetricConfig::default();
        let b = shortcoming1_three_group();
        let at = counting_oracle(&b.train, &b.test_truth, &b.test_preds, MetricKind::At, &cfg).unwrap();
        assert!((at.aggregate - 0.1778).abs() < 1e-4);
        let b = shortcoming2_imbalanced();
        let mals = counting_oracle(&b.train, &b.test_truth, &b.test_preds, MetricKind::Mals, &cfg).unwrap();
        assert!((mals.aggregate + 0.6).abs() < 1e-12);
    }

    #[test]
    fn oracle_zero_on_perfect_predictor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng);
        let perfect = PredictionSet::perfect(&inst.truth);
        for kind in [MetricKind::At, MetricKind::Ta] {
            match counting_oracle(&inst.truth, &inst.truth, &perfect, kind, &MetricConfig::default()) {
                Ok(r) => assert_eq!(r.aggregate, 0.0),
                Err(e) => assert!(matches!(e, Error::NoDefinedPairs(_))),
            }
        }
    }

    #[test]
    fn small_differential_run() {
        let r = differential_check(200, 3, 1e-12);
        assert!(r.passed(), "{:?}", r.mismatches);
    }
}
