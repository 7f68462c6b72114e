//! Bias amplification measurement for classifier outputs.
//!
//! The crate computes the prediction-conditioned amplification score
//! (`BiasAmp_MALS`) and the directional score `BiasAmp→` in both directions
//! (attribute→task and task→attribute), together with the classic
//! group-fairness baselines (FPR/TPR/accuracy differences, mean subgroup
//! accuracy). Supporting machinery covers decision-threshold calibration,
//! threshold sweeps, bootstrap and multi-run confidence intervals, a suite
//! of deterministic toy scenarios and an independent counting oracle.
//!
//! Every metric returns its disaggregated per-(attribute, task) matrices
//! alongside the aggregate, see [`metrics::BiasAmpResult`].

pub mod calibration;
pub mod cli;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod resampling;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::{
    biasamp_directional, biasamp_mals, BiasAmpResult, DeltaBaseline, Direction, MetricConfig,
    MetricKind, MetricSpec, UndefinedPolicy,
};
pub use stats::{
    compute_stats, independence_gap, BaseCorrelations, BaseSource, CorrelationStats,
    IndicatorDataset, PredictionKind, PredictionSet, EPS_NUM,
};
