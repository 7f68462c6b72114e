//! Command-line front end. Every command writes a JSON [`ReportDocument`]
//! to stdout (or `--out`) and a short human summary to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibration::{apply_thresholds, calibrate_columns, threshold_sweep};
use crate::error::{Error, Result};
use crate::io::{check_joined, export_bundle, load_base_correlations, load_table, write_table, ConfigEcho, LoadedTable, MetricReport, NamedInterval, ReportDocument};
use crate::metrics::{
    biasamp_directional, biasamp_mals, DeltaBaseline, Direction, GroupPair, MetricConfig, MetricKind, MetricSpec,
    SubgroupGrouping, UndefinedPolicy,
};
use crate::resampling::{bootstrap_ci, multirun_ci, DEFAULT_N_BOOT};
use crate::scenarios::{self, differential_check, rate_sweep_grid, rate_sweep, SCENARIO_NAMES};
use crate::stats::{independence_gap, BaseCorrelations, BaseSource, IndicatorDataset, PredictionSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EXPECTATION: i32 = 3;
pub const EXIT_COMPUTATION: i32 = 4;

/// Environment variable supplying the default bootstrap seed.
pub const SEED_ENV: &str = "BIASAMP_SEED";

const TA_CAUTION: &str = "task-to-attribute amplification scores a model that predicts protected attributes; \
building such a model is rarely justified, and this number does not make one acceptable";

#[derive(Parser, Debug)]
#[command(name = "biasamp", version, about = "Bias amplification and group-fairness metrics for classifier outputs")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Marginal, joint and conditional probabilities of a labelled table.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Bias amplification (mals, at, ta).
    Biasamp(BiasampArgs),
    /// FPR / TPR / accuracy differences and mean subgroup accuracy.
    Classic(ClassicArgs),
    /// Pick per-column thresholds that hit a target positive rate.
    Calibrate(CalibrateArgs),
    /// Evaluate metrics across a grid of decision thresholds.
    Sweep(SweepArgs),
    /// Percentile bootstrap interval for one metric.
    Bootstrap(BootstrapArgs),
    /// Normal-approximation interval over metric values from independent runs.
    Multirun {
        /// Comma-separated metric values, one per run.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Run a built-in scenario and check its expected values.
    Scenario {
        /// Scenario name; omit with --list to see them all.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        /// Also write the scenario's tables here.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
    /// Metric curves for the woman/man × painting example over x ∈ {0, 1/40, …, 1}.
    RateSweep,
    /// Compare the metrics against the brute-force counting oracle.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PolicyArg {
    Skip,
    Nan,
    Error,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BaselineArg {
    TestTruth,
    Base,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value = "skip")]
    undefined_policy: PolicyArg,
    /// Dead band around the independence / 1/|A| threshold when setting y.
    #[arg(long, default_value_t = 0.0)]
    tie_epsilon: f64,
    /// Second term of the directional gap: test ground truth or base correlations.
    #[arg(long, value_enum, default_value = "test-truth")]
    delta_baseline: BaselineArg,
}

impl ConfigArgs {
    fn config(&self) -> Result<MetricConfig> {
        let cfg = MetricConfig {
            undefined_policy: match self.undefined_policy {
                PolicyArg::Skip => UndefinedPolicy::SkipAndRenormalize,
                PolicyArg::Nan => UndefinedPolicy::PropagateNan,
                PolicyArg::Error => UndefinedPolicy::Error,
            },
            tie_epsilon: self.tie_epsilon,
            delta_baseline: match self.delta_baseline {
                BaselineArg::TestTruth => DeltaBaseline::TestGroundTruth,
                BaselineArg::Base => DeltaBaseline::BaseCorrelations,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
struct BaseArgs {
    /// Training table; its ground truth provides the base correlations.
    #[arg(long, conflicts_with = "base_correlations")]
    train: Option<PathBuf>,
    /// JSON document of user-supplied base correlations.
    #[arg(long)]
    base_correlations: Option<PathBuf>,
    /// Use the test ground truth as the base correlations.
    #[arg(long, conflicts_with_all = ["train", "base_correlations"])]
    base_from_test: bool,
}

#[derive(Args, Debug, Clone)]
struct TestArgs {
    /// Table with ground-truth attr:/task: columns.
    #[arg(long)]
    test_truth: PathBuf,
    /// Table with pred_attr:/pred_task: columns; defaults to --test-truth.
    #[arg(long)]
    test_pred: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BiasampArgs {
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    metric: Vec<KindArg>,
    #[command(flatten)]
    base: BaseArgs,
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Required for `--metric ta`.
    #[arg(long)]
    acknowledge_attribute_prediction: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    Mals,
    At,
    Ta,
}

impl From<KindArg> for MetricKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mals => MetricKind::Mals,
            KindArg::At => MetricKind::At,
            KindArg::Ta => MetricKind::Ta,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AnyMetric {
    Mals,
    At,
    Ta,
    Fpr,
    Tpr,
    Accuracy,
    Msa,
    MsaCells,
}

impl AnyMetric {
    fn is_classic(self) -> bool {
        !matches!(self, AnyMetric::Mals | AnyMetric::At | AnyMetric::Ta)
    }
}

#[derive(Args, Debug, Clone)]
struct GroupArgs {
    /// Task column the classic metrics are computed on.
    #[arg(long)]
    task: Option<String>,
    /// Reference group; differences are reported as group_b − group_a.
    #[arg(long)]
    group_a: Option<String>,
    #[arg(long)]
    group_b: Option<String>,
}

impl GroupArgs {
    fn task_index(&self, truth: &IndicatorDataset) -> Result<usize> {
        match &self.task {
            Some(t) => truth.task_index(t),
            None if truth.task_names().len() == 1 => Ok(0),
            None => Err(Error::Missing("--task is required when there are several tasks".into())),
        }
    }

    fn pair(&self, truth: &IndicatorDataset) -> Result<GroupPair> {
        let (Some(a), Some(b)) = (&self.group_a, &self.group_b) else {
            return Err(Error::Missing("--group-a and --group-b are required for difference metrics".into()));
        };
        Ok(GroupPair::new(self.task_index(truth)?, truth.attribute_index(a)?, truth.attribute_index(b)?))
    }

    fn spec(&self, m: AnyMetric, truth: &IndicatorDataset) -> Result<MetricSpec> {
        Ok(match m {
            AnyMetric::Mals => MetricSpec::BiasAmp { kind: MetricKind::Mals },
            AnyMetric::At => MetricSpec::BiasAmp { kind: MetricKind::At },
            AnyMetric::Ta => MetricSpec::BiasAmp { kind: MetricKind::Ta },
            AnyMetric::Fpr => MetricSpec::FprDifference(self.pair(truth)?),
            AnyMetric::Tpr => MetricSpec::TprDifference(self.pair(truth)?),
            AnyMetric::Accuracy => MetricSpec::AccuracyDifference(self.pair(truth)?),
            AnyMetric::Msa => MetricSpec::MeanSubgroupAccuracy {
                task: self.task_index(truth)?,
                grouping: SubgroupGrouping::Attribute,
            },
            AnyMetric::MsaCells => MetricSpec::MeanSubgroupAccuracy {
                task: self.task_index(truth)?,
                grouping: SubgroupGrouping::AttributeTask,
            },
        })
    }
}

#[derive(Args, Debug)]
struct ClassicArgs {
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    groups: GroupArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["fpr", "tpr", "accuracy", "msa"])]
    metric: Vec<AnyMetric>,
    #[arg(long, value_enum, default_value = "skip")]
    undefined_policy: PolicyArg,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Validation table with score_task:/score_attr: columns.
    #[arg(long)]
    scores: PathBuf,
    /// Target positive rate, one for all columns or one per column.
    #[arg(long, value_delimiter = ',', conflicts_with = "train")]
    target_rate: Vec<f64>,
    /// Take each column's target rate from this table's ground-truth prevalence.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Score table to threshold with the chosen cuts.
    #[arg(long, requires = "predictions_out")]
    apply_to: Option<PathBuf>,
    /// Where to write the thresholded pred_ table.
    #[arg(long, requires = "apply_to")]
    predictions_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Table with ground-truth columns.
    #[arg(long)]
    test_truth: PathBuf,
    /// Table with score columns; defaults to --test-truth.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// `start:stop:step` or a comma-separated list of thresholds.
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    metrics: Vec<AnyMetric>,
    #[command(flatten)]
    groups: GroupArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Also report the trapezoid integral of each curve.
    #[arg(long)]
    integrate: bool,
    #[arg(long)]
    acknowledge_attribute_prediction: bool,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[arg(long, value_enum)]
    metric: AnyMetric,
    #[command(flatten)]
    base: BaseArgs,
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    groups: GroupArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = DEFAULT_N_BOOT)]
    n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    acknowledge_attribute_prediction: bool,
}

/// Outcome of a command: its report plus whether an expectation failed.
struct Outcome {
    report: ReportDocument,
    summary: Vec<String>,
    expectation_failed: bool,
}

impl Outcome {
    fn new(report: ReportDocument) -> Self {
        Self {
            report,
            summary: Vec::new(),
            expectation_failed: false,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_COMPUTATION
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match dispatch(cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    let json = match outcome.report.to_json() {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_COMPUTATION;
        }
    };
    match cli.out {
        Some(path) => {
            if let Err(source) = std::fs::write(&path, json + "\n") {
                eprintln!("error: {}", Error::Io { path: path.display().to_string(), source });
                return EXIT_INPUT;
            }
        }
        None => {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{json}");
        }
    }
    if outcome.expectation_failed {
        EXIT_EXPECTATION
    } else {
        EXIT_OK
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Stats { data } => cmd_stats(&data),
        Command::Biasamp(a) => cmd_biasamp(a),
        Command::Classic(a) => cmd_classic(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bootstrap(a) => cmd_bootstrap(a),
        Command::Multirun { values, confidence } => cmd_multirun(&values, confidence),
        Command::Scenario { name, list, export_dir } => cmd_scenario(name, list, export_dir),
        Command::RateSweep => cmd_rate_sweep(),
        Command::OracleCheck { n, seed, tolerance } => cmd_oracle(n, seed, tolerance),
    }
}

fn cmd_stats(data: &Path) -> Result<Outcome> {
    let table = load_table(data)?;
    let truth = table.require_truth()?;
    let stats = truth.stats()?;
    let mut report = ReportDocument::new("stats");
    report.add_input("data", &table);
    let mut out = Outcome::new(report);
    out.summary.push(format!(
        "{} examples, {} attributes, {} tasks",
        truth.n_examples(),
        truth.attribute_names().len(),
        truth.task_names().len()
    ));
    out.report.add_result("attribute_names", truth.attribute_names())?;
    out.report.add_result("task_names", truth.task_names())?;
    out.report.add_result("independence_gap", independence_gap(&stats))?;
    out.report.add_result("stats", &stats)?;
    Ok(out)
}

/// Loads test truth and predictions, with predictions aligned to the truth
/// column order.
fn load_test(args: &TestArgs, report: &mut ReportDocument) -> Result<(IndicatorDataset, PredictionSet)> {
    let truth_table = load_table(&args.test_truth)?;
    report.add_input("test_truth", &truth_table);
    let truth = truth_table.require_truth()?.clone();
    let preds = match &args.test_pred {
        Some(p) => {
            let pred_table = load_table(p)?;
            check_joined(&truth_table, &pred_table)?;
            report.add_input("test_pred", &pred_table);
            pred_table.require_preds()?.clone()
        }
        None => truth_table.require_preds()?.clone(),
    };
    let preds = preds.aligned_to(&truth)?;
    Ok((truth, preds))
}

fn load_base(args: &BaseArgs, test_truth: &IndicatorDataset, report: &mut ReportDocument) -> Result<BaseCorrelations> {
    let base = if let Some(path) = &args.base_correlations {
        let b = load_base_correlations(path)?;
        report.notes.provenance.push(format!("base correlations: {:?} from {}", b.source, path.display()));
        b
    } else if let Some(path) = &args.train {
        let table = load_table(path)?;
        report.add_input("train", &table);
        report
            .notes
            .provenance
            .push(format!("base correlations: empirical training statistics from {}", path.display()));
        BaseCorrelations::from_dataset(table.require_truth()?, BaseSource::EmpiricalTrain)?
    } else if args.base_from_test {
        report
            .notes
            .provenance
            .push("base correlations: empirical statistics of the test ground truth".into());
        BaseCorrelations::from_dataset(test_truth, BaseSource::EmpiricalTest)?
    } else {
        return Err(Error::Missing(
            "base correlations: pass --train, --base-correlations or --base-from-test".into(),
        ));
    };
    if let Some(d) = &base.description {
        report.notes.provenance.push(format!("base description: {d}"));
    }
    Ok(base)
}

fn check_ack(uses_ta: bool, acknowledged: bool, report: &mut ReportDocument) -> Result<()> {
    if uses_ta {
        if !acknowledged {
            return Err(Error::invalid(
                "the ta metric needs --acknowledge-attribute-prediction",
            ));
        }
        report.notes.cautions.push(TA_CAUTION.into());
    }
    Ok(())
}

fn echo(cfg: &MetricConfig) -> ConfigEcho {
    ConfigEcho::from(cfg)
}

fn cmd_biasamp(args: BiasampArgs) -> Result<Outcome> {
    let cfg = args.config.config()?;
    let mut report = ReportDocument::new("biasamp");
    report.config = Some(echo(&cfg));
    check_ack(args.metric.contains(&KindArg::Ta), args.acknowledge_attribute_prediction, &mut report)?;
    let (truth, preds) = load_test(&args.test, &mut report)?;
    let base = load_base(&args.base, &truth, &mut report)?;
    let mut out = Outcome::new(report);
    for k in &args.metric {
        let r = match MetricKind::from(*k) {
            MetricKind::Mals => biasamp_mals(&base, &preds, &cfg)?,
            MetricKind::At => biasamp_directional(Direction::AToT, &base, &truth, &preds, &cfg)?,
            MetricKind::Ta => biasamp_directional(Direction::TToA, &base, &truth, &preds, &cfg)?,
        };
        out.summary.push(format!(
            "{} = {:.6} ({} of {} pairs defined)",
            r.metric_kind.name(),
            r.aggregate,
            r.defined_mask.iter().filter(|d| **d).count(),
            r.defined_mask.rows() * r.defined_mask.cols()
        ));
        out.report.metrics.push(r.into());
    }
    Ok(out)
}

fn cmd_classic(args: ClassicArgs) -> Result<Outcome> {
    let mut report = ReportDocument::new("classic");
    let (truth, preds) = load_test(&args.test, &mut report)?;
    let cfg = MetricConfig {
        undefined_policy: ConfigArgs {
            undefined_policy: args.undefined_policy,
            tie_epsilon: 0.0,
            delta_baseline: BaselineArg::TestTruth,
        }
        .config()?
        .undefined_policy,
        ..Default::default()
    };
    report.config = Some(echo(&cfg));
    // classic metrics never read the base, but evaluate() takes one
    let base = BaseCorrelations::from_dataset(&truth, BaseSource::EmpiricalTest)?;
    let mut out = Outcome::new(report);
    for m in &args.metric {
        if !m.is_classic() {
            return Err(Error::invalid("use the biasamp command for amplification metrics"));
        }
        let spec = args.groups.spec(*m, &truth)?;
        let v = spec.evaluate(&truth, &preds, &base, &cfg)?;
        out.summary.push(format!("{} = {v:.6}", spec.name()));
        out.report.metrics.push(MetricReport {
            name: spec.name(),
            aggregate: v,
            disaggregated: None,
        });
    }
    if let (Some(a), Some(b)) = (&args.groups.group_a, &args.groups.group_b) {
        out.report.notes.provenance.push(format!("differences are {b} minus {a}"));
    }
    Ok(out)
}

fn prevalences(train: &LoadedTable, scores: &PredictionSet) -> Result<Vec<f64>> {
    let truth = train.require_truth()?;
    let stats = truth.stats()?;
    let mut rates = Vec::new();
    for n in scores.attribute_names() {
        rates.push(stats.p_attr[truth.attribute_index(n)?]);
    }
    for n in scores.task_names() {
        rates.push(stats.p_task[truth.task_index(n)?]);
    }
    Ok(rates)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<Outcome> {
    let mut report = ReportDocument::new("calibrate");
    let table = load_table(&args.scores)?;
    report.add_input("scores", &table);
    let scores = table.require_scores()?;
    let n_cols = scores.attribute_names().len() + scores.task_names().len();
    let rates = if let Some(path) = &args.train {
        let train = load_table(path)?;
        report.add_input("train", &train);
        report
            .notes
            .provenance
            .push(format!("target rates: ground-truth prevalence in {}", path.display()));
        prevalences(&train, scores)?
    } else {
        match args.target_rate.len() {
            0 => return Err(Error::Missing("pass --target-rate or --train".into())),
            1 => vec![args.target_rate[0]; n_cols],
            _ => args.target_rate.clone(),
        }
    };
    if rates.len() != n_cols {
        return Err(Error::dims("target rates", n_cols, rates.len()));
    }
    let n_attr = scores.attribute_names().len();
    let attr_choices = match scores.attr_pred() {
        Some(m) => calibrate_columns(m, &rates[..n_attr])?,
        None => Vec::new(),
    };
    let task_choices = match scores.task_pred() {
        Some(m) => calibrate_columns(m, &rates[n_attr..])?,
        None => Vec::new(),
    };

    let mut out = Outcome::new(report);
    let mut named = Vec::new();
    for (name, c) in scores
        .attribute_names()
        .iter()
        .map(|n| format!("score_attr:{n}"))
        .zip(&attr_choices)
        .chain(scores.task_names().iter().map(|n| format!("score_task:{n}")).zip(&task_choices))
    {
        out.summary.push(format!(
            "{name}: threshold {:.6}, target {:.4}, achieved {:.4}",
            c.threshold, c.target_rate, c.achieved_rate
        ));
        if let Some(note) = &c.tie_note {
            out.report.notes.cautions.push(format!("{name}: {note}"));
        }
        named.push(serde_json::json!({ "column": name, "choice": c }));
    }
    out.report.add_result("thresholds", named)?;

    if let (Some(apply), Some(dest)) = (&args.apply_to, &args.predictions_out) {
        let target = load_table(apply)?;
        out.report.add_input("apply_to", &target);
        let s = target.require_scores()?;
        if s.attribute_names() != scores.attribute_names() || s.task_names() != scores.task_names() {
            return Err(Error::invalid(format!(
                "{} must have the same score columns as {}",
                apply.display(),
                args.scores.display()
            )));
        }
        let thr = |cs: &[crate::calibration::ThresholdChoice]| cs.iter().map(|c| c.threshold).collect::<Vec<_>>();
        let attr = s
            .attr_pred()
            .map(|m| apply_thresholds(m, &thr(&attr_choices)).map(|p| (s.attribute_names().to_vec(), p)))
            .transpose()?;
        let task = s
            .task_pred()
            .map(|m| apply_thresholds(m, &thr(&task_choices)).map(|p| (s.task_names().to_vec(), p)))
            .transpose()?;
        let preds = PredictionSet::new(attr, task, None)?;
        let file = std::fs::File::create(dest).map_err(|source| Error::Io {
            path: dest.display().to_string(),
            source,
        })?;
        write_table(file, None, Some(&preds), None)?;
        out.summary.push(format!("wrote thresholded predictions to {}", dest.display()));
    }
    Ok(out)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("cannot parse threshold grid `{spec}`"));
    if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    } else {
        spec.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<Outcome> {
    let cfg = args.config.config()?;
    let mut report = ReportDocument::new("sweep");
    report.config = Some(echo(&cfg));
    check_ack(args.metrics.contains(&AnyMetric::Ta), args.acknowledge_attribute_prediction, &mut report)?;
    let truth_table = load_table(&args.test_truth)?;
    report.add_input("test_truth", &truth_table);
    let truth = truth_table.require_truth()?.clone();
    let scores = match &args.scores {
        Some(p) => {
            let t = load_table(p)?;
            check_joined(&truth_table, &t)?;
            report.add_input("scores", &t);
            t.require_scores()?.clone()
        }
        None => truth_table.require_scores()?.clone(),
    }
    .aligned_to(&truth)?;
    let needs_base = args.metrics.iter().any(|m| !m.is_classic());
    let base = if needs_base {
        load_base(&args.base, &truth, &mut report)?
    } else {
        BaseCorrelations::from_dataset(&truth, BaseSource::EmpiricalTest)?
    };
    let grid = parse_grid(&args.grid)?;
    let specs: Vec<MetricSpec> = args
        .metrics
        .iter()
        .map(|m| args.groups.spec(*m, &truth))
        .collect::<Result<_>>()?;
    let curve = threshold_sweep(&truth, &scores, &base, &grid, &specs, &cfg, args.integrate)?;
    let mut out = Outcome::new(report);
    out.summary.push(format!("{} thresholds × {} metrics", grid.len(), specs.len()));
    if let Some(integrals) = &curve.integral_per_metric {
        for (name, v) in integrals {
            out.summary.push(format!("∫ {name} = {v:.6}"));
        }
    }
    for (name, gaps) in &curve.integration_gaps {
        if !gaps.is_empty() {
            out.report
                .notes
                .cautions
                .push(format!("{name}: undefined at {} grid points, skipped in the integral", gaps.len()));
        }
    }
    out.report.add_result("curve", &curve)?;
    Ok(out)
}

fn cmd_bootstrap(args: BootstrapArgs) -> Result<Outcome> {
    let cfg = args.config.config()?;
    let mut report = ReportDocument::new("bootstrap");
    let mut config = echo(&cfg);
    config.seed = Some(args.seed);
    report.config = Some(config);
    check_ack(args.metric == AnyMetric::Ta, args.acknowledge_attribute_prediction, &mut report)?;
    let (truth, preds) = load_test(&args.test, &mut report)?;
    let base = if args.metric.is_classic() {
        BaseCorrelations::from_dataset(&truth, BaseSource::EmpiricalTest)?
    } else {
        load_base(&args.base, &truth, &mut report)?
    };
    let spec = args.groups.spec(args.metric, &truth)?;
    let ci = bootstrap_ci(&truth, &preds, &base, &spec, &cfg, args.n_boot, args.confidence, args.seed)?;
    report
        .notes
        .provenance
        .push(format!("percentile bootstrap over test examples, {} replicates", args.n_boot));
    if let Some(n) = &ci.note {
        report.notes.cautions.push(n.clone());
    }
    let mut out = Outcome::new(report);
    out.summary.push(format!(
        "{} = {:.6}, {:.0}% interval [{:.6}, {:.6}]",
        spec.name(),
        ci.point,
        ci.confidence * 100.0,
        ci.lower,
        ci.upper
    ));
    out.report.intervals.push(NamedInterval {
        metric: spec.name(),
        interval: ci,
    });
    Ok(out)
}

fn cmd_multirun(values: &[f64], confidence: f64) -> Result<Outcome> {
    let ci = multirun_ci(values, confidence)?;
    let mut report = ReportDocument::new("multirun");
    report.notes.provenance.push("normal approximation across independent runs".into());
    if let Some(n) = &ci.note {
        report.notes.cautions.push(n.clone());
    }
    let mut out = Outcome::new(report);
    out.summary.push(format!(
        "mean {:.6}, {:.0}% interval [{:.6}, {:.6}] over {} runs",
        ci.point,
        ci.confidence * 100.0,
        ci.lower,
        ci.upper,
        values.len()
    ));
    out.report.intervals.push(NamedInterval {
        metric: "runs".into(),
        interval: ci,
    });
    Ok(out)
}

fn cmd_scenario(name: Option<String>, list: bool, export_dir: Option<PathBuf>) -> Result<Outcome> {
    let mut report = ReportDocument::new("scenario");
    if list || name.is_none() {
        let mut out = Outcome::new(report);
        out.summary.extend(SCENARIO_NAMES.iter().map(|s| s.to_string()));
        out.report.add_result("scenarios", SCENARIO_NAMES)?;
        return Ok(out);
    }
    let bundle = scenarios::by_name(name.as_deref().unwrap_or_default())?;
    let cfg = MetricConfig::default();
    report.config = Some(echo(&cfg));
    report.notes.provenance.push(format!("{}: {}", bundle.name, bundle.description));
    report
        .notes
        .provenance
        .push("base correlations: empirical statistics of the scenario training set".into());
    report.notes.cautions.push(TA_CAUTION.into());
    let mut out = Outcome::new(report);
    for kind in [MetricKind::Mals, MetricKind::At, MetricKind::Ta] {
        match bundle.evaluate(kind, &cfg) {
            Ok(r) => {
                out.summary.push(format!("{} = {:.4}", kind.name(), r.aggregate));
                out.report.metrics.push(r.into());
            }
            Err(e) => out.summary.push(format!("{}: {e}", kind.name())),
        }
    }
    let outcomes = bundle.check();
    for o in &outcomes {
        out.summary.push(format!(
            "{} {}: expected {} ± {:e}, got {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.expected,
            o.tolerance,
            o.actual.map_or_else(|| o.error.clone().unwrap_or_default(), |v| format!("{v:.6}"))
        ));
    }
    out.expectation_failed = outcomes.iter().any(|o| !o.passed);
    out.report.add_result("expectations", &outcomes)?;
    out.report.add_result(
        "bundle",
        serde_json::json!({
            "name": bundle.name,
            "description": bundle.description,
            "n_train": bundle.train.n_examples(),
            "n_test": bundle.test_truth.n_examples(),
            "attribute_names": bundle.train.attribute_names(),
            "task_names": bundle.train.task_names(),
        }),
    )?;
    if let Some(dir) = export_dir {
        let written = export_bundle(&bundle, &dir)?;
        out.summary.push(format!("exported to {}", dir.display()));
        out.report.add_result("exported", written)?;
    }
    Ok(out)
}

fn cmd_rate_sweep() -> Result<Outcome> {
    let table = rate_sweep(&rate_sweep_grid())?;
    let mut report = ReportDocument::new("rate-sweep");
    report
        .notes
        .provenance
        .push("classic differences are woman minus man; the model is perfect on men".into());
    let mut out = Outcome::new(report);
    out.summary.push(format!("{} grid points", table.x.len()));
    out.report.add_result("table", &table)?;
    Ok(out)
}

fn cmd_oracle(n: usize, seed: u64, tolerance: f64) -> Result<Outcome> {
    let r = differential_check(n, seed, tolerance);
    let mut report = ReportDocument::new("oracle-check");
    report.config = Some(ConfigEcho {
        seed: Some(seed),
        ..echo(&MetricConfig::default())
    });
    let mut out = Outcome::new(report);
    out.summary.push(format!(
        "{}: {} comparisons on {} instances, {} mismatches, max |diff| {:e}",
        if r.passed() { "PASS" } else { "FAIL" },
        r.comparisons,
        r.instances,
        r.mismatches.len(),
        r.max_abs_diff
    ));
    out.summary.extend(r.mismatches.iter().take(10).cloned());
    out.expectation_failed = !r.passed();
    out.report.add_result("differential", &r)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn bad_arguments_are_input_errors() {
        assert_eq!(run(["biasamp", "nonsense"]), EXIT_INPUT);
        assert_eq!(run(["biasamp", "scenario", "no-such-scenario"]), EXIT_INPUT);
    }
}
