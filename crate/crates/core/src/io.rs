//! Reading indicator tables and base-correlation documents, writing tables
//! back out, and the JSON report format.
//!
//! Tables are delimiter-separated with a header row. Each column name has a
//! family prefix:
//!
//! | prefix         | meaning                              |
//! |----------------|--------------------------------------|
//! | `attr:`        | ground-truth attribute indicator     |
//! | `task:`        | ground-truth task indicator          |
//! | `pred_attr:`   | predicted attribute                  |
//! | `pred_task:`   | predicted task                       |
//! | `score_task:`  | task score, to be thresholded        |
//! | `score_attr:`  | attribute score, to be thresholded   |
//! | `weight`       | optional non-negative example weight |

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{BiasAmpResult, DeltaBaseline, MetricConfig, UndefinedPolicy};
use crate::resampling::IntervalEstimate;
use crate::scenarios::ScenarioBundle;
use crate::stats::{BaseCorrelations, BaseSource, CorrelationStats, IndicatorDataset, PredictionKind, PredictionSet, EPS_NUM};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Attr,
    Task,
    PredAttr,
    PredTask,
    ScoreAttr,
    ScoreTask,
    Weight,
}

impl Family {
    const PREFIXED: [(Family, &'static str); 6] = [
        (Family::Attr, "attr:"),
        (Family::Task, "task:"),
        (Family::PredAttr, "pred_attr:"),
        (Family::PredTask, "pred_task:"),
        (Family::ScoreAttr, "score_attr:"),
        (Family::ScoreTask, "score_task:"),
    ];

    fn parse(header: &str) -> Option<(Family, String)> {
        if header == "weight" {
            return Some((Family::Weight, String::new()));
        }
        Self::PREFIXED
            .iter()
            .find_map(|(f, p)| header.strip_prefix(p).map(|name| (*f, name.trim().to_string())))
    }
}

/// Contents of one table file. Families that have no columns are `None`.
#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub source: String,
    pub columns: Vec<String>,
    pub n_rows: usize,
    pub truth: Option<IndicatorDataset>,
    pub preds: Option<PredictionSet>,
    pub scores: Option<PredictionSet>,
}

impl LoadedTable {
    pub fn fingerprint(&self, role: &str) -> InputFingerprint {
        InputFingerprint {
            role: role.to_string(),
            source: self.source.clone(),
            n_rows: self.n_rows,
            columns: self.columns.clone(),
        }
    }

    pub fn require_truth(&self) -> Result<&IndicatorDataset> {
        self.truth
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("{}: no attr:/task: columns", self.source)))
    }

    pub fn require_preds(&self) -> Result<&PredictionSet> {
        self.preds
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("{}: no pred_attr:/pred_task: columns", self.source)))
    }

    pub fn require_scores(&self) -> Result<&PredictionSet> {
        self.scores
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("{}: no score_attr:/score_task: columns", self.source)))
    }
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("tab") => b'\t',
        _ => b',',
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a table; `.tsv` files are tab-separated, everything else uses commas.
pub fn load_table(path: impl AsRef<Path>) -> Result<LoadedTable> {
    let path = path.as_ref();
    read_table(open(path)?, delimiter_for(path), &path.display().to_string())
}

/// Parses a table from any reader. `source` labels error locations.
pub fn read_table<R: Read>(reader: R, delimiter: u8, source: &str) -> Result<LoadedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut layout = Vec::with_capacity(headers.len());
    let mut seen = HashSet::new();
    for (c, h) in headers.iter().enumerate() {
        let loc = || format!("{source}: header column {}", c + 1);
        let (family, name) = Family::parse(h).ok_or_else(|| Error::Parse {
            location: loc(),
            message: format!("unknown column `{h}`; expected attr:, task:, pred_attr:, pred_task:, score_attr:, score_task: or weight"),
        })?;
        if family != Family::Weight && name.is_empty() {
            return Err(Error::Parse {
                location: loc(),
                message: format!("column `{h}` has an empty name"),
            });
        }
        let key = format!("{}{}", Family::PREFIXED.iter().find(|p| p.0 == family).map_or("weight", |p| p.1), name);
        if !seen.insert(key.clone()) {
            return Err(Error::Parse {
                location: loc(),
                message: format!("duplicate column `{key}`"),
            });
        }
        layout.push((family, name));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    let mut n_rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                location: format!("{source}: row {}", r + 1),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let location = || format!("{source}: row {}, column `{}`", r + 1, headers[c]);
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                location: location(),
                message: format!("`{field}` is not a number"),
            })?;
            let ok = match layout[c].0 {
                Family::Weight => v.is_finite() && v >= 0.0,
                _ => (0.0..=1.0).contains(&v),
            };
            if !ok {
                return Err(Error::OutOfRange {
                    context: location(),
                    value: v,
                });
            }
            columns[c].push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyDataset);
    }

    let gather = |family: Family| -> Option<(Vec<String>, Matrix)> {
        let idx: Vec<usize> = (0..layout.len()).filter(|&c| layout[c].0 == family).collect();
        if idx.is_empty() {
            return None;
        }
        let names = idx.iter().map(|&c| layout[c].1.clone()).collect();
        Some((names, Matrix::from_fn(n_rows, idx.len(), |r, j| columns[idx[j]][r])))
    };
    let weights = layout
        .iter()
        .position(|(f, _)| *f == Family::Weight)
        .map(|c| columns[c].clone());

    let truth = match (gather(Family::Attr), gather(Family::Task)) {
        (None, None) => {
            if weights.is_some() {
                return Err(Error::Parse {
                    location: source.to_string(),
                    message: "a weight column needs ground-truth attr:/task: columns".into(),
                });
            }
            None
        }
        (attrs, tasks) => {
            let (an, am) = attrs.unwrap_or_else(|| (Vec::new(), Matrix::filled(n_rows, 0, 0.0)));
            let (tn, tm) = tasks.unwrap_or_else(|| (Vec::new(), Matrix::filled(n_rows, 0, 0.0)));
            Some(IndicatorDataset::new(an, tn, am, tm, weights)?)
        }
    };
    let preds = match (gather(Family::PredAttr), gather(Family::PredTask)) {
        (None, None) => None,
        (a, t) => Some(PredictionSet::new(a, t, None)?),
    };
    let scores = match (gather(Family::ScoreAttr), gather(Family::ScoreTask)) {
        (None, None) => None,
        (a, t) => Some(PredictionSet::new(a, t, Some(PredictionKind::Soft))?),
    };
    Ok(LoadedTable {
        source: source.to_string(),
        columns: headers,
        n_rows,
        truth,
        preds,
        scores,
    })
}

/// Checks that two loaded tables describe the same examples.
pub fn check_joined(a: &LoadedTable, b: &LoadedTable) -> Result<()> {
    if a.n_rows != b.n_rows {
        return Err(Error::Parse {
            location: format!("{} / {}", a.source, b.source),
            message: format!("row counts differ: {} vs {}", a.n_rows, b.n_rows),
        });
    }
    Ok(())
}

/// Writes the given families as one comma-separated table. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_table<W: Write>(
    writer: W,
    truth: Option<&IndicatorDataset>,
    preds: Option<&PredictionSet>,
    scores: Option<&PredictionSet>,
) -> Result<()> {
    let mut cols: Vec<(String, &Matrix, usize)> = Vec::new();
    fn push<'m>(cols: &mut Vec<(String, &'m Matrix, usize)>, prefix: &str, names: &[String], m: Option<&'m Matrix>) {
        if let Some(m) = m {
            for (j, n) in names.iter().enumerate() {
                cols.push((format!("{prefix}{n}"), m, j));
            }
        }
    }
    if let Some(t) = truth {
        push(&mut cols, "attr:", t.attribute_names(), Some(t.attrs()));
        push(&mut cols, "task:", t.task_names(), Some(t.tasks()));
    }
    if let Some(p) = preds {
        push(&mut cols, "pred_attr:", p.attribute_names(), p.attr_pred());
        push(&mut cols, "pred_task:", p.task_names(), p.task_pred());
    }
    if let Some(s) = scores {
        push(&mut cols, "score_attr:", s.attribute_names(), s.attr_pred());
        push(&mut cols, "score_task:", s.task_names(), s.task_pred());
    }
    let weights = truth.and_then(|t| t.weights());
    let n = cols
        .first()
        .map(|c| c.1.rows())
        .ok_or_else(|| Error::invalid("nothing to write"))?;
    if cols.iter().any(|c| c.1.rows() != n) {
        return Err(Error::invalid("tables written together must have the same number of rows"));
    }

    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = cols.iter().map(|c| c.0.clone()).collect();
    if weights.is_some() {
        header.push("weight".into());
    }
    wtr.write_record(&header)?;
    for r in 0..n {
        let mut row: Vec<String> = cols.iter().map(|(_, m, j)| format!("{}", m.at(r, *j))).collect();
        if let Some(w) = weights {
            row.push(format!("{}", w[r]));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "table output".into(),
        source,
    })?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Serialize)]
struct BundleManifest<'a> {
    format_version: &'a str,
    name: &'a str,
    description: &'a str,
    train: &'a str,
    test: &'a str,
    expected: &'a BTreeMap<String, crate::scenarios::Expectation>,
}

/// Writes `train.csv`, `test.csv` (truth and predictions) and
/// `scenario.json` into `dir`, returning the paths written.
pub fn export_bundle(bundle: &ScenarioBundle, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    let manifest = dir.join("scenario.json");
    write_table(create(&train)?, Some(&bundle.train), None, None)?;
    write_table(create(&test)?, Some(&bundle.test_truth), Some(&bundle.test_preds), None)?;
    serde_json::to_writer_pretty(
        create(&manifest)?,
        &BundleManifest {
            format_version: FORMAT_VERSION,
            name: &bundle.name,
            description: &bundle.description,
            train: "train.csv",
            test: "test.csv",
            expected: &bundle.expected,
        },
    )?;
    Ok(vec![train, test, manifest])
}

/// On-disk form of a base-correlation source. `p_joint` or one of the
/// conditionals must be present; any further ones are cross-checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseCorrelationsFile {
    pub source: BaseSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub attribute_names: Vec<String>,
    pub task_names: Vec<String>,
    pub p_attr: Vec<f64>,
    pub p_task: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_joint: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_attr_given_task: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_task_given_attr: Option<Vec<Vec<f64>>>,
}

impl From<&BaseCorrelations> for BaseCorrelationsFile {
    fn from(b: &BaseCorrelations) -> Self {
        Self {
            source: b.source,
            description: b.description.clone(),
            attribute_names: b.attribute_names.clone(),
            task_names: b.task_names.clone(),
            p_attr: b.stats.p_attr.clone(),
            p_task: b.stats.p_task.clone(),
            p_joint: Some(b.stats.p_joint.to_rows()),
            p_attr_given_task: None,
            p_task_given_attr: None,
        }
    }
}

fn to_matrix(rows: &[Vec<f64>], what: &str, na: usize, nt: usize) -> Result<Matrix> {
    let m = Matrix::from_rows(rows.to_vec()).ok_or_else(|| Error::invalid(format!("{what} has ragged rows")))?;
    if rows.len() != na {
        return Err(Error::dims(format!("{what} rows"), na, rows.len()));
    }
    if m.cols() != nt && na > 0 {
        return Err(Error::dims(format!("{what} columns"), nt, m.cols()));
    }
    if let Some(v) = m.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange {
            context: what.to_string(),
            value: *v,
        });
    }
    Ok(Matrix::from_fn(na, nt, |a, t| m.at(a, t)))
}

impl BaseCorrelationsFile {
    pub fn into_base(self) -> Result<BaseCorrelations> {
        let (na, nt) = (self.attribute_names.len(), self.task_names.len());
        if self.p_attr.len() != na {
            return Err(Error::dims("p_attr", na, self.p_attr.len()));
        }
        if self.p_task.len() != nt {
            return Err(Error::dims("p_task", nt, self.p_task.len()));
        }
        let joint = self.p_joint.as_deref().map(|r| to_matrix(r, "p_joint", na, nt)).transpose()?;
        let a_t = self
            .p_attr_given_task
            .as_deref()
            .map(|r| to_matrix(r, "p_attr_given_task", na, nt))
            .transpose()?;
        let t_a = self
            .p_task_given_attr
            .as_deref()
            .map(|r| to_matrix(r, "p_task_given_attr", na, nt))
            .transpose()?;
        let p_attr = &self.p_attr;
        let p_task = &self.p_task;
        let joint = match (joint, &a_t, &t_a) {
            (Some(j), _, _) => j,
            (None, Some(c), _) => Matrix::from_fn(na, nt, |a, t| c.at(a, t) * p_task[t]),
            (None, None, Some(c)) => Matrix::from_fn(na, nt, |a, t| c.at(a, t) * p_attr[a]),
            (None, None, None) => {
                return Err(Error::Missing(
                    "base correlations need p_joint, p_attr_given_task or p_task_given_attr".into(),
                ))
            }
        };
        let stats = CorrelationStats::from_probabilities(self.p_attr.clone(), self.p_task.clone(), joint)?;
        for (name, supplied, derived) in [
            ("p_attr_given_task", &a_t, &stats.p_attr_given_task),
            ("p_task_given_attr", &t_a, &stats.p_task_given_attr),
        ] {
            let Some(supplied) = supplied else { continue };
            for a in 0..na {
                for t in 0..nt {
                    let d = derived.at(a, t);
                    if d.is_finite() && (supplied.at(a, t) - d).abs() > EPS_NUM {
                        return Err(Error::invalid(format!(
                            "{name}[{a}][{t}] = {} disagrees with the joint and marginals ({d})",
                            supplied.at(a, t)
                        )));
                    }
                }
            }
        }
        if self.attribute_names.iter().chain(&self.task_names).any(|n| n.trim().is_empty()) {
            return Err(Error::invalid("empty name in base correlations"));
        }
        if self.attribute_names.iter().collect::<HashSet<_>>().len() != na
            || self.task_names.iter().collect::<HashSet<_>>().len() != nt
        {
            return Err(Error::invalid("duplicate names in base correlations"));
        }
        Ok(BaseCorrelations {
            attribute_names: self.attribute_names,
            task_names: self.task_names,
            stats,
            source: self.source,
            description: self.description,
        })
    }
}

pub fn load_base_correlations(path: impl AsRef<Path>) -> Result<BaseCorrelations> {
    let path = path.as_ref();
    let file: BaseCorrelationsFile = serde_json::from_reader(open(path)?).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    file.into_base()
}

pub fn write_base_correlations(path: impl AsRef<Path>, base: &BaseCorrelations) -> Result<()> {
    serde_json::to_writer_pretty(create(path.as_ref())?, &BaseCorrelationsFile::from(base))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFingerprint {
    pub role: String,
    pub source: String,
    pub n_rows: usize,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub undefined_policy: UndefinedPolicy,
    pub tie_epsilon: f64,
    pub delta_baseline: DeltaBaseline,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, serde_json::Value>,
}

impl From<&MetricConfig> for ConfigEcho {
    fn from(cfg: &MetricConfig) -> Self {
        Self {
            undefined_policy: cfg.undefined_policy,
            tie_epsilon: cfg.tie_epsilon,
            delta_baseline: cfg.delta_baseline,
            seed: None,
            options: BTreeMap::new(),
        }
    }
}

/// One reported metric. Amplification metrics carry their full
/// disaggregated result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub name: String,
    pub aggregate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disaggregated: Option<BiasAmpResult>,
}

impl From<BiasAmpResult> for MetricReport {
    fn from(r: BiasAmpResult) -> Self {
        Self {
            name: r.metric_kind.name().to_string(),
            aggregate: r.aggregate,
            disaggregated: Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedInterval {
    pub metric: String,
    #[serde(flatten)]
    pub interval: IntervalEstimate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportNotes {
    pub provenance: Vec<String>,
    pub cautions: Vec<String>,
}

/// Machine-readable output of every CLI command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub format_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    pub inputs: Vec<InputFingerprint>,
    pub metrics: Vec<MetricReport>,
    pub intervals: Vec<NamedInterval>,
    pub notes: ReportNotes,
    pub soft_attribute_truth: bool,
    /// Command-specific payload (statistics, thresholds, curves, scenario checks).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, serde_json::Value>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            command: command.to_string(),
            config: None,
            inputs: Vec::new(),
            metrics: Vec::new(),
            intervals: Vec::new(),
            notes: ReportNotes::default(),
            soft_attribute_truth: false,
            results: BTreeMap::new(),
        }
    }

    /// Records an input table and flags soft attribute ground truth.
    pub fn add_input(&mut self, role: &str, table: &LoadedTable) {
        self.inputs.push(table.fingerprint(role));
        if table.truth.as_ref().is_some_and(|t| !t.attrs_binary()) && !self.soft_attribute_truth {
            self.soft_attribute_truth = true;
            self.notes
                .cautions
                .push(format!("{} has non-binary attribute ground truth; probabilities are score-weighted", table.source));
        }
    }

    pub fn add_result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn read(s: &str) -> Result<LoadedTable> {
        read_table(s.as_bytes(), b',', "inline")
    }

    #[test]
    fn hand_file_counts() {
        let t = read("attr:woman,task:cook\n1,1\n1,0\n0,1\n0,0\n").unwrap();
        let s = t.truth.unwrap().stats().unwrap();
        assert_eq!(s.p_attr, vec![0.5]);
        assert_eq!(s.p_task, vec![0.5]);
        assert_eq!(s.p_joint.at(0, 0), 0.25);
        assert_eq!(s.p_attr_given_task.at(0, 0), 0.5);
        assert!(t.preds.is_none() && t.scores.is_none());
    }

    #[test]
    fn empty_data_section() {
        assert!(matches!(read("attr:a,task:t\n"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn predictions_only() {
        let t = read("pred_task:t,pred_attr:a\n1,0\n0,1\n").unwrap();
        assert!(t.truth.is_none());
        let p = t.preds.unwrap();
        assert_eq!(p.kind(), PredictionKind::Discrete);
        assert_eq!(p.task_names(), ["t"]);
    }

    #[test]
    fn scores_are_soft() {
        let t = read("score_task:t\n0.3\n0.9\n").unwrap();
        assert_eq!(t.scores.unwrap().kind(), PredictionKind::Soft);
    }

    #[test]
    fn error_locations() {
        let e = read("attr:a,task:t\n1,1\n0,1.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("row 2") && msg.contains("task:t"), "{msg}");
        assert!(matches!(read("attr:a,foo\n1,1\n"), Err(Error::Parse { .. })));
        assert!(matches!(read("attr:a,attr: a\n1,1\n"), Err(Error::Parse { .. })));
        assert!(matches!(read("attr:a,task:t\n1,x\n"), Err(Error::Parse { .. })));
        assert!(matches!(read("pred_task:t,weight\n1,1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn joined_row_counts() {
        let a = read("attr:a,task:t\n1,1\n0,1\n").unwrap();
        let b = read("pred_task:t\n1\n").unwrap();
        assert!(check_joined(&a, &b).is_err());
    }

    #[test]
    fn weights_and_values_round_trip() {
        let t = read("attr:a,task:t,pred_task:t,weight\n1,0.1,0.30000000000000004,2.5\n0,1,1,0\n").unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, t.truth.as_ref(), t.preds.as_ref(), None).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.truth, t.truth);
        assert_eq!(back.preds, t.preds);
    }

    #[test]
    fn bundle_export_reload_reproduces_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = MetricConfig::default();
        for bundle in scenarios::all() {
            let sub = dir.path().join(&bundle.name);
            export_bundle(&bundle, &sub).unwrap();
            let train = load_table(sub.join("train.csv")).unwrap();
            let test = load_table(sub.join("test.csv")).unwrap();
            let reloaded = ScenarioBundle {
                train: train.truth.unwrap(),
                test_truth: test.truth.clone().unwrap(),
                test_preds: test.preds.unwrap(),
                ..bundle.clone()
            };
            for kind in [crate::MetricKind::Mals, crate::MetricKind::At, crate::MetricKind::Ta] {
                let a = bundle.evaluate(kind, &cfg).unwrap();
                let b = reloaded.evaluate(kind, &cfg).unwrap();
                assert_eq!(a.aggregate.to_bits(), b.aggregate.to_bits(), "{} {kind:?}", bundle.name);
            }
        }
    }

    fn tilt_file(eps: f64) -> BaseCorrelationsFile {
        BaseCorrelationsFile {
            source: BaseSource::UserSupplied,
            description: Some("equal pronoun rates".into()),
            attribute_names: vec!["he".into(), "she".into()],
            task_names: vec!["occupation".into()],
            p_attr: vec![0.5, 0.5],
            p_task: vec![0.5],
            p_joint: None,
            p_attr_given_task: Some(vec![vec![0.5 + eps], vec![0.5 - eps]]),
            p_task_given_attr: None,
        }
    }

    #[test]
    fn tiny_tilt_sets_direction() {
        use crate::metrics::{biasamp_directional, biasamp_mals, Direction};
        let base = tilt_file(1e-7).into_base().unwrap();
        assert!((base.stats.p_attr_given_task.at(0, 0) - (0.5 + 1e-7)).abs() < 1e-15);
        let truth = IndicatorDataset::from_rows(
            &["he", "she"],
            &["occupation"],
            &[(vec![1.0, 0.0], vec![1.0]), (vec![0.0, 1.0], vec![1.0]), (vec![0.0, 1.0], vec![0.0])],
        )
        .unwrap();
        let preds = PredictionSet::perfect(&truth);
        let cfg = MetricConfig::default();
        let r = biasamp_directional(Direction::AToT, &base, &truth, &preds, &cfg).unwrap();
        assert_eq!(r.y.to_rows(), vec![vec![true], vec![false]]);
        let m = biasamp_mals(&base, &preds, &cfg).unwrap();
        assert_eq!(m.y.to_rows(), vec![vec![true], vec![false]]);
    }

    #[test]
    fn base_file_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("base.json");
        let base = tilt_file(0.0).into_base().unwrap();
        write_base_correlations(&path, &base).unwrap();
        assert_eq!(load_base_correlations(&path).unwrap(), base);

        let mut bad = BaseCorrelationsFile::from(&base);
        bad.p_joint = Some(vec![vec![0.35], vec![0.25]]);
        bad.p_attr_given_task = Some(vec![vec![0.5], vec![0.5]]);
        assert!(bad.into_base().is_err());

        let mut over = BaseCorrelationsFile::from(&base);
        over.p_joint = Some(vec![vec![0.6], vec![0.25]]);
        assert!(over.into_base().is_err());

        let mut range = BaseCorrelationsFile::from(&base);
        range.p_attr[0] = 1.2;
        assert!(range.into_base().is_err());
    }

    #[test]
    fn report_flags_soft_attribute_truth() {
        let t = read("attr:a,task:t\n0.4,1\n1,0\n").unwrap();
        let mut doc = ReportDocument::new("stats");
        doc.add_input("train", &t);
        assert!(doc.soft_attribute_truth);
        let json: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        assert_eq!(json["format_version"], FORMAT_VERSION);
    }
}
