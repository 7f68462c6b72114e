//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use biasamp::calibration::{apply_threshold, calibrate_threshold};
use biasamp::io::{load_table, BaseCorrelationsFile};
use biasamp::metrics::{
    accuracy_difference, delta_pair, fpr_difference, mean_subgroup_accuracy, tpr_difference, GroupPair,
    SubgroupGrouping,
};
use biasamp::resampling::bootstrap_ci;
use biasamp::scenarios::{
    differential_check, rate_sweep_grid, rate_sweep, masking_fixture, shortcoming1_three_group,
    shortcoming1_two_group, shortcoming2_imbalanced, MaskLevel, TwoGroupVariant,
};
use biasamp::{
    biasamp_directional, BaseSource, Direction, IndicatorDataset, Matrix, MetricConfig, MetricKind, MetricSpec,
    PredictionSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, cond: bool, what: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(what.as_ref());
        if !cond {
            self.detail.push_str(" [x]");
            self.ok = false;
        }
    }

    fn close(&mut self, actual: f64, expected: f64, tol: f64, what: &str) {
        self.require(
            (actual - expected).abs() <= tol,
            format!("{what} = {actual:.6} (want {expected} ± {tol:e})"),
        );
    }

    fn within(&mut self, elapsed: Duration, limit: Duration) {
        self.require(elapsed < limit, format!("runtime {elapsed:.2?} < {limit:?}"));
    }
}

fn agg(b: &biasamp::scenarios::ScenarioBundle, kind: MetricKind) -> f64 {
    b.evaluate(kind, &MetricConfig::default()).expect("defined").aggregate
}

fn criterion_1() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let b = shortcoming1_three_group();
    let (mals, at, ta) = (agg(&b, MetricKind::Mals), agg(&b, MetricKind::At), agg(&b, MetricKind::Ta));
    let elapsed = start.elapsed();
    c.require(mals == 0.0, format!("MALS = {mals} (want exactly 0)"));
    c.close(at, 0.1778, 1e-4, "A→T");
    c.close(ta, 0.0, 1e-9, "T→A");
    c.within(elapsed, Duration::from_secs(1));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::new();
    let deflate = shortcoming1_two_group(TwoGroupVariant::DeflateA2);
    let inflate = shortcoming1_two_group(TwoGroupVariant::InflateA1);
    let d1 = delta_pair(&deflate.base(), &deflate.test_preds, 0, 0).unwrap();
    let d2 = delta_pair(&inflate.base(), &inflate.test_preds, 0, 0).unwrap();
    c.close(d1, 0.2, 1e-9, "Δ_A1 deflate");
    // 0.033 is the two-decimal rounding of 50/60 − 40/50 = 1/30
    c.close(d2, 1.0 / 30.0, 1e-9, "Δ_A1 inflate vs 1/30 (≈ 0.033)");
    let (a1, a2) = (agg(&deflate, MetricKind::At), agg(&inflate, MetricKind::At));
    c.require((a1 - a2).abs() <= 1e-9, format!("A→T deflate {a1:.6} == inflate {a2:.6}"));
    c
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    let b = shortcoming2_imbalanced();
    c.close(agg(&b, MetricKind::Mals), -0.6, 1e-9, "MALS");
    c.close(agg(&b, MetricKind::At), 0.3333, 1e-4, "A→T");
    c.close(agg(&b, MetricKind::Ta), 0.0, 1e-9, "T→A");
    let r = b.evaluate(MetricKind::At, &MetricConfig::default()).unwrap();
    c.require(
        *r.y.get(1, 0) && !*r.y.get(0, 0),
        "y selects (A2, T) and not (A1, T)",
    );
    c
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let grid = rate_sweep_grid();
    let t = rate_sweep(&grid).unwrap();
    let v = |m: &str| &t.values_per_metric[m];
    let k_star = 30; // x = 0.75
    for m in ["accuracy_difference", "mean_subgroup_accuracy"] {
        let vals = v(m);
        let sym = (k_star - 10..=40).all(|k| (vals[k] - vals[2 * k_star - k]).abs() <= 1e-9);
        c.require(sym, format!("{m} symmetric about 0.75"));
    }
    c.require(v("fpr_difference")[..=k_star].iter().all(|&x| x == 0.0), "FPR diff ≡ 0 for x ≤ 0.75");
    c.require(v("tpr_difference")[k_star..].iter().all(|&x| x == 0.0), "TPR diff ≡ 0 for x ≥ 0.75");
    let at = v("biasamp_at");
    c.require(at.windows(2).all(|w| w[1] > w[0]), "A→T strictly increasing");
    c.require(
        at[k_star] == 0.0 && at[k_star - 1] < 0.0 && at[k_star + 1] > 0.0,
        "A→T crosses zero at 0.75",
    );
    c
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let r = differential_check(1000, 20240601, 1e-12);
    let elapsed = start.elapsed();
    c.require(
        r.passed(),
        format!(
            "{} comparisons, {} mismatches, max |diff| {:e}",
            r.comparisons,
            r.mismatches.len(),
            r.max_abs_diff
        ),
    );
    c.within(elapsed, Duration::from_secs(30));
    c
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..500 {
        let n = rng.random_range(1..=300);
        let mut scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        let n = scores.len();
        let p: f64 = rng.random();
        let choice = calibrate_threshold(&scores, p).unwrap();
        let m = Matrix::from_fn(n, 1, |r, _| scores[r]);
        let rate = apply_threshold(&m, choice.threshold).iter().sum::<f64>() / n as f64;
        worst = worst.max((rate - p).abs() * n as f64);
        ok &= (rate - p).abs() <= 1.0 / n as f64 + 1e-12;
    }
    c.require(ok, format!("500 random vectors, worst |rate − p|·N = {worst:.3} ≤ 1"));
    let scores = [0.9, 0.2, 0.5, 0.7];
    let m = Matrix::from_fn(4, 1, |r, _| scores[r]);
    for p in [0.0, 1.0] {
        let thr = calibrate_threshold(&scores, p).unwrap().threshold;
        let rate = apply_threshold(&m, thr).iter().sum::<f64>() / 4.0;
        c.require(rate == p, format!("p = {p} achieved exactly"));
    }
    c
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|_| (vec![1.0], vec![0.0])).collect();
    let truth = IndicatorDataset::from_rows(&["a"], &["t"], &rows).unwrap();
    let pred = Matrix::from_fn(n, 1, |_, _| if rng.random_bool(0.3) { 1.0 } else { 0.0 });
    let preds = PredictionSet::for_dataset(&truth, None, Some(pred.clone())).unwrap();
    let base = BaseCorrelationsFile {
        source: BaseSource::UserSupplied,
        description: None,
        attribute_names: vec!["a".into()],
        task_names: vec!["t".into()],
        p_attr: vec![0.5],
        p_task: vec![0.5],
        p_joint: Some(vec![vec![0.3]]),
        p_attr_given_task: None,
        p_task_given_attr: None,
    }
    .into_base()
    .unwrap();
    let spec = MetricSpec::BiasAmp { kind: MetricKind::At };
    let cfg = MetricConfig::default();
    let run = |seed| bootstrap_ci(&truth, &preds, &base, &spec, &cfg, 1000, 0.95, seed).unwrap();
    let (a, b) = (run(42), run(42));
    c.require(
        a.lower.to_bits() == b.lower.to_bits() && a.upper.to_bits() == b.upper.to_bits(),
        "same seed, bit-identical interval",
    );
    let p_hat = pred.iter().sum::<f64>() / n as f64;
    let point = biasamp_directional(Direction::AToT, &base, &truth, &preds, &cfg).unwrap().aggregate;
    c.close(point, p_hat, 1e-12, "point estimate equals sample mean");
    let analytic = 2.0 * 1.96 * (p_hat * (1.0 - p_hat)).sqrt() / (n as f64).sqrt();
    let ratio = a.width() / analytic;
    c.require(
        (ratio - 1.0).abs() <= 0.15,
        format!("width {:.5} vs analytic {analytic:.5} (ratio {ratio:.3})", a.width()),
    );
    c
}

fn criterion_8() -> Check {
    let mut c = Check::new();
    let orig = masking_fixture(MaskLevel::Original);
    let full = masking_fixture(MaskLevel::FullMask);
    let (ao, af) = (agg(&orig, MetricKind::At), agg(&full, MetricKind::At));
    let (to, tf) = (agg(&orig, MetricKind::Ta), agg(&full, MetricKind::Ta));
    c.require(ao > af, format!("A→T original {ao:.4} > full mask {af:.4}"));
    c.require(to < tf, format!("T→A original {to:.4} < full mask {tf:.4}"));
    c
}

const USER_FILE: &str = "\
attr:female,attr:male,task:smiling,task:glasses,pred_attr:female,pred_attr:male,pred_task:smiling,pred_task:glasses,score_task:smiling,score_task:glasses
1,0,1,0,1,0,1,0,0.91,0.12
1,0,1,1,1,0,1,0,0.77,0.41
1,0,0,0,1,0,1,0,0.63,0.08
1,0,0,1,0,1,0,1,0.22,0.85
0,1,1,0,0,1,1,0,0.58,0.30
0,1,0,1,0,1,0,1,0.35,0.93
0,1,0,0,0,1,0,0,0.14,0.27
0,1,1,1,1,0,0,1,0.47,0.66
1,0,0,0,1,0,0,0,0.29,0.19
0,1,0,1,0,1,0,1,0.18,0.71
";

fn criterion_9() -> Check {
    let mut c = Check::new();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("user.csv");
    std::fs::write(&path, USER_FILE).unwrap();
    let table = load_table(&path).unwrap();
    let truth = table.truth.clone().unwrap();
    let preds = table.preds.clone().unwrap();
    let scores = table.scores.clone().unwrap();
    let base = biasamp::BaseCorrelations::from_dataset(&truth, BaseSource::EmpiricalTest).unwrap();
    let cfg = MetricConfig::default();
    let mut values = vec![("biasamp_mals", biasamp::biasamp_mals(&base, &preds, &cfg).map(|r| r.aggregate))];
    for (name, d) in [("biasamp_at", Direction::AToT), ("biasamp_ta", Direction::TToA)] {
        values.push((name, biasamp_directional(d, &base, &truth, &preds, &cfg).map(|r| r.aggregate)));
    }
    let g = GroupPair::new(0, 1, 0);
    values.push(("fpr_difference", fpr_difference(&truth, &preds, g)));
    values.push(("tpr_difference", tpr_difference(&truth, &preds, g)));
    values.push(("accuracy_difference", accuracy_difference(&truth, &preds, g)));
    values.push((
        "mean_subgroup_accuracy",
        mean_subgroup_accuracy(&truth, &preds, 0, &[0, 1], SubgroupGrouping::Attribute, cfg.undefined_policy),
    ));
    let all_finite = values.iter().all(|(_, v)| v.as_ref().is_ok_and(|x| x.is_finite()));
    c.require(all_finite, format!("{} metrics computed from a user CSV", values.len()));
    let thr = calibrate_threshold(&scores.task_pred().unwrap().column(0), 0.4);
    c.require(thr.is_ok(), "score columns calibrate");

    let status = std::process::Command::new(env!("CARGO_BIN_EXE_biasamp"))
        .args(["biasamp", "--metric", "mals,at,ta", "--acknowledge-attribute-prediction", "--base-from-test"])
        .arg("--test-truth")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("report.json"))
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    c.require(status.success(), "CLI report on the same file exits 0");
    c
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 shortcoming-1 three groups", criterion_1),
        ("2 shortcoming-1 two groups", criterion_2),
        ("3 shortcoming-2 imbalance", criterion_3),
        ("4 threshold sweep shapes", criterion_4),
        ("5 differential oracle", criterion_5),
        ("6 calibration rate", criterion_6),
        ("7 bootstrap", criterion_7),
        ("8 masking ordering", criterion_8),
        ("9 user-supplied predictions", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let c = f();
        println!("{} criterion {name}: {}", if c.ok { "PASS" } else { "FAIL" }, c.detail);
        failed += usize::from(!c.ok);
    }
    println!(
        "NOTE criterion 9: large-dataset results (image captioning, coreference, face attributes, recidivism) \
         need external data and models and are not reproduced here"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
