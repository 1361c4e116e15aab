//! Baseline-versus-full comparison on a labeled corpus.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{mcnemar, score, EvalReport, McNemarResult};
use crate::corpus::LabeledDoc;
use crate::error::{Error, Result};
use crate::features::lexicon::{shipped, Lexicon};
use crate::features::tfidf::DEFAULT_MIN_DF;
use crate::features::{FamilyFlags, FeatureConfig};
use crate::model::{train_model, Model, StopReason, TrainOptions, DEFAULT_L2_LAMBDA};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Index at or above which a document is predicted as propaganda.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub test_fraction: f64,
    pub l2_lambda: f64,
    /// When set, `l2_lambda` is replaced by the value with the best mean
    /// F1 under stratified k-fold cross-validation on the training split.
    pub lambda_grid: Option<Vec<f64>>,
    pub cv_folds: usize,
    pub min_df: usize,
    pub full_features: FamilyFlags,
    pub lexicons: Vec<Lexicon>,
    pub continuity_correction: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            test_fraction: DEFAULT_TEST_FRACTION,
            l2_lambda: DEFAULT_L2_LAMBDA,
            lambda_grid: None,
            cv_folds: 5,
            min_df: DEFAULT_MIN_DF,
            full_features: FamilyFlags::ALL,
            lexicons: shipped::default_set(),
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded stratified split. Each class is shuffled separately and
/// contributes `round(test_fraction · class size)` documents to the test
/// set; both index lists are returned in ascending order.
pub fn stratified_split(labels: &[bool], test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(Error::DegenerateSplit(format!(
                "class {} has {} documents, leaving {} for test",
                if class { "propaganda" } else { "non-propaganda" },
                idx.len(),
                n_test
            )));
        }
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::DegenerateSplit(format!(
                "{} documents of one class cannot fill {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[k % folds].push(i);
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCell {
    pub l2_lambda: f64,
    pub mean_f1: f64,
}

/// Stratified k-fold selection of the regularization strength. Ties go to
/// the larger value.
pub fn select_lambda(
    docs: &[&str],
    labels: &[bool],
    grid: &[f64],
    folds: usize,
    seed: u64,
    features: FeatureConfig,
    lexicons: &[Lexicon],
) -> Result<(f64, Vec<LambdaCell>)> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    let folds = stratified_folds(labels, folds, seed)?;
    let mut cells = Vec::with_capacity(grid.len());
    for &l2_lambda in grid {
        let mut total = 0.0;
        for held_out in &folds {
            let train: Vec<usize> = (0..docs.len()).filter(|i| held_out.binary_search(i).is_err()).collect();
            let train_docs: Vec<&str> = train.iter().map(|&i| docs[i]).collect();
            let train_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let (model, _) = train_model(
                &train_docs,
                &train_labels,
                features,
                lexicons.to_vec(),
                &TrainOptions::with_lambda(l2_lambda),
            )?;
            let pred = predict(&model, held_out.iter().map(|&i| docs[i]))?;
            let gold: Vec<bool> = held_out.iter().map(|&i| labels[i]).collect();
            total += score(&pred, &gold)?.f1;
        }
        cells.push(LambdaCell {
            l2_lambda,
            mean_f1: total / folds.len() as f64,
        });
    }
    let best = cells
        .iter()
        .reduce(|b, c| {
            if c.mean_f1 > b.mean_f1 || (c.mean_f1 == b.mean_f1 && c.l2_lambda > b.l2_lambda) {
                c
            } else {
                b
            }
        })
        .expect("non-empty grid");
    Ok((best.l2_lambda, cells))
}

fn predict<'a>(model: &Model, docs: impl Iterator<Item = &'a str>) -> Result<Vec<bool>> {
    docs.map(|d| model.predict_text(d).map(|p| p >= DECISION_THRESHOLD))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub features: String,
    pub width: usize,
    pub iterations: usize,
    pub converged: bool,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub test_fraction: f64,
    pub l2_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_selection: Option<Vec<LambdaCell>>,
    pub n_train: usize,
    pub n_test: usize,
    pub baseline: SystemReport,
    pub full: SystemReport,
    /// System A is the full model, system B the baseline.
    pub mcnemar: McNemarResult,
}

impl ExperimentReport {
    pub fn f1_gain(&self) -> f64 {
        self.full.report.f1 - self.baseline.report.f1
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {}  train {}  test {}  l2 {}",
            self.seed, self.n_train, self.n_test, self.l2_lambda
        );
        let _ = writeln!(out, "system\tfeatures\tprecision\trecall\tf1\ttp\tfp\tfn\ttn");
        for (name, s) in [("baseline", &self.baseline), ("full", &self.full)] {
            let r = &s.report;
            let _ = writeln!(
                out,
                "{name}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}",
                s.features, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_, r.tn
            );
        }
        let m = &self.mcnemar;
        let _ = writeln!(
            out,
            "f1 gain {:+.4}  mcnemar b={} c={} statistic={:.4} p={:.4}",
            self.f1_gain(),
            m.b,
            m.c,
            m.statistic,
            m.p_value
        );
        out
    }
}

fn train_and_score(
    train_docs: &[&str],
    train_labels: &[bool],
    test_docs: &[&str],
    test_labels: &[bool],
    features: FeatureConfig,
    config: &ExperimentConfig,
    l2_lambda: f64,
) -> Result<(SystemReport, Vec<bool>)> {
    let (model, fit) = train_model(
        train_docs,
        train_labels,
        features,
        config.lexicons.clone(),
        &TrainOptions::with_lambda(l2_lambda),
    )?;
    let pred = predict(&model, test_docs.iter().copied())?;
    let report = score(&pred, test_labels)?;
    Ok((
        SystemReport {
            features: features.flags.to_string(),
            width: model.width(),
            iterations: fit.iterations,
            converged: fit.stop == StopReason::Converged,
            report,
        },
        pred,
    ))
}

/// Trains the word n-gram baseline and the full model on the same split
/// and compares them on the held-out documents.
pub fn run_experiment(corpus: &[LabeledDoc], config: &ExperimentConfig) -> Result<ExperimentReport> {
    let labels: Vec<bool> = corpus.iter().map(|d| d.label.is_propaganda()).collect();
    let split = stratified_split(&labels, config.test_fraction, config.seed)?;
    let pick_docs = |idx: &[usize]| idx.iter().map(|&i| corpus[i].text.as_str()).collect::<Vec<_>>();
    let pick_labels = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let (train_docs, train_labels) = (pick_docs(&split.train), pick_labels(&split.train));
    let (test_docs, test_labels) = (pick_docs(&split.test), pick_labels(&split.test));

    let full_features = FeatureConfig {
        flags: config.full_features,
        min_df: config.min_df,
    };
    let (l2_lambda, lambda_selection) = match &config.lambda_grid {
        None => (config.l2_lambda, None),
        Some(grid) => {
            let (best, cells) = select_lambda(
                &train_docs,
                &train_labels,
                grid,
                config.cv_folds,
                config.seed,
                full_features,
                &config.lexicons,
            )?;
            (best, Some(cells))
        }
    };

    let baseline_features = FeatureConfig {
        flags: FamilyFlags::NGRAMS_ONLY,
        min_df: config.min_df,
    };
    let (baseline, baseline_pred) = train_and_score(
        &train_docs,
        &train_labels,
        &test_docs,
        &test_labels,
        baseline_features,
        config,
        l2_lambda,
    )?;
    let (full, full_pred) = train_and_score(
        &train_docs,
        &train_labels,
        &test_docs,
        &test_labels,
        full_features,
        config,
        l2_lambda,
    )?;
    let mcnemar = mcnemar(&full_pred, &baseline_pred, &test_labels, config.continuity_correction)?;
    Ok(ExperimentReport {
        seed: config.seed,
        test_fraction: config.test_fraction,
        l2_lambda,
        lambda_selection,
        n_train: split.train.len(),
        n_test: split.test.len(),
        baseline,
        full,
        mcnemar,
    })
}
