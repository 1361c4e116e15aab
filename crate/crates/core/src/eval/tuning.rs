//! Grid searches for the dedup shingle size and threshold, and for the
//! clustering radius.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{f1_score, ratio};
use crate::clustering::{dbscan_matrix, ClusterLabel, ClusteringConfig, DistanceMatrix};
use crate::corpus::{unescape_field, LoadReport, SkippedLine};
use crate::dedup::{jaccard, shingles, DedupConfig};
use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};

/// Two texts and whether one is derived from the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupPair {
    pub text_a: String,
    pub text_b: String,
    pub derived: bool,
}

fn parse_derived(label: &str) -> std::result::Result<bool, String> {
    match label.trim().to_ascii_lowercase().as_str() {
        "derived" | "1" | "wholly_derived" | "partially_derived" => Ok(true),
        "not_derived" | "non_derived" | "0" => Ok(false),
        other => Err(format!("unknown pair label {other:?}")),
    }
}

/// Parses `label<TAB>textA<TAB>textB` lines; labels are `derived` /
/// `not_derived` (or `1` / `0`).
pub fn parse_pairs(raw: &str) -> LoadReport<DedupPair> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = if fields.len() != 3 {
            Err(format!("expected 3 tab-separated fields, found {}", fields.len()))
        } else {
            parse_derived(fields[0]).map(|derived| DedupPair {
                text_a: unescape_field(fields[1]),
                text_b: unescape_field(fields[2]),
                derived,
            })
        };
        match parsed {
            Ok(pair) => records.push(pair),
            Err(reason) => {
                log::warn!("skipping pair at line {}: {reason}", idx + 1);
                skipped.push(SkippedLine { line: idx + 1, reason });
            }
        }
    }
    LoadReport { records, skipped }
}

pub fn load_pairs(path: &Path) -> Result<LoadReport<DedupPair>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_pairs(&raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupGrid {
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
}

impl Default for DedupGrid {
    fn default() -> Self {
        DedupGrid {
            ns: (1..=5).collect(),
            thetas: (1..=19).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupCell {
    pub n: usize,
    pub theta: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupTuning {
    pub best: DedupCell,
    /// Every grid cell, ordered by `n` then `theta` as given in the grid.
    pub cells: Vec<DedupCell>,
}

impl DedupTuning {
    pub fn to_table(&self) -> String {
        let mut out = String::from("n\ttheta\tprecision\trecall\tf1\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{}\t{:.3}\t{:.4}\t{:.4}\t{:.4}",
                c.n, c.theta, c.precision, c.recall, c.f1
            );
        }
        let _ = writeln!(
            out,
            "best: n={} theta={:.3} f1={:.4}",
            self.best.n, self.best.theta, self.best.f1
        );
        out
    }
}

/// Scores the rule `jaccard ≥ theta ⇒ derived` on every grid cell.
///
/// The best cell maximizes F1 with derived as the positive class; ties go
/// to the smallest `n`, then the largest `theta`.
pub fn tune_dedup(pairs: &[DedupPair], grid: &DedupGrid, stopwords: &BTreeSet<String>) -> Result<DedupTuning> {
    if grid.ns.is_empty() || grid.thetas.is_empty() {
        return Err(Error::Config("dedup tuning grid is empty".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to tune on".into()));
    }
    if pairs.iter().all(|p| p.derived) || pairs.iter().all(|p| !p.derived) {
        log::warn!("all tuning pairs carry the same label; F1 is degenerate for one class");
    }
    for &n in &grid.ns {
        for &theta in &grid.thetas {
            DedupConfig::new(n, theta, BTreeSet::new())?;
        }
    }

    let cells: Vec<Vec<DedupCell>> = grid
        .ns
        .par_iter()
        .map(|&n| {
            let config = DedupConfig {
                n,
                theta: 1.0,
                stopwords: stopwords.clone(),
            };
            let scores: Vec<f64> = pairs
                .iter()
                .map(|p| jaccard(&shingles(&p.text_a, &config), &shingles(&p.text_b, &config)))
                .collect();
            grid.thetas
                .iter()
                .map(|&theta| {
                    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                    for (s, p) in scores.iter().zip(pairs) {
                        match (*s >= theta, p.derived) {
                            (true, true) => tp += 1,
                            (true, false) => fp += 1,
                            (false, true) => fn_ += 1,
                            (false, false) => {}
                        }
                    }
                    let precision = ratio(tp, tp + fp);
                    let recall = ratio(tp, tp + fn_);
                    DedupCell {
                        n,
                        theta,
                        precision,
                        recall,
                        f1: f1_score(precision, recall),
                    }
                })
                .collect()
        })
        .collect();
    let cells: Vec<DedupCell> = cells.into_iter().flatten().collect();
    let best = *cells
        .iter()
        .reduce(|best, c| {
            let better =
                c.f1 > best.f1 || (c.f1 == best.f1 && (c.n < best.n || (c.n == best.n && c.theta > best.theta)));
            if better {
                c
            } else {
                best
            }
        })
        .expect("non-empty grid");
    Ok(DedupTuning { best, cells })
}

/// A document with its gold event (story) id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedDoc {
    pub group: String,
    pub text: String,
}

/// Parses `group<TAB>text` lines.
pub fn parse_grouped(raw: &str) -> LoadReport<GroupedDoc> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((group, text)) if !group.trim().is_empty() => records.push(GroupedDoc {
                group: group.trim().to_string(),
                text: unescape_field(text),
            }),
            _ => {
                let reason = "expected group<TAB>text".to_string();
                log::warn!("skipping grouped document at line {}: {reason}", idx + 1);
                skipped.push(SkippedLine { line: idx + 1, reason });
            }
        }
    }
    LoadReport { records, skipped }
}

pub fn load_grouped(path: &Path) -> Result<LoadReport<GroupedDoc>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_grouped(&raw))
}

pub fn default_eps_grid() -> Vec<f64> {
    (0..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsCell {
    pub eps: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub clusters: usize,
    pub noise: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsTuning {
    pub best: EpsCell,
    pub cells: Vec<EpsCell>,
}

impl EpsTuning {
    pub fn to_table(&self) -> String {
        let mut out = String::from("eps\tprecision\trecall\tf1\tclusters\tnoise\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:.3}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
                c.eps, c.precision, c.recall, c.f1, c.clusters, c.noise
            );
        }
        let _ = writeln!(out, "best: eps={:.3} f1={:.4}", self.best.eps, self.best.f1);
        out
    }
}

/// Pairwise co-clustering counts `(tp, fp, fn)`: a pair is predicted
/// together when both points share a cluster (noise joins nothing) and is
/// gold-positive when both share a group.
pub fn co_clustering_counts<G: PartialEq>(labels: &[ClusterLabel], groups: &[G]) -> (usize, usize, usize) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let pred = matches!((labels[i].cluster(), labels[j].cluster()), (Some(a), Some(b)) if a == b);
            match (pred, groups[i] == groups[j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    (tp, fp, fn_)
}

/// Scores every radius in `grid` by pairwise co-clustering F1.
///
/// A radius of 0 admits no neighbor besides the point itself, so every
/// point is noise. Ties go to the smallest radius.
pub fn tune_eps_matrix<G: PartialEq + Sync>(
    matrix: &DistanceMatrix,
    groups: &[G],
    grid: &[f64],
    min_members: usize,
) -> Result<EpsTuning> {
    if grid.is_empty() {
        return Err(Error::Config("eps tuning grid is empty".into()));
    }
    if matrix.len() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.len(),
            actual: groups.len(),
        });
    }
    if let Some(bad) = grid.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(Error::Config(format!("eps grid value {bad} must be >= 0")));
    }
    ClusteringConfig { eps: 1.0, min_members }.validate()?;
    let cells: Vec<EpsCell> = grid
        .par_iter()
        .map(|&eps| {
            let labels = if eps == 0.0 {
                vec![ClusterLabel::Noise; matrix.len()]
            } else {
                dbscan_matrix(matrix, &ClusteringConfig { eps, min_members })
            };
            let (tp, fp, fn_) = co_clustering_counts(&labels, groups);
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let clusters: BTreeSet<usize> = labels.iter().filter_map(|l| l.cluster()).collect();
            EpsCell {
                eps,
                precision,
                recall,
                f1: f1_score(precision, recall),
                clusters: clusters.len(),
                noise: labels.iter().filter(|l| l.cluster().is_none()).count(),
            }
        })
        .collect();
    let best = *cells
        .iter()
        .reduce(|best, c| {
            if c.f1 > best.f1 || (c.f1 == best.f1 && c.eps < best.eps) {
                c
            } else {
                best
            }
        })
        .expect("non-empty grid");
    Ok(EpsTuning { best, cells })
}

pub fn tune_eps(
    docs: &[GroupedDoc],
    grid: &[f64],
    min_members: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<EpsTuning> {
    let vectors: Vec<_> = docs
        .par_iter()
        .enumerate()
        .map(|(i, d)| provider.embed(&i.to_string(), &d.text))
        .collect();
    let matrix = DistanceMatrix::from_vectors(&vectors)?;
    let groups: Vec<&str> = docs.iter().map(|d| d.group.as_str()).collect();
    tune_eps_matrix(&matrix, &groups, grid, min_members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashedBow;

    fn pair(a: &str, b: &str, derived: bool) -> DedupPair {
        DedupPair {
            text_a: a.into(),
            text_b: b.into(),
            derived,
        }
    }

    #[test]
    fn separable_pairs_pick_smallest_n_largest_theta() {
        let pairs = [
            pair(
                "storm floods the northern valley",
                "storm floods the northern valley",
                true,
            ),
            pair("parliament passes budget bill", "striker scores twice in final", false),
        ];
        let t = tune_dedup(&pairs, &DedupGrid::default(), &BTreeSet::new()).unwrap();
        assert_eq!(t.cells.len(), 5 * 19);
        assert!(t.cells.iter().all(|c| c.f1 == 1.0));
        assert_eq!(t.best.n, 1);
        assert_eq!(t.best.theta, 0.95);
    }

    #[test]
    fn single_pair_with_jaccard_point_four() {
        // Unigram sets {a b c d e f g} and {a b c d h i j}: 4 / 10.
        let pairs = [pair("a b c d e f g", "a b c d h i j", true)];
        let grid = DedupGrid {
            ns: vec![1],
            thetas: (1..=10).map(|k| k as f64 / 10.0).collect(),
        };
        let t = tune_dedup(&pairs, &grid, &BTreeSet::new()).unwrap();
        for c in &t.cells {
            let expected = if c.theta <= 0.4 { 1.0 } else { 0.0 };
            assert_eq!(c.f1, expected, "theta {}", c.theta);
        }
        assert_eq!(t.best.theta, 0.4);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let pairs = [pair("a", "a", true)];
        let grid = DedupGrid {
            ns: vec![],
            thetas: vec![0.5],
        };
        assert!(tune_dedup(&pairs, &grid, &BTreeSet::new()).is_err());
        assert!(tune_eps_matrix(&DistanceMatrix::from_fn(1, |_, _| 0.0), &[0], &[], 2).is_err());
    }

    #[test]
    fn pairs_file_format() {
        let r = parse_pairs("derived\ta b\ta b\nnot_derived\tx\ty\nbogus\tx\ty\n1\tonly two\n");
        assert_eq!(r.records.len(), 2);
        assert!(r.records[0].derived && !r.records[1].derived);
        assert_eq!(r.skipped.len(), 2);
    }

    #[test]
    fn identical_text_groups_have_a_plateau() {
        let mut docs = Vec::new();
        for _ in 0..3 {
            docs.push(GroupedDoc {
                group: "a".into(),
                text: "harbor cranes unload freighters at the dock".into(),
            });
            docs.push(GroupedDoc {
                group: "b".into(),
                text: "senators debate the ballot measure in parliament".into(),
            });
        }
        let t = tune_eps(&docs, &default_eps_grid(), 2, &HashedBow::default()).unwrap();
        let perfect: Vec<f64> = t.cells.iter().filter(|c| c.f1 == 1.0).map(|c| c.eps).collect();
        assert!(perfect.len() >= 10, "{perfect:?}");
        let zero = &t.cells[0];
        assert_eq!((zero.eps, zero.recall, zero.noise), (0.0, 0.0, 6));
    }

    #[test]
    fn three_groups_match_brute_force_counts() {
        // Points on a line: groups at 0, 10, 20 with spread 1.
        let xs: [f64; 9] = [0.0, 0.5, 1.0, 10.0, 10.5, 20.0, 20.5, 21.0, 5.0];
        let groups = [0, 0, 0, 1, 1, 2, 2, 2, 1];
        let matrix = DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs());
        let grid = [0.25, 0.5, 1.0, 5.0, 20.0];
        let t = tune_eps_matrix(&matrix, &groups, &grid, 2).unwrap();
        for cell in &t.cells {
            let labels = dbscan_matrix(
                &matrix,
                &ClusteringConfig {
                    eps: cell.eps,
                    min_members: 2,
                },
            );
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    if i >= j {
                        continue;
                    }
                    let same_pred = labels[i] != ClusterLabel::Noise && labels[i] == labels[j];
                    let same_gold = groups[i] == groups[j];
                    tp += (same_pred && same_gold) as usize;
                    fp += (same_pred && !same_gold) as usize;
                    fn_ += (!same_pred && same_gold) as usize;
                }
            }
            let p = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let r = if tp + fn_ == 0 {
                0.0
            } else {
                tp as f64 / (tp + fn_) as f64
            };
            assert!(
                (cell.precision - p).abs() < 1e-12 && (cell.recall - r).abs() < 1e-12,
                "{cell:?}"
            );
        }
        // Radii 0.5 and 1 both recover groups 0 and 2 and pair 10 / 10.5
        // while 5.0 stays noise; the tie goes to the smaller radius.
        let one = t.cells.iter().find(|c| c.eps == 1.0).unwrap();
        assert_eq!((one.clusters, one.noise), (3, 1));
        assert!((one.f1 - 0.875).abs() < 1e-12);
        assert_eq!(t.best.eps, 0.5);
        assert_eq!(t.best.f1, one.f1);
    }
}
