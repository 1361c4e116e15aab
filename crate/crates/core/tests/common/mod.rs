#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use newswatch::clustering::ClusterLabel;
use newswatch::config::Config;
use newswatch::corpus::{load_articles, ArticleFormat};
use newswatch::features::lexicon::shipped;
use newswatch::features::FeatureConfig;
use newswatch::model::{save_model, train_model, Model, TrainOptions};
use newswatch::service::RunStore;
use newswatch::synthetic::{generate, SyntheticConfig};

pub mod schema;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_window_end() -> DateTime<Utc> {
    "2024-05-02T00:00:00Z".parse().unwrap()
}

/// Small model trained on the planted corpus.
pub fn small_model() -> Model {
    let docs = generate(&SyntheticConfig {
        n_docs: 300,
        seed: 11,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let labels: Vec<bool> = docs.iter().map(|d| d.label.is_propaganda()).collect();
    train_model(
        &texts,
        &labels,
        FeatureConfig::default(),
        shipped::default_set(),
        &TrainOptions::default(),
    )
    .unwrap()
    .0
}

/// A data directory holding the fixture articles and a trained model.
pub fn fixture_store(root: &Path, model: &Model) -> Config {
    let config = Config {
        data_dir: root.to_path_buf(),
        ..Config::default()
    };
    let articles = load_articles(&fixture("articles.jsonl"), ArticleFormat::Jsonl).unwrap();
    assert!(articles.skipped.is_empty());
    RunStore::new(root).ingest(&articles.records).unwrap();
    save_model(model, &config.model_path()).unwrap();
    config
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Reference DBSCAN: explicit neighborhoods, core points, and the
/// density-connectivity closure computed as a fixpoint. Border points go to
/// the lowest-indexed core neighbor's cluster; clusters are numbered by the
/// order in which their lowest-indexed core point appears.
pub fn brute_force_dbscan(
    n: usize,
    dist: impl Fn(usize, usize) -> f64,
    eps: f64,
    min_members: usize,
) -> Vec<ClusterLabel> {
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(i, j) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_members).collect();

    // Component id of each core point: smallest core index it is density
    // connected to, iterated until nothing changes.
    let mut comp: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !core[i] {
                continue;
            }
            for &j in &neighbors[i] {
                if core[j] && comp[j] < comp[i] {
                    comp[i] = comp[j];
                    changed = true;
                }
                if core[j] && comp[i] < comp[j] {
                    comp[j] = comp[i];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // DBSCAN expanding in ascending index order reaches a border point first
    // from the cluster that is seeded earliest among those touching it.
    let roots: BTreeSet<usize> = (0..n).filter(|&i| core[i]).map(|i| comp[i]).collect();
    let ordinal: BTreeMap<usize, usize> = roots.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    (0..n)
        .map(|i| {
            if core[i] {
                ClusterLabel::Cluster(ordinal[&comp[i]])
            } else {
                neighbors[i]
                    .iter()
                    .filter(|&&j| core[j])
                    .map(|&j| ordinal[&comp[j]])
                    .min()
                    .map_or(ClusterLabel::Noise, ClusterLabel::Cluster)
            }
        })
        .collect()
}

/// Partition as a set of member sets plus the noise set.
pub fn partition(labels: &[ClusterLabel]) -> (BTreeSet<BTreeSet<usize>>, BTreeSet<usize>) {
    let mut clusters: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut noise = BTreeSet::new();
    for (i, l) in labels.iter().enumerate() {
        match l.cluster() {
            Some(c) => {
                clusters.entry(c).or_default().insert(i);
            }
            None => {
                noise.insert(i);
            }
        }
    }
    (clusters.into_values().collect(), noise)
}

/// Syllables by a separate route: split the lowercased letters on every
/// non-vowel and count the non-empty pieces.
pub fn naive_syllables(word: &str) -> usize {
    let letters: String = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let vowels = "aeiouy";
    let mut groups = letters
        .split(|c: char| !vowels.contains(c))
        .filter(|g| !g.is_empty())
        .count();
    let bytes: Vec<char> = letters.chars().collect();
    let n = bytes.len();
    let ends_in_lone_e = n >= 2 && bytes[n - 1] == 'e' && !vowels.contains(bytes[n - 2]);
    let consonant_le = n >= 3 && bytes[n - 2] == 'l' && !vowels.contains(bytes[n - 3]);
    if groups > 1 && ends_in_lone_e && !consonant_le {
        groups -= 1;
    }
    groups.max(1)
}
