//! Near-duplicate removal inside an event.
//!
//! Texts are case-folded, split on Unicode word boundaries and stripped of
//! stopwords; the remaining tokens form a set of contiguous word n-grams.
//! Two articles are near-duplicates when the Jaccard coefficient of their
//! n-gram sets reaches `theta`. Duplicate groups are the connected
//! components of that relation, and each group keeps one representative:
//! the earliest published article, ties broken by the smallest id.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::corpus::Article;
use crate::error::{Error, Result};
use crate::features::word_tokens;

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_THETA: f64 = 0.5;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Parses a stopword list: one entry per line, `#` comments ignored.
pub fn parse_word_list(raw: &str) -> BTreeSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOPWORDS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupConfig {
    pub n: usize,
    pub theta: f64,
    pub stopwords: BTreeSet<String>,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            n: DEFAULT_N,
            theta: DEFAULT_THETA,
            stopwords: default_stopwords(),
        }
    }
}

impl DedupConfig {
    pub fn new(n: usize, theta: f64, stopwords: BTreeSet<String>) -> Result<Self> {
        let config = DedupConfig { n, theta, stopwords };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("dedup.n must be >= 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!(
                "dedup.theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Set of word n-grams (tokens joined by a single space).
pub fn shingles(text: &str, config: &DedupConfig) -> BTreeSet<String> {
    let tokens: Vec<String> = word_tokens(text)
        .into_iter()
        .filter(|t| !config.stopwords.contains(t))
        .collect();
    if tokens.len() < config.n {
        return BTreeSet::new();
    }
    tokens.windows(config.n).map(|w| w.join(" ")).collect()
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets defined as 0.0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupOutcome {
    /// Non-duplicates plus one representative per group, in input order.
    pub kept: Vec<Article>,
    /// Each group's ids sorted; groups ordered by their first input position.
    pub dup_groups: Vec<Vec<String>>,
}

impl DedupOutcome {
    pub fn removed(&self) -> usize {
        self.dup_groups.iter().map(|g| g.len() - 1).sum()
    }
}

pub fn dedup_event(articles: &[Article], config: &DedupConfig) -> DedupOutcome {
    let sets: Vec<BTreeSet<String>> = articles.par_iter().map(|a| shingles(&a.text, config)).collect();
    let n = articles.len();
    let edges: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let sets = &sets;
            (i + 1..n)
                .filter(move |&j| jaccard(&sets[i], &sets[j]) >= config.theta)
                .map(move |j| (i, j))
        })
        .collect();

    let mut components = DisjointSet::new(n);
    for (i, j) in edges {
        components.union(i, j);
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = std::collections::HashMap::new();
    for i in 0..n {
        let root = components.find(i);
        let slot = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }

    let mut keep = vec![true; n];
    let mut dup_groups = Vec::new();
    for group in groups.iter().filter(|g| g.len() >= 2) {
        let rep = *group
            .iter()
            .min_by(|&&a, &&b| {
                articles[a]
                    .published_at
                    .cmp(&articles[b].published_at)
                    .then_with(|| articles[a].id.cmp(&articles[b].id))
            })
            .expect("non-empty group");
        for &i in group {
            keep[i] = i == rep;
        }
        let mut ids: Vec<String> = group.iter().map(|&i| articles[i].id.clone()).collect();
        ids.sort();
        dup_groups.push(ids);
    }

    let kept = articles
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(a, _)| a.clone())
        .collect();
    DedupOutcome { kept, dup_groups }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
