//! DBSCAN event identification.
//!
//! The ε-neighborhood of a point includes the point itself and uses
//! `distance <= eps`, so with `min_members = 2` a point is core as soon as it
//! has one other point within ε. Points are scanned in input order; a border
//! point reachable from several clusters joins the first cluster that
//! reaches it.
//!
//! Distances are computed up front into a full `n × n` matrix (rows in
//! parallel). That is O(n²) time and memory, which is fine for daily batches
//! of up to ~10⁴ articles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Batch;
use crate::embedding::{cosine_distance, DocVector};
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 0.55;
pub const DEFAULT_MIN_MEMBERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub eps: f64,
    pub min_members: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            eps: DEFAULT_EPS,
            min_members: DEFAULT_MIN_MEMBERS,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("cluster.eps must be > 0, got {}", self.eps)));
        }
        if self.min_members < 2 {
            return Err(Error::Config(format!(
                "cluster.min_members must be >= 2, got {}",
                self.min_members
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Noise => None,
        }
    }
}

/// Symmetric pairwise distance matrix, stored row-major.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_vectors(points: &[DocVector]) -> Result<Self> {
        if let Some(first) = points.first() {
            if let Some(bad) = points.iter().find(|p| p.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: bad.dim(),
                });
            }
        }
        Ok(Self::from_fn(points.len(), |i, j| {
            cosine_distance(&points[i], &points[j]).expect("dimensions checked")
        }))
    }

    /// Builds the matrix from a distance function, evaluating each row in
    /// parallel. The layout does not depend on thread scheduling.
    pub fn from_fn<F>(n: usize, dist: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = if i == j { 0.0 } else { dist(i, j) };
            }
        });
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn neighbors(&self, i: usize, eps: f64) -> Vec<usize> {
        let row = &self.data[i * self.n..(i + 1) * self.n];
        row.iter()
            .enumerate()
            .filter(|(_, &d)| d <= eps)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Labels every point with a cluster ordinal (numbered in discovery order)
/// or noise.
pub fn dbscan_matrix(matrix: &DistanceMatrix, config: &ClusteringConfig) -> Vec<ClusterLabel> {
    let n = matrix.len();
    let mut labels: Vec<Option<ClusterLabel>> = vec![None; n];
    let mut next_cluster = 0;

    for p in 0..n {
        if labels[p].is_some() {
            continue;
        }
        let neighbors = matrix.neighbors(p, config.eps);
        if neighbors.len() < config.min_members {
            labels[p] = Some(ClusterLabel::Noise);
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[p] = Some(ClusterLabel::Cluster(cluster));

        let mut queue = std::collections::VecDeque::from(neighbors);
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Some(ClusterLabel::Noise) => labels[q] = Some(ClusterLabel::Cluster(cluster)),
                None => {
                    labels[q] = Some(ClusterLabel::Cluster(cluster));
                    let q_neighbors = matrix.neighbors(q, config.eps);
                    if q_neighbors.len() >= config.min_members {
                        queue.extend(
                            q_neighbors
                                .into_iter()
                                .filter(|&r| !matches!(labels[r], Some(ClusterLabel::Cluster(_)))),
                        );
                    }
                }
                Some(ClusterLabel::Cluster(_)) => {}
            }
        }
    }

    labels.into_iter().map(|l| l.unwrap_or(ClusterLabel::Noise)).collect()
}

/// DBSCAN over document vectors with cosine distance.
pub fn dbscan(points: &[DocVector], config: &ClusteringConfig) -> Result<Vec<ClusterLabel>> {
    config.validate()?;
    let matrix = DistanceMatrix::from_vectors(points)?;
    Ok(dbscan_matrix(&matrix, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// `<batch id>-<cluster ordinal>`.
    pub id: String,
    pub member_ids: Vec<String>,
    pub centroid: DocVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    pub events: Vec<Event>,
    pub noise_ids: Vec<String>,
}

/// Clusters a batch into events. Noise articles are returned separately.
pub fn build_events(batch: &Batch, vectors: &[DocVector], config: &ClusteringConfig) -> Result<EventSet> {
    if vectors.len() != batch.articles.len() {
        return Err(Error::InvalidInput(format!(
            "{} vectors for {} articles",
            vectors.len(),
            batch.articles.len()
        )));
    }
    let labels = dbscan(vectors, config)?;
    let n_clusters = labels.iter().filter_map(|l| l.cluster()).max().map_or(0, |m| m + 1);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    let mut noise_ids = Vec::new();
    for (idx, label) in labels.iter().enumerate() {
        match label {
            ClusterLabel::Cluster(c) => members[*c].push(idx),
            ClusterLabel::Noise => noise_ids.push(batch.articles[idx].id.clone()),
        }
    }

    let batch_id = batch.id();
    let dim = vectors.first().map_or(0, DocVector::dim);
    let events = members
        .into_iter()
        .enumerate()
        .map(|(ordinal, idxs)| {
            let mut sum = vec![0.0; dim];
            for &i in &idxs {
                for (s, v) in sum.iter_mut().zip(vectors[i].values()) {
                    *s += v;
                }
            }
            Event {
                id: format!("{batch_id}-{ordinal:03}"),
                member_ids: idxs.iter().map(|&i| batch.articles[i].id.clone()).collect(),
                centroid: DocVector::normalized(sum),
            }
        })
        .collect();
    Ok(EventSet { events, noise_ids })
}
