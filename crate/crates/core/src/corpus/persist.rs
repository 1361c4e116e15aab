//! Deterministic on-disk layout of a processed batch:
//!
//! ```text
//! <dir>/manifest.json        batch summary (see BatchManifest)
//! <dir>/articles.jsonl       every batch article, canonical Article JSONL
//! <dir>/events/<id>.json     one EventDocument per event
//! ```
//!
//! Keys are written in declaration order and floats with exactly six
//! decimals, so identical inputs produce identical bytes.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{write_articles_jsonl, Article, Batch};
use crate::clustering::Event;
use crate::dedup::DedupOutcome;
use crate::error::{Error, Result};
use crate::model::ScoredArticle;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARTICLES_FILE: &str = "articles.jsonl";
pub const EVENTS_DIR: &str = "events";
const FORMAT_VERSION: u32 = 1;

/// Float written with six fixed decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed6(pub f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite float"));
        }
        let raw =
            serde_json::value::RawValue::from_string(format!("{:.6}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fixed6 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Fixed6)
    }
}

/// An event after near-duplicate removal.
#[derive(Debug, Clone)]
pub struct ProcessedEvent {
    pub event: Event,
    pub dedup: DedupOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub id: String,
    pub file: String,
    pub member_count: usize,
    pub kept_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub format_version: u32,
    pub batch_id: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    /// Articles in the batch. Equals the sum of event member counts plus
    /// the noise count.
    pub article_count: usize,
    pub event_count: usize,
    pub noise_count: usize,
    pub duplicates_removed: usize,
    pub scored_count: usize,
    pub events: Vec<ManifestEvent>,
    pub noise_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventArticle {
    pub id: String,
    pub title: String,
    pub source_id: String,
    pub url: String,
    pub published_at: DateTime<Utc>,
    pub propaganda_index: Fixed6,
    pub bin: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDocument {
    pub id: String,
    pub batch_id: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    /// Title of the highest-scoring article.
    pub headline: String,
    pub member_count: usize,
    pub member_ids: Vec<String>,
    /// Kept articles, sorted by propaganda index descending (ties by id).
    pub articles: Vec<EventArticle>,
    pub duplicate_groups: Vec<Vec<String>>,
}

/// Writes the batch, its events and scores under `dir` and returns the
/// manifest path. Existing event documents in `dir` are replaced.
pub fn persist_batch(
    batch: &Batch,
    events: &[ProcessedEvent],
    scores: &[ScoredArticle],
    dir: &Path,
) -> Result<PathBuf> {
    let score_by_id: HashMap<&str, &ScoredArticle> = scores.iter().map(|s| (s.article_id.as_str(), s)).collect();
    let batch_ids: HashSet<&str> = batch.articles.iter().map(|a| a.id.as_str()).collect();

    let mut clustered = HashSet::new();
    for pe in events {
        for id in &pe.event.member_ids {
            if !batch_ids.contains(id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "event {} references article {id} outside the batch",
                    pe.event.id
                )));
            }
            clustered.insert(id.as_str());
        }
    }
    let noise_ids: Vec<String> = batch
        .articles
        .iter()
        .filter(|a| !clustered.contains(a.id.as_str()))
        .map(|a| a.id.clone())
        .collect();

    let events_dir = dir.join(EVENTS_DIR);
    if events_dir.exists() {
        fs::remove_dir_all(&events_dir).map_err(|e| Error::io(&events_dir, e))?;
    }
    fs::create_dir_all(&events_dir).map_err(|e| Error::io(&events_dir, e))?;
    write_articles_jsonl(&dir.join(ARTICLES_FILE), &batch.articles)?;

    let batch_id = batch.id();
    let mut manifest_events = Vec::with_capacity(events.len());
    let mut duplicates_removed = 0;
    let mut scored_count = 0;
    for pe in events {
        let mut articles = pe
            .dedup
            .kept
            .iter()
            .map(|a| event_article(a, &score_by_id))
            .collect::<Result<Vec<_>>>()?;
        articles.sort_by(|a, b| {
            b.propaganda_index
                .0
                .total_cmp(&a.propaganda_index.0)
                .then_with(|| a.id.cmp(&b.id))
        });
        scored_count += articles.len();
        duplicates_removed += pe.event.member_ids.len() - pe.dedup.kept.len();

        let doc = EventDocument {
            id: pe.event.id.clone(),
            batch_id: batch_id.clone(),
            window_start: batch.window_start,
            window_end: batch.window_end,
            headline: articles.first().map(|a| a.title.clone()).unwrap_or_default(),
            member_count: pe.event.member_ids.len(),
            member_ids: pe.event.member_ids.clone(),
            articles,
            duplicate_groups: pe.dedup.dup_groups.clone(),
        };
        let file = format!("{EVENTS_DIR}/{}.json", doc.id);
        write_json(&dir.join(&file), &doc)?;
        manifest_events.push(ManifestEvent {
            id: doc.id,
            file,
            member_count: doc.member_count,
            kept_count: doc.articles.len(),
        });
    }

    let manifest = BatchManifest {
        format_version: FORMAT_VERSION,
        batch_id,
        window_start: batch.window_start,
        window_end: batch.window_end,
        article_count: batch.articles.len(),
        event_count: manifest_events.len(),
        noise_count: noise_ids.len(),
        duplicates_removed,
        scored_count,
        events: manifest_events,
        noise_ids,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

fn event_article(article: &Article, scores: &HashMap<&str, &ScoredArticle>) -> Result<EventArticle> {
    let score = scores
        .get(article.id.as_str())
        .ok_or_else(|| Error::InvalidInput(format!("no score for kept article {}", article.id)))?;
    Ok(EventArticle {
        id: article.id.clone(),
        title: article.title.clone(),
        source_id: article.source_id.clone(),
        url: article.url.clone(),
        published_at: article.published_at,
        propaganda_index: Fixed6(score.propaganda_index),
        bin: score.bin,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(dir: &Path) -> Result<BatchManifest> {
    let path = dir.join(MANIFEST_FILE);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&raw)?)
}

pub fn load_event_document(path: &Path) -> Result<EventDocument> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&raw)?)
}
