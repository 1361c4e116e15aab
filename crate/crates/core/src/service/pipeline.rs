//! Batch orchestration: select window, embed, cluster, dedup, score, persist.

use std::fs;
use std::path::Path;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::RunStore;
use crate::clustering::build_events;
use crate::config::Config;
use crate::corpus::{persist_batch, select_window, Batch, ProcessedEvent};
use crate::dedup::dedup_event;
use crate::embedding::{DocVector, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::model::{load_model, Model, ScoredArticle};

/// Run summary written next to the batch manifest.
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    /// Articles in the window.
    pub ingested: usize,
    /// Articles that ended up in some event.
    pub clustered: usize,
    pub events: usize,
    pub noise: usize,
    pub duplicates_removed: usize,
    /// Event members left after near-duplicate removal.
    pub deduped: usize,
    pub scored: usize,
}

impl StageCounts {
    /// `ingested = clustered + noise`, `clustered = deduped + duplicates_removed`
    /// and every kept article is scored.
    pub fn check(&self) -> Result<()> {
        let ok = self.ingested == self.clustered + self.noise
            && self.clustered == self.deduped + self.duplicates_removed
            && self.scored == self.deduped;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("stage counts do not add up: {self:?}")))
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub select: f64,
    pub embed: f64,
    pub cluster: f64,
    pub dedup: f64,
    pub score: f64,
    pub persist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub run_id: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub counts: StageCounts,
    pub config_fingerprint: String,
    pub model_fingerprint: String,
    /// Not persisted, so reruns stay byte-identical.
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Runs one batch ending at `window_end` using the model and store named by
/// `config`, and publishes it as the latest run.
pub fn run_batch(config: &Config, window_end: DateTime<Utc>) -> Result<PipelineRun> {
    let store = RunStore::new(&config.data_dir);
    let _lock = store.lock()?;
    let model = load_model(&config.model_path())?;
    let provider = config.embedding_provider()?;
    run_locked(config, &store, &model, provider.as_ref(), window_end)
}

/// Like [`run_batch`] with an already loaded model and embedding provider.
pub fn run_batch_with(
    config: &Config,
    model: &Model,
    provider: &dyn EmbeddingProvider,
    window_end: DateTime<Utc>,
) -> Result<PipelineRun> {
    let store = RunStore::new(&config.data_dir);
    let _lock = store.lock()?;
    run_locked(config, &store, model, provider, window_end)
}

fn run_locked(
    config: &Config,
    store: &RunStore,
    model: &Model,
    provider: &dyn EmbeddingProvider,
    window_end: DateTime<Utc>,
) -> Result<PipelineRun> {
    config.validate()?;
    if provider.dim() != config.embedding.dim {
        return Err(Error::DimensionMismatch {
            expected: config.embedding.dim,
            actual: provider.dim(),
        });
    }
    let dedup_config = config.dedup_config()?;
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let batch = select_window(&store.load_articles()?, window_end, config.period()?);
    timings.select = clock.elapsed().as_secs_f64();
    let run_id = batch.id();
    log::info!("run {run_id}: {} articles in window", batch.articles.len());

    let clock = Instant::now();
    let vectors: Vec<DocVector> = batch
        .articles
        .par_iter()
        .map(|a| provider.embed(&a.id, &a.document()))
        .collect();
    timings.embed = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let event_set = build_events(&batch, &vectors, &config.cluster)?;
    timings.cluster = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let processed = dedup_events(&batch, event_set.events, &dedup_config);
    timings.dedup = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let kept: Vec<_> = processed.iter().flat_map(|pe| &pe.dedup.kept).collect();
    let scores = kept
        .par_iter()
        .map(|a| ScoredArticle::new(a.id.clone(), model.predict_text(&a.document())?))
        .collect::<Result<Vec<_>>>()?;
    timings.score = clock.elapsed().as_secs_f64();

    let clustered: usize = processed.iter().map(|pe| pe.event.member_ids.len()).sum();
    let duplicates_removed: usize = processed.iter().map(|pe| pe.dedup.removed()).sum();
    let counts = StageCounts {
        ingested: batch.articles.len(),
        clustered,
        events: processed.len(),
        noise: event_set.noise_ids.len(),
        duplicates_removed,
        deduped: kept.len(),
        scored: scores.len(),
    };
    counts.check()?;

    let run = PipelineRun {
        run_id: run_id.clone(),
        window_start: batch.window_start,
        window_end: batch.window_end,
        counts,
        config_fingerprint: config.pipeline_fingerprint()?,
        model_fingerprint: model.fingerprint(),
        timings,
    };

    let clock = Instant::now();
    let scratch = store.scratch_dir(&run_id)?;
    let written = persist_batch(&batch, &processed, &scores, &scratch)
        .and_then(|_| write_run_file(&scratch, &run))
        .and_then(|_| store.publish(&scratch, &run_id));
    if let Err(e) = written {
        let _ = fs::remove_dir_all(&scratch);
        return Err(e);
    }
    let mut run = run;
    run.timings.persist = clock.elapsed().as_secs_f64();
    log::info!(
        "run {run_id}: {} events, {} noise, {} duplicates removed, {} scored",
        counts.events,
        counts.noise,
        counts.duplicates_removed,
        counts.scored
    );
    log::debug!("run {run_id} timings: {:?}", run.timings);
    Ok(run)
}

fn dedup_events(
    batch: &Batch,
    events: Vec<crate::clustering::Event>,
    config: &crate::dedup::DedupConfig,
) -> Vec<ProcessedEvent> {
    let by_id: std::collections::HashMap<&str, &crate::corpus::Article> =
        batch.articles.iter().map(|a| (a.id.as_str(), a)).collect();
    events
        .into_iter()
        .map(|event| {
            let members: Vec<_> = event.member_ids.iter().map(|id| by_id[id.as_str()].clone()).collect();
            let dedup = dedup_event(&members, config);
            ProcessedEvent { event, dedup }
        })
        .collect()
}

fn write_run_file(dir: &Path, run: &PipelineRun) -> Result<()> {
    let path = dir.join(RUN_FILE);
    let mut bytes = serde_json::to_vec_pretty(run)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

pub fn load_run_file(run_dir: &Path) -> Result<PipelineRun> {
    let path = run_dir.join(RUN_FILE);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&raw)?)
}
