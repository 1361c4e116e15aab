//! Batch runs over the article store and the HTTP API over their results.

mod api;
mod pipeline;
mod server;
mod store;

pub use api::{
    router, ApiError, AppState, ErrorBody, EventsResponse, Health, ScoreRequest, ScoreResponse, Snapshot, SnapshotCell,
};
pub use pipeline::{load_run_file, run_batch, run_batch_with, PipelineRun, StageCounts, StageTimings, RUN_FILE};
pub use server::{next_boundary, parse_scheduler, serve, ServeOptions};
pub use store::{read_ingest_file, RunLock, RunStore, ARTICLE_STORE_FILE, LATEST_FILE, LOCK_FILE, RUNS_DIR};
