//! Long-running server: HTTP API, store polling and an optional scheduler.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration, Utc};

use super::api::{router, AppState, Snapshot};
use super::pipeline::run_batch_with;
use super::store::RunStore;
use crate::config::Config;
use crate::corpus::Period;
use crate::error::{Error, Result};
use crate::model::load_model;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    /// Run a batch at every multiple of this period (UTC, from the epoch).
    pub scheduler: Option<Period>,
}

/// First multiple of `period` since the Unix epoch strictly after `now`.
pub fn next_boundary(now: DateTime<Utc>, period: Period) -> DateTime<Utc> {
    let step = period.duration().num_milliseconds();
    let ms = now.timestamp_millis();
    let next = (ms.div_euclid(step) + 1) * step;
    DateTime::<Utc>::from_timestamp_millis(next).expect("timestamp in range")
}

/// Parses `period=24h` (or a bare `24h`).
pub fn parse_scheduler(arg: &str) -> Result<Period> {
    let value = arg.strip_prefix("period=").unwrap_or(arg);
    value.parse()
}

/// Serves until Ctrl-C.
pub async fn serve(config: Config, options: ServeOptions) -> Result<()> {
    let model = Arc::new(load_model(&config.model_path())?);
    let store = RunStore::new(&config.data_dir);
    let snapshot = Snapshot::load(&store).unwrap_or_else(|e| {
        log::error!("could not load the latest run, serving an empty list: {e}");
        Snapshot::default()
    });
    let state = Arc::new(AppState::new(model.clone(), snapshot, config.service.max_text_bytes));
    let app = router(state.clone(), config.service.static_dir.as_deref());

    let reload_state = state.clone();
    let reload_store = store.clone();
    let reload_every = StdDuration::from_secs(config.service.reload_secs.max(1));
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(reload_every);
        loop {
            ticker.tick().await;
            refresh(&reload_state, &reload_store).await;
        }
    });

    if let Some(period) = options.scheduler {
        let config = config.clone();
        let state = state.clone();
        tokio::spawn(async move {
            let provider: Arc<dyn crate::embedding::EmbeddingProvider> = match config.embedding_provider() {
                Ok(p) => Arc::from(p),
                Err(e) => {
                    log::error!("scheduler disabled: {e}");
                    return;
                }
            };
            loop {
                let window_end = next_boundary(Utc::now(), period);
                let wait = (window_end - Utc::now()).max(Duration::zero());
                tokio::time::sleep(wait.to_std().unwrap_or_default()).await;
                let (config, model, provider) = (config.clone(), model.clone(), provider.clone());
                let outcome =
                    tokio::task::spawn_blocking(move || run_batch_with(&config, &model, provider.as_ref(), window_end))
                        .await;
                match outcome {
                    Ok(Ok(run)) => log::info!("scheduled run {} finished", run.run_id),
                    Ok(Err(e)) => log::error!("scheduled run for {window_end} failed: {e}"),
                    Err(e) => log::error!("scheduled run for {window_end} panicked: {e}"),
                }
                refresh(&state, &store).await;
            }
        });
    }

    let listener = tokio::net::TcpListener::bind(options.addr)
        .await
        .map_err(|e| Error::Config(format!("cannot bind {}: {e}", options.addr)))?;
    log::info!("listening on {}", options.addr);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Config(format!("server error: {e}")))
}

async fn refresh(state: &Arc<AppState>, store: &RunStore) {
    let (state, store) = (state.clone(), store.clone());
    match tokio::task::spawn_blocking(move || state.snapshots.refresh(&store)).await {
        Ok(Ok(true)) => log::info!("published a new run snapshot"),
        Ok(Ok(false)) => {}
        Ok(Err(e)) => log::warn!("snapshot reload failed, keeping the previous one: {e}"),
        Err(e) => log::error!("snapshot reload panicked: {e}"),
    }
}
