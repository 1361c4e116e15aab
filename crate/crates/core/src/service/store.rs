//! Directory-backed run store.
//!
//! ```text
//! <data_dir>/articles.jsonl      ingested articles
//! <data_dir>/runs/<run_id>/      one persisted batch (see corpus::persist_batch)
//! <data_dir>/runs/LATEST         id of the most recently completed run
//! <data_dir>/run.lock            present while a batch is running
//! ```
//!
//! A run is written to a scratch directory and renamed into place, then
//! `LATEST` is replaced by rename, so readers see either the old or the
//! new run.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use crate::corpus::{load_articles, write_articles_jsonl, Article, ArticleFormat, LoadReport};
use crate::error::{Error, Result};

pub const ARTICLE_STORE_FILE: &str = "articles.jsonl";
pub const RUNS_DIR: &str = "runs";
pub const LATEST_FILE: &str = "LATEST";
pub const LOCK_FILE: &str = "run.lock";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        RunStore { root: data_dir.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn articles_path(&self) -> PathBuf {
        self.root.join(ARTICLE_STORE_FILE)
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join(RUNS_DIR)
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.runs_dir().join(run_id)
    }

    /// Articles in the store. A missing store file is an empty store.
    pub fn load_articles(&self) -> Result<Vec<Article>> {
        let path = self.articles_path();
        if !path.exists() {
            log::warn!("article store {} does not exist yet", path.display());
            return Ok(Vec::new());
        }
        let report = load_articles(&path, ArticleFormat::Jsonl)?;
        for skip in &report.skipped {
            log::warn!("{}: {skip}", path.display());
        }
        Ok(report.records)
    }

    /// Adds articles whose ids are not in the store yet, keeping store
    /// order followed by input order. Returns how many were added.
    pub fn ingest(&self, incoming: &[Article]) -> Result<usize> {
        let mut articles = self.load_articles()?;
        let mut seen: std::collections::HashSet<String> = articles.iter().map(|a| a.id.clone()).collect();
        let before = articles.len();
        for article in incoming {
            if seen.insert(article.id.clone()) {
                articles.push(article.clone());
            }
        }
        let added = articles.len() - before;
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let path = self.articles_path();
        let tmp = path.with_extension("jsonl.tmp");
        write_articles_jsonl(&tmp, &articles)?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(added)
    }

    /// Takes the single-writer lock. Fails with [`Error::RunLocked`] when
    /// another run holds it.
    pub fn lock(&self) -> Result<RunLock> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let path = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::RunLocked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    /// Fresh scratch directory for a run being written.
    pub(crate) fn scratch_dir(&self, run_id: &str) -> Result<PathBuf> {
        let runs = self.runs_dir();
        let dir = runs.join(format!(".tmp-{run_id}-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    /// Moves a fully written scratch directory to `runs/<run_id>` and
    /// points `LATEST` at it.
    pub(crate) fn publish(&self, scratch: &Path, run_id: &str) -> Result<PathBuf> {
        let target = self.run_dir(run_id);
        let retired = self.runs_dir().join(format!(".old-{run_id}-{}", std::process::id()));
        let replaced = target.exists();
        if replaced {
            fs::rename(&target, &retired).map_err(|e| Error::io(&target, e))?;
        }
        fs::rename(scratch, &target).map_err(|e| Error::io(&target, e))?;
        if replaced {
            fs::remove_dir_all(&retired).map_err(|e| Error::io(&retired, e))?;
        }
        let latest = self.runs_dir().join(LATEST_FILE);
        let tmp = self.runs_dir().join(format!(".{LATEST_FILE}.tmp"));
        fs::write(&tmp, format!("{run_id}\n")).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &latest).map_err(|e| Error::io(&latest, e))?;
        Ok(target)
    }

    /// Id of the most recently completed run, if any.
    pub fn latest(&self) -> Result<Option<String>> {
        let path = self.runs_dir().join(LATEST_FILE);
        match fs::read_to_string(&path) {
            Ok(raw) => {
                let id = raw.trim();
                Ok((!id.is_empty()).then(|| id.to_string()))
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

/// Removes the lock file when dropped.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl Drop for RunLock {
    fn drop(&mut self) {
        if let Err(e) = fs::remove_file(&self.path) {
            log::warn!("could not remove {}: {e}", self.path.display());
        }
    }
}

/// Loads an article file for ingestion, logging skipped lines.
pub fn read_ingest_file(path: &Path, format: ArticleFormat) -> Result<LoadReport<Article>> {
    let report = load_articles(path, format)?;
    for skip in &report.skipped {
        log::warn!("{}: {skip}", path.display());
    }
    Ok(report)
}
