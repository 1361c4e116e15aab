//! Article records, ingestion from JSONL/TSV files, batch windows and
//! on-disk persistence of processed batches.
//!
//! Article JSONL carries one object per line with the keys
//! `id` (optional), `url`, `source_id`, `title`, `text`, `published_at`
//! and `fetched_at` (optional). Timestamps are RFC 3339 and normalized to UTC.
//!
//! Article TSV has the columns `url, source_id, title, text, published_at[, fetched_at]`
//! with `\t`, `\n`, `\r` and `\\` escaped inside fields. A header row
//! starting with `url<TAB>source_id` is skipped.

pub mod html;
mod persist;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use persist::{
    load_event_document, load_manifest, persist_batch, BatchManifest, EventArticle, EventDocument, ManifestEvent,
    ProcessedEvent, MANIFEST_FILE,
};

/// One retrieved news item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub source_id: String,
    pub title: String,
    pub text: String,
    pub published_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<DateTime<Utc>>,
}

impl Article {
    /// Builds an article with its id derived from `(url, published_at)`.
    pub fn new(
        url: impl Into<String>,
        source_id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
        published_at: DateTime<Utc>,
    ) -> Self {
        let url = url.into();
        Article {
            id: article_id(&url, published_at),
            url,
            source_id: source_id.into(),
            title: title.into(),
            text: text.into(),
            published_at,
            fetched_at: None,
        }
    }

    /// Text fed to the classifier: the title (when present) followed by the body.
    pub fn document(&self) -> String {
        scoring_document(Some(&self.title), &self.text)
    }
}

pub(crate) fn scoring_document(title: Option<&str>, text: &str) -> String {
    match title.map(str::trim).filter(|t| !t.is_empty()) {
        Some(title) => format!("{title}\n\n{text}"),
        None => text.to_string(),
    }
}

/// Stable article id: first 128 bits of SHA-256 over the url and the
/// canonical RFC 3339 form of the publication time.
pub fn article_id(url: &str, published_at: DateTime<Utc>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(url.as_bytes());
    hasher.update(b"\n");
    hasher.update(published_at.to_rfc3339_opts(SecondsFormat::AutoSi, true).as_bytes());
    hex::encode(&hasher.finalize()[..16])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Propaganda,
    NonPropaganda,
}

impl Label {
    pub fn is_propaganda(self) -> bool {
        self == Label::Propaganda
    }
}

impl From<bool> for Label {
    fn from(propaganda: bool) -> Self {
        if propaganda {
            Label::Propaganda
        } else {
            Label::NonPropaganda
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "propaganda" => Ok(Label::Propaganda),
            "0" | "non_propaganda" => Ok(Label::NonPropaganda),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub feed_url: Option<String>,
    #[serde(default)]
    pub train_label: Option<Label>,
}

/// Parses a JSON array of sources, rejecting duplicate ids.
pub fn load_sources(path: &Path) -> Result<Vec<Source>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sources: Vec<Source> = serde_json::from_str(&raw)?;
    let mut seen = std::collections::HashSet::new();
    for source in &sources {
        if !seen.insert(source.id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate source id {:?} in {}",
                source.id,
                path.display()
            )));
        }
    }
    Ok(sources)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDoc {
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArticleFormat {
    Jsonl,
    Tsv,
}

impl FromStr for ArticleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ArticleFormat::Jsonl),
            "tsv" => Ok(ArticleFormat::Tsv),
            other => Err(Error::InvalidInput(format!("unknown article format {other:?}"))),
        }
    }
}

/// A record that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for SkippedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArticle {
    id: Option<String>,
    url: Option<String>,
    source_id: Option<String>,
    title: Option<String>,
    text: Option<String>,
    published_at: Option<String>,
    fetched_at: Option<String>,
}

/// Reads articles from `path`. Invalid records are skipped and reported
/// with their line numbers; only an unreadable file is an error.
pub fn load_articles(path: &Path, format: ArticleFormat) -> Result<LoadReport<Article>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_articles(&raw, format))
}

pub fn parse_articles(raw: &str, format: ArticleFormat) -> LoadReport<Article> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if format == ArticleFormat::Tsv && line_no == 1 && line.starts_with("url\tsource_id") {
            continue;
        }
        let parsed = match format {
            ArticleFormat::Jsonl => serde_json::from_str::<RawArticle>(line)
                .map_err(|e| format!("malformed JSON: {e}"))
                .and_then(validate),
            ArticleFormat::Tsv => raw_from_tsv(line).and_then(validate),
        };
        match parsed {
            Ok(article) => records.push(article),
            Err(reason) => {
                log::warn!("skipping article record at line {line_no}: {reason}");
                skipped.push(SkippedLine { line: line_no, reason });
            }
        }
    }
    LoadReport { records, skipped }
}

fn raw_from_tsv(line: &str) -> std::result::Result<RawArticle, String> {
    let cols: Vec<String> = line.split('\t').map(unescape_field).collect();
    if !(5..=6).contains(&cols.len()) {
        return Err(format!("expected 5 or 6 columns, found {}", cols.len()));
    }
    let mut cols = cols.into_iter();
    let mut next = || cols.next().filter(|c| !c.is_empty());
    Ok(RawArticle {
        id: None,
        url: next(),
        source_id: next(),
        title: next().or_else(|| Some(String::new())),
        text: next(),
        published_at: next(),
        fetched_at: next(),
    })
}

fn validate(raw: RawArticle) -> std::result::Result<Article, String> {
    let url = raw.url.filter(|u| !u.trim().is_empty()).ok_or("missing url")?;
    let source_id = raw.source_id.ok_or("missing source_id")?;
    let title = raw.title.ok_or("missing title")?;
    let text = raw.text.ok_or("missing text")?;
    if text.split_whitespace().next().is_none() {
        return Err("text is empty after whitespace normalization".into());
    }
    let published_at = parse_timestamp(raw.published_at.as_deref().ok_or("missing published_at")?)
        .map_err(|e| format!("published_at: {e}"))?;
    let fetched_at = raw
        .fetched_at
        .as_deref()
        .map(parse_timestamp)
        .transpose()
        .map_err(|e| format!("fetched_at: {e}"))?;
    let id = raw
        .id
        .filter(|id| !id.is_empty())
        .unwrap_or_else(|| article_id(&url, published_at));
    Ok(Article {
        id,
        url,
        source_id,
        title,
        text,
        published_at,
        fetched_at,
    })
}

pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("invalid timestamp {s:?}: {e}"))
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub(crate) fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Serializes articles as canonical JSONL, one record per line.
pub fn write_articles_jsonl(path: &Path, articles: &[Article]) -> Result<()> {
    let mut buf = Vec::new();
    for article in articles {
        serde_json::to_writer(&mut buf, article)?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a labeled corpus in `label<TAB>text` form (labels `0`/`1`).
pub fn load_labeled(path: &Path) -> Result<LoadReport<LabeledDoc>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_labeled(&raw))
}

pub fn parse_labeled(raw: &str) -> LoadReport<LabeledDoc> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .ok_or_else(|| "expected label<TAB>text".to_string())
            .and_then(|(label, text)| {
                let label = label.parse::<Label>().map_err(|e| e.to_string())?;
                let text = unescape_field(text);
                if text.trim().is_empty() {
                    return Err("empty text".to_string());
                }
                Ok(LabeledDoc { text, label })
            });
        match parsed {
            Ok(doc) => records.push(doc),
            Err(reason) => {
                log::warn!("skipping labeled record at line {}: {reason}", idx + 1);
                skipped.push(SkippedLine { line: idx + 1, reason });
            }
        }
    }
    LoadReport { records, skipped }
}

pub fn write_labeled(path: &Path, docs: &[LabeledDoc]) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        out.push_str(if doc.label.is_propaganda() { "1" } else { "0" });
        out.push('\t');
        out.push_str(&escape_field(&doc.text));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Length of a batch window. Always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period(Duration);

impl Period {
    pub fn new(duration: Duration) -> Result<Self> {
        if duration <= Duration::zero() {
            return Err(Error::InvalidInput(format!(
                "batch period must be positive, got {duration}"
            )));
        }
        Ok(Period(duration))
    }

    pub fn hours(hours: i64) -> Result<Self> {
        Period::new(Duration::hours(hours))
    }

    pub fn duration(self) -> Duration {
        self.0
    }
}

impl Default for Period {
    fn default() -> Self {
        Period(Duration::hours(24))
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `<n>h`, `<n>m` or `<n>s`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("invalid period {s:?}, expected e.g. 24h"));
        let (num, unit) = s.split_at(s.len().checked_sub(1).ok_or_else(bad)?);
        let n: i64 = num.parse().map_err(|_| bad())?;
        let duration = match unit {
            "h" => Duration::hours(n),
            "m" => Duration::minutes(n),
            "s" => Duration::seconds(n),
            _ => return Err(bad()),
        };
        Period::new(duration)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub articles: Vec<Article>,
}

impl Batch {
    pub fn id(&self) -> String {
        format!("b{}", self.window_end.format("%Y%m%dT%H%M%SZ"))
    }
}

/// Articles published in `[window_end - period, window_end)`, in input
/// order, with repeated ids collapsed to their first occurrence.
pub fn select_window(articles: &[Article], window_end: DateTime<Utc>, period: Period) -> Batch {
    let window_start = window_end - period.duration();
    let mut seen = std::collections::HashSet::new();
    let articles = articles
        .iter()
        .filter(|a| a.published_at >= window_start && a.published_at < window_end)
        .filter(|a| seen.insert(a.id.clone()))
        .cloned()
        .collect();
    Batch {
        window_start,
        window_end,
        articles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 3, 1, h, 0, 0).unwrap()
    }

    fn jsonl_line(url: &str, text: Option<&str>) -> String {
        let mut obj = serde_json::json!({
            "url": url,
            "source_id": "src",
            "title": "A title",
            "published_at": "2024-03-01T10:00:00Z",
        });
        if let Some(text) = text {
            obj["text"] = text.into();
        }
        obj.to_string()
    }

    #[test]
    fn three_valid_lines_keep_order() {
        let raw = ["u1", "u2", "u3"]
            .iter()
            .map(|u| jsonl_line(u, Some("body")))
            .collect::<Vec<_>>()
            .join("\n");
        let report = parse_articles(&raw, ArticleFormat::Jsonl);
        assert!(report.skipped.is_empty());
        let urls: Vec<_> = report.records.iter().map(|a| a.url.as_str()).collect();
        assert_eq!(urls, ["u1", "u2", "u3"]);
    }

    #[test]
    fn empty_file_is_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        let report = load_articles(&path, ArticleFormat::Jsonl).unwrap();
        assert!(report.records.is_empty());
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn missing_text_is_skipped_with_line_number() {
        let raw = [
            jsonl_line("u1", Some("body")),
            jsonl_line("u2", None),
            jsonl_line("u3", Some("body")),
        ]
        .join("\n");
        let report = parse_articles(&raw, ArticleFormat::Jsonl);
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].line, 2);
        assert!(report.skipped[0].reason.contains("text"));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = load_articles(Path::new("/nonexistent/articles.jsonl"), ArticleFormat::Jsonl);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn missing_publication_date_is_skipped() {
        let raw = r#"{"url":"u","source_id":"s","title":"t","text":"x"}"#;
        let report = parse_articles(raw, ArticleFormat::Jsonl);
        assert!(report.records.is_empty());
        assert!(report.skipped[0].reason.contains("published_at"));
    }

    #[test]
    fn whitespace_only_text_is_rejected() {
        let raw = jsonl_line("u", Some(" \n\t "));
        assert_eq!(parse_articles(&raw, ArticleFormat::Jsonl).skipped.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let raw =
            r#"{"url":"u","source_id":"s","title":"t","text":"x","published_at":"2024-03-01T10:00:00Z","extra":1}"#;
        assert_eq!(parse_articles(raw, ArticleFormat::Jsonl).skipped.len(), 1);
    }

    #[test]
    fn tsv_rows_with_escapes() {
        let raw = "url\tsource_id\ttitle\ttext\tpublished_at\n\
                   http://a\ts1\tT\tline one\\nline\\ttwo\t2024-03-01T10:00:00+02:00\n\
                   http://b\ts1\tT\tshort\n";
        let report = parse_articles(raw, ArticleFormat::Tsv);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].text, "line one\nline\ttwo");
        assert_eq!(report.records[0].published_at, ts(8));
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].line, 3);
    }

    #[test]
    fn id_is_deterministic() {
        let a = Article::new("http://x", "s", "t", "body", ts(1));
        let b = Article::new("http://x", "other", "t2", "other body", ts(1));
        let c = Article::new("http://x", "s", "t", "body", ts(2));
        assert_eq!(a.id, b.id);
        assert_ne!(a.id, c.id);
        assert!(!a.id.is_empty());
    }

    fn hourly_articles(hours: &[u32]) -> Vec<Article> {
        hours
            .iter()
            .enumerate()
            .map(|(i, &h)| Article::new(format!("http://a/{i}"), "s", "t", "body", ts(h)))
            .collect()
    }

    #[test]
    fn window_keeps_everything_inside() {
        let articles = hourly_articles(&[1, 2, 3]);
        let batch = select_window(&articles, ts(4), Period::hours(24).unwrap());
        assert_eq!(batch.articles, articles);
    }

    #[test]
    fn window_end_is_exclusive_start_inclusive() {
        let articles = hourly_articles(&[2, 5, 8]);
        let batch = select_window(&articles, ts(8), Period::hours(6).unwrap());
        let hours: Vec<_> = batch.articles.iter().map(|a| a.published_at).collect();
        assert_eq!(hours, [ts(2), ts(5)]);
    }

    #[test]
    fn window_drops_old_articles() {
        // 4 of 10 articles are older than 24 h before the window end.
        let day1 = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
        let offsets_h = [-30, -26, -25, -24, -23, -12, -6, -1, -48, -2];
        let articles: Vec<_> = offsets_h
            .iter()
            .enumerate()
            .map(|(i, &h)| Article::new(format!("http://a/{i}"), "s", "t", "b", day1 + Duration::hours(h)))
            .collect();
        let batch = select_window(&articles, day1, Period::default());
        assert_eq!(batch.articles.len(), 6);
    }

    #[test]
    fn window_collapses_duplicate_ids() {
        let mut articles = hourly_articles(&[1, 2]);
        let mut dup = articles[0].clone();
        dup.title = "later copy".into();
        articles.push(dup);
        let batch = select_window(&articles, ts(4), Period::default());
        assert_eq!(batch.articles.len(), 2);
        assert_eq!(batch.articles[0].title, "t");
    }

    #[test]
    fn period_parsing() {
        assert_eq!("24h".parse::<Period>().unwrap(), Period::default());
        assert_eq!("90m".parse::<Period>().unwrap().duration(), Duration::minutes(90));
        assert!("0h".parse::<Period>().is_err());
        assert!("-3h".parse::<Period>().is_err());
        assert!("h".parse::<Period>().is_err());
        assert!("".parse::<Period>().is_err());
    }

    #[test]
    fn labeled_tsv() {
        let raw = "1\tpropaganda text\n0\tplain\\tnews\nx\tbad label\nnot-tabbed\n";
        let report = parse_labeled(raw);
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.records[0].label, Label::Propaganda);
        assert_eq!(report.records[1].text, "plain\tnews");
        assert_eq!(report.skipped.len(), 2);
    }

    #[test]
    fn duplicate_source_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sources.json");
        fs::write(
            &path,
            r#"[{"id":"a","name":"A","train_label":"propaganda"},{"id":"a","name":"A2"}]"#,
        )
        .unwrap();
        assert!(load_sources(&path).is_err());
    }
}
