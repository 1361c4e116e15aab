//! Loads an article file and selects one batch window.
//!
//! ```text
//! cargo run --example ingest_and_window -- [articles.jsonl] [window_end]
//! ```

use std::path::PathBuf;

use newswatch::corpus::{load_articles, parse_timestamp, select_window, ArticleFormat, Period};

fn main() -> newswatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/articles.jsonl"));
    let end = parse_timestamp(&args.next().unwrap_or_else(|| "2024-05-02T00:00:00Z".into())).expect("window end");

    let report = load_articles(&path, ArticleFormat::Jsonl)?;
    println!(
        "{} articles loaded, {} lines skipped",
        report.records.len(),
        report.skipped.len()
    );

    let batch = select_window(&report.records, end, Period::hours(24)?);
    println!(
        "batch {} covers [{}, {})",
        batch.id(),
        batch.window_start,
        batch.window_end
    );
    for a in &batch.articles {
        println!(
            "  {}  {}  {:<14} {}",
            &a.id[..12],
            a.published_at.format("%H:%M"),
            a.source_id,
            a.title
        );
    }
    Ok(())
}
