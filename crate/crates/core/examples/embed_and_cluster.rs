//! Embeds the fixture window with the hashed bag-of-words provider and
//! groups it into events with DBSCAN.
//!
//! ```text
//! cargo run --example embed_and_cluster -- [eps]
//! ```

use std::path::Path;

use chrono::{DateTime, Utc};

use newswatch::clustering::{build_events, ClusteringConfig};
use newswatch::corpus::{load_articles, select_window, ArticleFormat, Period};
use newswatch::embedding::{cosine_distance, EmbeddingProvider, HashedBow};

fn main() -> newswatch::Result<()> {
    let eps = std::env::args().nth(1).map_or(0.55, |a| a.parse().expect("eps"));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/articles.jsonl");
    let articles = load_articles(&path, ArticleFormat::Jsonl)?.records;
    let end: DateTime<Utc> = "2024-05-02T00:00:00Z".parse().unwrap();
    let batch = select_window(&articles, end, Period::hours(24)?);

    let provider = HashedBow::default();
    let vectors: Vec<_> = batch
        .articles
        .iter()
        .map(|a| provider.embed(&a.id, &a.document()))
        .collect();

    println!("cosine distances:");
    for (i, u) in vectors.iter().enumerate() {
        let row: Vec<String> = vectors
            .iter()
            .map(|v| format!("{:.2}", cosine_distance(u, v).unwrap()))
            .collect();
        println!("  {i}: {}", row.join(" "));
    }

    let config = ClusteringConfig {
        eps,
        ..ClusteringConfig::default()
    };
    let events = build_events(&batch, &vectors, &config)?;
    for event in &events.events {
        println!("event {}", event.id);
        for id in &event.member_ids {
            let a = batch.articles.iter().find(|a| &a.id == id).unwrap();
            println!("  {}", a.title);
        }
    }
    println!("{} noise articles", events.noise_ids.len());
    Ok(())
}
