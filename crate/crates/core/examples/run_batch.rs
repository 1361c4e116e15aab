//! Ingests the fixture articles into a fresh store, trains a small model
//! and runs one batch end to end.
//!
//! ```text
//! cargo run --release --example run_batch -- [data_dir]
//! ```

use std::path::PathBuf;

use newswatch::config::Config;
use newswatch::corpus::{load_articles, load_event_document, load_manifest, ArticleFormat};
use newswatch::features::lexicon::shipped;
use newswatch::features::FeatureConfig;
use newswatch::model::{save_model, train_model, TrainOptions};
use newswatch::service::{run_batch, RunStore};
use newswatch::synthetic::{generate, SyntheticConfig};

fn main() -> newswatch::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let data_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("newswatch-example-store"));
    let config = Config {
        data_dir: data_dir.clone(),
        ..Config::default()
    };

    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let articles = load_articles(&fixtures.join("articles.jsonl"), ArticleFormat::Jsonl)?.records;
    let store = RunStore::new(&data_dir);
    println!("ingested {} new articles", store.ingest(&articles)?);

    let docs = generate(&SyntheticConfig {
        n_docs: 600,
        ..SyntheticConfig::default()
    })?;
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let labels: Vec<bool> = docs.iter().map(|d| d.label.is_propaganda()).collect();
    let (model, _) = train_model(
        &texts,
        &labels,
        FeatureConfig::default(),
        shipped::default_set(),
        &TrainOptions::default(),
    )?;
    save_model(&model, &config.model_path())?;

    let run = run_batch(&config, "2024-05-02T00:00:00Z".parse().unwrap())?;
    println!("{}", serde_json::to_string_pretty(&run)?);

    let dir = store.run_dir(&run.run_id);
    for entry in load_manifest(&dir)?.events {
        let event = load_event_document(&dir.join(&entry.file))?;
        println!("{}: {}", event.id, event.headline);
        for a in &event.articles {
            println!(
                "  {:.3} bin {}  {:<14} {}",
                a.propaganda_index.0, a.bin, a.source_id, a.title
            );
        }
    }
    Ok(())
}
