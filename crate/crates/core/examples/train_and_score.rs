//! Trains on the labeled sample and scores a text with per-family
//! contributions.
//!
//! ```text
//! cargo run --release --example train_and_score -- ["text to score"]
//! ```

use std::path::Path;

use newswatch::corpus::load_labeled;
use newswatch::features::lexicon::shipped;
use newswatch::features::FeatureConfig;
use newswatch::model::{train_model, TrainOptions};

fn main() -> newswatch::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/labeled_sample.tsv");
    let docs = load_labeled(&path)?.records;
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let labels: Vec<bool> = docs.iter().map(|d| d.label.is_propaganda()).collect();
    let (model, fit) = train_model(
        &texts,
        &labels,
        FeatureConfig::default(),
        shipped::default_set(),
        &TrainOptions::default(),
    )?;
    println!(
        "{} columns, {} iterations, final objective {:.4}",
        model.width(),
        fit.iterations,
        fit.objective_trace.last().unwrap()
    );

    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "The shameful, corrupt council LIED again! Disgraceful!".into());
    let score = model.score(&text)?;
    println!(
        "index {:.4}  bin {}  logit {:.4}  bias {:.4}",
        score.propaganda_index, score.bin, score.logit, score.bias
    );
    for c in &score.family_contributions {
        println!("  {:<8} {:+.4}", c.family.name(), c.value);
    }
    Ok(())
}
