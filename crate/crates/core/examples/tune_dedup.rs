//! Grid search of shingle size and Jaccard threshold on labeled pairs.
//!
//! ```text
//! cargo run --example tune_dedup -- [pairs.tsv]
//! ```

use std::path::PathBuf;

use newswatch::dedup::default_stopwords;
use newswatch::eval::{load_pairs, tune_dedup, DedupGrid};

fn main() -> newswatch::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/dedup_pairs.tsv"));
    let pairs = load_pairs(&path)?.records;
    let derived = pairs.iter().filter(|p| p.derived).count();
    println!("{} pairs, {derived} derived", pairs.len());
    let tuning = tune_dedup(&pairs, &DedupGrid::default(), &default_stopwords())?;
    print!("{}", tuning.to_table());
    Ok(())
}
