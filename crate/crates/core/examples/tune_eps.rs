//! Chooses the clustering radius that best recovers known document groups.
//!
//! ```text
//! cargo run --example tune_eps -- [grouped.tsv]
//! ```

use std::path::PathBuf;

use newswatch::embedding::HashedBow;
use newswatch::eval::{default_eps_grid, load_grouped, tune_eps};

fn main() -> newswatch::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/events_grouped.tsv"));
    let docs = load_grouped(&path)?.records;
    let tuning = tune_eps(&docs, &default_eps_grid(), 2, &HashedBow::default())?;
    print!("{}", tuning.to_table());
    Ok(())
}
