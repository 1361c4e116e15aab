//! Shingles the harbor-fire event and removes near-duplicates.
//!
//! ```text
//! cargo run --example dedup_event -- [n] [theta]
//! ```

use std::path::Path;

use newswatch::corpus::{load_articles, ArticleFormat};
use newswatch::dedup::{dedup_event, default_stopwords, jaccard, shingles, DedupConfig};

fn main() -> newswatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(3, |a| a.parse().expect("n"));
    let theta = args.next().map_or(0.5, |a| a.parse().expect("theta"));
    let config = DedupConfig::new(n, theta, default_stopwords())?;

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/articles.jsonl");
    let event: Vec<_> = load_articles(&path, ArticleFormat::Jsonl)?
        .records
        .into_iter()
        .take(3)
        .collect();

    let sets: Vec<_> = event.iter().map(|a| shingles(&a.text, &config)).collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            println!("J({i},{j}) = {:.3}", jaccard(&sets[i], &sets[j]));
        }
    }

    let outcome = dedup_event(&event, &config);
    println!("kept:");
    for a in &outcome.kept {
        println!("  {}  {}", a.published_at, a.title);
    }
    println!("{} removed, groups {:?}", outcome.removed(), outcome.dup_groups);
    Ok(())
}
