//! Writes a planted-signal labeled corpus as `label<TAB>text`.
//!
//! ```text
//! cargo run --example synthetic_corpus -- out.tsv [n_docs] [seed]
//! ```

use std::path::PathBuf;

use newswatch::corpus::write_labeled;
use newswatch::synthetic::{generate, SyntheticConfig};

fn main() -> newswatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "planted.tsv".into()));
    let n_docs = args.next().map_or(1000, |a| a.parse().expect("n_docs"));
    let seed = args.next().map_or(42, |a| a.parse().expect("seed"));

    let docs = generate(&SyntheticConfig {
        n_docs,
        seed,
        ..SyntheticConfig::default()
    })?;
    write_labeled(&out, &docs)?;
    let positives = docs.iter().filter(|d| d.label.is_propaganda()).count();
    println!(
        "wrote {} documents ({positives} propaganda) to {}",
        docs.len(),
        out.display()
    );
    Ok(())
}
