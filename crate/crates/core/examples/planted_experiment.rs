//! Generates the planted-signal corpus and compares the word n-gram
//! baseline with the full feature set.
//!
//! ```text
//! cargo run --release --example planted_experiment -- [n_docs] [seed]
//! ```

use std::time::Instant;

use newswatch::eval::{run_experiment, ExperimentConfig};
use newswatch::synthetic::{generate, SyntheticConfig};

fn main() -> newswatch::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n_docs = args.next().map_or(5000, |a| a.parse().expect("n_docs"));
    let seed = args.next().map_or(42, |a| a.parse().expect("seed"));

    let start = Instant::now();
    let corpus = generate(&SyntheticConfig {
        n_docs,
        seed,
        ..SyntheticConfig::default()
    })?;
    let report = run_experiment(
        &corpus,
        &ExperimentConfig {
            seed,
            ..ExperimentConfig::default()
        },
    )?;
    print!("{}", report.to_table());
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
