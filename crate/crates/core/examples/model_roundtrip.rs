//! Saves a trained model, reads it back and checks that predictions agree.
//!
//! ```text
//! cargo run --example model_roundtrip -- [model.nwm]
//! ```

use std::path::PathBuf;

use newswatch::features::lexicon::shipped;
use newswatch::features::FeatureConfig;
use newswatch::model::{load_model, save_model, train_model, TrainOptions};
use newswatch::synthetic::{generate, SyntheticConfig};

fn main() -> newswatch::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("newswatch-example.nwm"));
    let docs = generate(&SyntheticConfig {
        n_docs: 400,
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

    save_model(&model, &out)?;
    let size = std::fs::metadata(&out).map(|m| m.len()).unwrap_or(0);
    let loaded = load_model(&out)?;
    println!("{} ({size} bytes), fingerprint {}", out.display(), loaded.fingerprint());

    let mut differing = 0;
    for text in &texts {
        if model.predict_text(text)?.to_bits() != loaded.predict_text(text)?.to_bits() {
            differing += 1;
        }
    }
    println!("{differing} of {} predictions differ after reload", texts.len());
    Ok(())
}
