//! Prints the dense stylistic features of a text.
//!
//! ```text
//! cargo run --example stylometry -- "Some text to measure."
//! ```

use newswatch::features::lexicon::{lexicon_features, shipped};
use newswatch::features::nela::{nela_subset, NelaLexicons, NELA_FEATURE_NAMES};
use newswatch::features::stylometry::{readability_of, richness};
use newswatch::features::tokenize;

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "This is OUTRAGEOUS! The corrupt officials lied again. We will not accept their shameful excuses, will we?"
            .to_string()
    });
    let tokens = tokenize(&text);
    println!("{} tokens", tokens.len());

    let r = richness(&tokens);
    println!(
        "ttr {:.4}  hapax {}  dis {}  honore_r {:.2}  yule_k {:.2}",
        r.ttr, r.v1, r.v2, r.honore_r, r.yule_k
    );
    let rd = readability_of(&tokens);
    println!(
        "fk_grade {:.2}  flesch_ease {:.2}  gunning_fog {:.2}",
        rd.fk_grade, rd.flesch_ease, rd.gunning_fog
    );

    let lexicons = shipped::default_set();
    for (lex, value) in lexicons.iter().zip(lexicon_features(&tokens, &lexicons)) {
        println!("lexicon {:<24} {value:.4}", lex.name());
    }
    let nela = nela_subset(&text, &tokens, &NelaLexicons::default());
    for (name, value) in NELA_FEATURE_NAMES.iter().zip(nela) {
        println!("nela {name:<26} {value:.4}");
    }
}
