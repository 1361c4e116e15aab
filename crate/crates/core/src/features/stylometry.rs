//! Vocabulary richness and readability.
//!
//! With `N` tokens, `V` types and `V_i` types occurring exactly `i` times:
//!
//! * type-token ratio `V / N`
//! * Honoré's R `100 ln N / (1 - V_1 / V)`; when every type is a hapax the
//!   denominator is replaced by `1e-6`
//! * Yule's K `10^4 (Σ i² V_i - N) / N²`
//!
//! Readability uses words `W`, sentences `S`, syllables `Y` and complex
//! words `C` (three or more syllables):
//!
//! * Flesch reading ease `206.835 - 1.015 W/S - 84.6 Y/W`
//! * Flesch–Kincaid grade `0.39 W/S + 11.8 Y/W - 15.59`
//! * Gunning fog `0.4 (W/S + 100 C/W)`

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, Tokenization};

/// Bumped whenever [`syllables`] changes its output for any word.
pub const SYLLABLE_HEURISTIC_VERSION: u32 = 1;

const HONORE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RichnessFeatures {
    pub ttr: f64,
    /// Hapax legomena.
    pub v1: usize,
    /// Dislegomena.
    pub v2: usize,
    pub honore_r: f64,
    pub yule_k: f64,
}

pub fn richness(tokenization: &Tokenization) -> RichnessFeatures {
    let n = tokenization.tokens.len();
    if n == 0 {
        return RichnessFeatures::default();
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for token in &tokenization.tokens {
        *freq.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut spectrum: HashMap<usize, usize> = HashMap::new();
    for &count in freq.values() {
        *spectrum.entry(count).or_insert(0) += 1;
    }
    let v = freq.len();
    let v1 = spectrum.get(&1).copied().unwrap_or(0);
    let v2 = spectrum.get(&2).copied().unwrap_or(0);
    let sum_sq: usize = spectrum.iter().map(|(&i, &vi)| i * i * vi).sum();
    richness_from_counts(n, v, v1, v2, sum_sq)
}

/// Applies the richness formulas to precomputed counts. `sum_sq` is
/// `Σ i² V_i`.
pub fn richness_from_counts(n: usize, v: usize, v1: usize, v2: usize, sum_sq: usize) -> RichnessFeatures {
    if n == 0 || v == 0 {
        return RichnessFeatures::default();
    }
    let nf = n as f64;
    let denom = if v1 == v {
        HONORE_GUARD
    } else {
        1.0 - v1 as f64 / v as f64
    };
    RichnessFeatures {
        ttr: v as f64 / nf,
        v1,
        v2,
        honore_r: 100.0 * nf.ln() / denom,
        yule_k: 1e4 * (sum_sq as f64 - nf) / (nf * nf),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadabilityFeatures {
    pub fk_grade: f64,
    pub flesch_ease: f64,
    pub gunning_fog: f64,
}

pub fn readability(text: &str) -> ReadabilityFeatures {
    readability_of(&tokenize(text))
}

pub fn readability_of(tokenization: &Tokenization) -> ReadabilityFeatures {
    let words = tokenization.tokens.len();
    let sentences = tokenization.sentences.len();
    let (mut syl, mut complex) = (0, 0);
    for token in &tokenization.tokens {
        let s = syllables(token);
        syl += s;
        if s >= 3 {
            complex += 1;
        }
    }
    readability_from_counts(words, sentences, syl, complex)
}

pub fn readability_from_counts(
    words: usize,
    sentences: usize,
    syllables: usize,
    complex: usize,
) -> ReadabilityFeatures {
    if words == 0 || sentences == 0 {
        return ReadabilityFeatures::default();
    }
    let wps = words as f64 / sentences as f64;
    let spw = syllables as f64 / words as f64;
    ReadabilityFeatures {
        flesch_ease: 206.835 - 1.015 * wps - 84.6 * spw,
        fk_grade: 0.39 * wps + 11.8 * spw - 15.59,
        gunning_fog: 0.4 * (wps + 100.0 * complex as f64 / words as f64),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate.
///
/// Counts maximal runs of `a e i o u y` over the word's letters. A final
/// `e` that forms its own group is treated as silent unless it is the only
/// group or the word ends in consonant + `le` ("table"). Never returns less
/// than 1.
pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let len = letters.len();
    if groups > 1 && len >= 2 && letters[len - 1] == 'e' && !is_vowel(letters[len - 2]) {
        let consonant_le = len >= 3 && letters[len - 2] == 'l' && !is_vowel(letters[len - 3]);
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}
