//! Parser-free subset of news-landscape content features.
//!
//! Fifteen features, always in this order:
//!
//! | # | name | definition |
//! |---|------|------------|
//! | 0 | `exclamation_marks` | count of `!` (raw) |
//! | 1 | `question_marks` | count of `?` (raw) |
//! | 2 | `quotation_marks` | count of `"`, `“`, `”`, `«`, `»` (raw) |
//! | 3 | `all_caps_ratio` | words of ≥2 letters, all uppercase / tokens |
//! | 4 | `avg_word_length` | mean token length in chars |
//! | 5 | `log_token_count` | `ln(1 + tokens)` |
//! | 6 | `negation_ratio` | negation-lexicon tokens / tokens |
//! | 7 | `first_person_ratio` | first-person pronouns / tokens |
//! | 8 | `second_person_ratio` | second-person pronouns / tokens |
//! | 9 | `third_person_ratio` | third-person pronouns / tokens |
//! | 10 | `swear_ratio` | swear-lexicon tokens / tokens |
//! | 11 | `number_ratio` | tokens containing a digit / tokens |
//! | 12 | `punctuation_per_sentence` | punctuation chars / max(1, sentences) |
//! | 13 | `avg_sentence_length` | tokens / max(1, sentences) |
//! | 14 | `stopword_ratio` | stopwords / tokens |
//!
//! Ratios divide by `max(1, tokens)`.

use std::collections::BTreeSet;

use unicode_segmentation::UnicodeSegmentation;

use super::lexicon::{shipped, Lexicon};
use super::tokenize::Tokenization;
use crate::dedup::default_stopwords;

pub const NELA_FEATURE_NAMES: [&str; 15] = [
    "exclamation_marks",
    "question_marks",
    "quotation_marks",
    "all_caps_ratio",
    "avg_word_length",
    "log_token_count",
    "negation_ratio",
    "first_person_ratio",
    "second_person_ratio",
    "third_person_ratio",
    "swear_ratio",
    "number_ratio",
    "punctuation_per_sentence",
    "avg_sentence_length",
    "stopword_ratio",
];

pub const NELA_WIDTH: usize = NELA_FEATURE_NAMES.len();

/// Word lists the subset depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NelaLexicons {
    pub negations: Lexicon,
    pub first_person: Lexicon,
    pub second_person: Lexicon,
    pub third_person: Lexicon,
    pub swear: Lexicon,
    pub stopwords: BTreeSet<String>,
}

impl Default for NelaLexicons {
    fn default() -> Self {
        NelaLexicons {
            negations: shipped::negations(),
            first_person: shipped::pronouns_first(),
            second_person: shipped::pronouns_second(),
            third_person: shipped::pronouns_third(),
            swear: shipped::swear(),
            stopwords: default_stopwords(),
        }
    }
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201c}' | '\u{201d}' | '\u{ab}' | '\u{bb}')
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201c}'
                | '\u{201d}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{2026}'
                | '\u{ab}'
                | '\u{bb}'
        )
}

fn is_all_caps(word: &str) -> bool {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

pub fn nela_subset(text: &str, tokenization: &Tokenization, lexicons: &NelaLexicons) -> [f64; NELA_WIDTH] {
    let tokens = &tokenization.tokens;
    let n = tokens.len();
    if n == 0 && text.trim().is_empty() {
        return [0.0; NELA_WIDTH];
    }
    let denom = n.max(1) as f64;
    let sentences = tokenization.sentences.len().max(1) as f64;
    let ratio = |count: usize| count as f64 / denom;
    let lex_ratio = |lex: &Lexicon| ratio(tokens.iter().filter(|t| lex.matches(t)).count());

    let count_chars = |pred: fn(char) -> bool| text.chars().filter(|&c| pred(c)).count();
    let caps = text.unicode_words().filter(|w| is_all_caps(w)).count();
    let total_len: usize = tokens.iter().map(|t| t.chars().count()).sum();

    [
        count_chars(|c| c == '!') as f64,
        count_chars(|c| c == '?') as f64,
        count_chars(is_quote) as f64,
        ratio(caps),
        total_len as f64 / denom,
        (1.0 + n as f64).ln(),
        lex_ratio(&lexicons.negations),
        lex_ratio(&lexicons.first_person),
        lex_ratio(&lexicons.second_person),
        lex_ratio(&lexicons.third_person),
        lex_ratio(&lexicons.swear),
        ratio(tokens.iter().filter(|t| t.chars().any(|c| c.is_ascii_digit())).count()),
        count_chars(is_punctuation) as f64 / sentences,
        n as f64 / sentences,
        ratio(
            tokens
                .iter()
                .filter(|t| lexicons.stopwords.contains(t.as_str()))
                .count(),
        ),
    ]
}
