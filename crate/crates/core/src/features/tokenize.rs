use std::ops::Range;

use unicode_segmentation::UnicodeSegmentation;

/// Lowercase Unicode words of `text`.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tokenization {
    pub tokens: Vec<String>,
    /// Token index ranges, one per sentence, partitioning `0..tokens.len()`.
    pub sentences: Vec<Range<usize>>,
}

impl Tokenization {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Words that commonly end in a period without ending the sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e", "u.s", "u.k", "u.n", "inc", "ltd", "co",
    "corp", "gen", "gov", "sen", "rep", "lt", "col", "sgt", "capt", "jan", "feb", "mar", "apr", "aug", "sept", "oct",
    "nov", "dec", "approx", "dept", "est", "fig",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}', '\u{bb}'];

pub fn tokenize(text: &str) -> Tokenization {
    let mut out = Tokenization::default();
    for segment in sentence_segments(text) {
        let start = out.tokens.len();
        out.tokens.extend(segment.unicode_words().map(str::to_lowercase));
        if out.tokens.len() > start {
            out.sentences.push(start..out.tokens.len());
        }
    }
    out
}

/// Splits `text` after each run of `.`, `!` or `?` (plus closing quotes and
/// brackets) that is followed by whitespace or the end of the text. A lone
/// period after a known abbreviation or a single-letter initial does not
/// split.
pub fn sentence_segments(text: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut seg_start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((pos, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut run_end = pos + c.len_utf8();
        let mut lone_period = c == '.';
        while let Some(&(p, next)) = chars.peek() {
            if matches!(next, '.' | '!' | '?') {
                lone_period = false;
            } else if !CLOSERS.contains(&next) {
                break;
            }
            run_end = p + next.len_utf8();
            chars.next();
        }
        let at_boundary = chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if !at_boundary {
            continue;
        }
        if lone_period && is_abbreviation(&text[seg_start..pos]) {
            continue;
        }
        segments.push(&text[seg_start..run_end]);
        seg_start = run_end;
    }
    if seg_start < text.len() {
        segments.push(&text[seg_start..]);
    }
    segments
}

fn is_abbreviation(before_period: &str) -> bool {
    let word = before_period
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    if word.is_empty() {
        return false;
    }
    let mut chars = word.chars();
    let single_letter = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic());
    single_letter || ABBREVIATIONS.contains(&word.as_str())
}
