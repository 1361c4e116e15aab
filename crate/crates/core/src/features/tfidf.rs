//! tf.idf vectorizers for word 1–3-grams and character 3-grams.
//!
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, `tf` is the raw count in the
//! document, and each transformed vector is L2-normalized when nonzero.
//! Terms seen in fewer than `min_df` training documents are dropped; the
//! vocabulary is ordered lexicographically.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tokenize::word_tokens;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_DF: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorizerKind {
    WordNgram1To3,
    CharNgram3,
}

impl VectorizerKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            VectorizerKind::WordNgram1To3 => 1,
            VectorizerKind::CharNgram3 => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(VectorizerKind::WordNgram1To3),
            2 => Some(VectorizerKind::CharNgram3),
            _ => None,
        }
    }

    /// Raw term counts of one document.
    pub fn term_counts(self, text: &str) -> HashMap<String, usize> {
        let mut counts = HashMap::new();
        match self {
            VectorizerKind::WordNgram1To3 => {
                let tokens = word_tokens(text);
                for n in 1..=3 {
                    for gram in tokens.windows(n) {
                        *counts.entry(gram.join(" ")).or_insert(0) += 1;
                    }
                }
            }
            VectorizerKind::CharNgram3 => {
                let chars: Vec<char> = text.to_lowercase().chars().collect();
                for gram in chars.windows(3) {
                    *counts.entry(gram.iter().collect::<String>()).or_insert(0) += 1;
                }
            }
        }
        counts
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    kind: VectorizerKind,
    min_df: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
    fitted_on: String,
}

impl Vectorizer {
    pub fn fit<S: AsRef<str> + Sync>(corpus: &[S], kind: VectorizerKind, min_df: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot fit a vectorizer on an empty corpus".into()));
        }
        let doc_terms: Vec<Vec<String>> = corpus
            .par_iter()
            .map(|doc| kind.term_counts(doc.as_ref()).into_keys().collect())
            .collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for terms in doc_terms {
            for term in terms {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = df.into_iter().filter(|(_, d)| *d >= min_df).collect();
        kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let n = corpus.len() as f64;
        let idf = kept
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        let terms: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();
        Self::from_parts(kind, min_df, terms, idf, corpus_fingerprint(corpus))
    }

    /// Rebuilds a fitted vectorizer, e.g. after deserialization.
    pub fn from_parts(
        kind: VectorizerKind,
        min_df: usize,
        terms: Vec<String>,
        idf: Vec<f64>,
        fitted_on: String,
    ) -> Result<Self> {
        if terms.len() != idf.len() {
            return Err(Error::InvalidInput(format!(
                "{} terms but {} idf values",
                terms.len(),
                idf.len()
            )));
        }
        if let Some(bad) = idf.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!("invalid idf value {bad}")));
        }
        let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != terms.len() {
            return Err(Error::InvalidInput("duplicate vocabulary terms".into()));
        }
        Ok(Vectorizer {
            kind,
            min_df,
            terms,
            idf,
            index,
            fitted_on,
        })
    }

    pub fn kind(&self) -> VectorizerKind {
        self.kind
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }

    pub fn vocab_len(&self) -> usize {
        self.terms.len()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn transform(&self, text: &str) -> SparseVec {
        let mut entries: Vec<(usize, f64)> = self
            .kind
            .term_counts(text)
            .into_iter()
            .filter_map(|(term, tf)| self.index.get(&term).map(|&i| (i, tf as f64 * self.idf[i])))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            entries.iter_mut().for_each(|e| e.1 /= norm);
        }
        SparseVec {
            indices: entries.iter().map(|e| e.0).collect(),
            values: entries.iter().map(|e| e.1).collect(),
        }
    }
}

fn corpus_fingerprint<S: AsRef<str>>(corpus: &[S]) -> String {
    let mut hasher = Sha256::new();
    for doc in corpus {
        hasher.update((doc.as_ref().len() as u64).to_le_bytes());
        hasher.update(doc.as_ref().as_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unigram_only(corpus: &[&str], min_df: usize) -> Vectorizer {
        let full = Vectorizer::fit(corpus, VectorizerKind::WordNgram1To3, min_df).unwrap();
        let (terms, idf): (Vec<_>, Vec<_>) = full
            .terms()
            .iter()
            .zip(full.idf())
            .filter(|(t, _)| !t.contains(' '))
            .map(|(t, i)| (t.clone(), *i))
            .unzip();
        Vectorizer::from_parts(VectorizerKind::WordNgram1To3, min_df, terms, idf, String::new()).unwrap()
    }

    #[test]
    fn smoothed_idf_by_hand() {
        let v = unigram_only(&["a b", "a c"], 1);
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(v.idf()[0], 1.0);
        let expected = (3.0f64 / 2.0).ln() + 1.0;
        assert!((v.idf()[1] - 1.405465).abs() < 1e-6);
        assert_eq!(v.idf()[1], expected);
        assert_eq!(v.idf()[2], expected);
    }

    #[test]
    fn transform_by_hand() {
        let v = unigram_only(&["a b", "a c"], 1);
        let x = v.transform("a b");
        assert_eq!(x.indices, [0, 1]);
        let b = (1.5f64).ln() + 1.0;
        let norm = (1.0 + b * b).sqrt();
        assert!((x.values[0] - 1.0 / norm).abs() < 1e-12);
        assert!((x.values[1] - b / norm).abs() < 1e-12);
        assert!((x.values[0] - 0.5797).abs() < 1e-4);
        assert!((x.values[1] - 0.8148).abs() < 1e-4);
    }

    #[test]
    fn word_grams_include_bigrams_and_trigrams() {
        let v = Vectorizer::fit(&["x y z", "x y z"], VectorizerKind::WordNgram1To3, 2).unwrap();
        assert_eq!(v.terms(), ["x", "x y", "x y z", "y", "y z", "z"]);
    }

    #[test]
    fn char_grams_include_spaces() {
        let v = Vectorizer::fit(&["Ab c", "ab c"], VectorizerKind::CharNgram3, 2).unwrap();
        assert_eq!(v.terms(), ["ab ", "b c"]);
    }

    #[test]
    fn single_document_min_df_two_is_empty() {
        let v = Vectorizer::fit(&["only one document"], VectorizerKind::WordNgram1To3, 2).unwrap();
        assert_eq!(v.vocab_len(), 0);
        assert_eq!(v.transform("only one document").nnz(), 0);
    }

    #[test]
    fn empty_corpus_is_error() {
        let empty: [&str; 0] = [];
        assert!(Vectorizer::fit(&empty, VectorizerKind::CharNgram3, 1).is_err());
    }

    #[test]
    fn refit_is_identical() {
        let corpus = ["the quick brown fox", "the lazy dog", "a quick dog"];
        let a = Vectorizer::fit(&corpus, VectorizerKind::WordNgram1To3, 1).unwrap();
        let b = Vectorizer::fit(&corpus, VectorizerKind::WordNgram1To3, 1).unwrap();
        assert_eq!(a, b);
        assert!(!a.fitted_on().is_empty());
    }

    #[test]
    fn oov_only_is_zero() {
        let v = Vectorizer::fit(&["a b", "a c"], VectorizerKind::WordNgram1To3, 1).unwrap();
        assert_eq!(v.transform("zzz qqq").nnz(), 0);
    }

    #[test]
    fn repeating_text_keeps_direction() {
        let corpus = ["storm hits the coast", "the coast guard responds", "storm warning"];
        let v = Vectorizer::fit(&corpus, VectorizerKind::WordNgram1To3, 1).unwrap();
        let once = v.transform("storm hits the coast guard");
        let twice = v.transform("storm hits the coast guard storm hits the coast guard");
        // Repetition adds the bridging n-grams "guard storm", which are OOV here.
        assert_eq!(once.indices, twice.indices);
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn transform_only_contains_document_terms(
            docs in prop::collection::vec("[a-e ]{0,30}", 1..8),
            pick in any::<prop::sample::Index>(),
        ) {
            for kind in [VectorizerKind::WordNgram1To3, VectorizerKind::CharNgram3] {
                let v = Vectorizer::fit(&docs, kind, 1).unwrap();
                let doc = pick.get(&docs);
                let present = kind.term_counts(doc);
                let x = v.transform(doc);
                for &i in &x.indices {
                    prop_assert!(present.contains_key(&v.terms()[i]));
                }
                prop_assert!(x.indices.windows(2).all(|w| w[0] < w[1]));
                if x.nnz() > 0 {
                    prop_assert!((x.norm() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
