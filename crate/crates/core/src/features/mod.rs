//! Sparse article features from four families.
//!
//! Column layout, in this fixed order (disabled families have empty spans):
//!
//! 1. `ngrams`: tf.idf word 1–3-grams
//! 2. `lexicon`: one frequency per lexicon
//! 3. `style`: tf.idf character 3-grams, then the five richness and three
//!    readability scalars
//! 4. `nela`: the fifteen content features of [`nela`]
//!
//! Dense scalar columns (lexicon, richness, readability, nela) are
//! standardized with the training-set mean and standard deviation, which a
//! fitted [`FeaturePipeline`] carries along.

pub mod lexicon;
pub mod nela;
pub mod stylometry;
pub mod tfidf;
mod tokenize;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use lexicon::{lexicon_features, Lexicon};
use nela::{nela_subset, NelaLexicons, NELA_WIDTH};
use stylometry::{readability_of, richness};
use tfidf::{Vectorizer, VectorizerKind};

pub use tokenize::{sentence_segments, tokenize, word_tokens, Tokenization};

pub const STYLE_SCALARS: [&str; 8] = [
    "ttr",
    "hapax_legomena",
    "dislegomena",
    "honore_r",
    "yule_k",
    "fk_grade",
    "flesch_ease",
    "gunning_fog",
];

const STD_FLOOR: f64 = 1e-12;
/// Bound on standardized dense features.
pub const STANDARDIZED_CLIP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Ngrams,
    Lexicon,
    Style,
    Nela,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 4] = [
        FeatureFamily::Ngrams,
        FeatureFamily::Lexicon,
        FeatureFamily::Style,
        FeatureFamily::Nela,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::Ngrams => "ngrams",
            FeatureFamily::Lexicon => "lexicon",
            FeatureFamily::Style => "style",
            FeatureFamily::Nela => "nela",
        }
    }
}

impl fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilyFlags {
    pub ngrams: bool,
    pub lexicon: bool,
    pub style: bool,
    pub nela: bool,
}

impl FamilyFlags {
    pub const ALL: FamilyFlags = FamilyFlags {
        ngrams: true,
        lexicon: true,
        style: true,
        nela: true,
    };

    pub const NGRAMS_ONLY: FamilyFlags = FamilyFlags {
        ngrams: true,
        lexicon: false,
        style: false,
        nela: false,
    };

    pub fn enabled(&self, family: FeatureFamily) -> bool {
        match family {
            FeatureFamily::Ngrams => self.ngrams,
            FeatureFamily::Lexicon => self.lexicon,
            FeatureFamily::Style => self.style,
            FeatureFamily::Nela => self.nela,
        }
    }

    pub(crate) fn bits(&self) -> u8 {
        FeatureFamily::ALL
            .iter()
            .enumerate()
            .filter(|(_, f)| self.enabled(**f))
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub(crate) fn from_bits(bits: u8) -> Self {
        FamilyFlags {
            ngrams: bits & 1 != 0,
            lexicon: bits & 2 != 0,
            style: bits & 4 != 0,
            nela: bits & 8 != 0,
        }
    }
}

impl Default for FamilyFlags {
    fn default() -> Self {
        FamilyFlags::ALL
    }
}

impl FromStr for FamilyFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = FamilyFlags {
            ngrams: false,
            lexicon: false,
            style: false,
            nela: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "ngrams" => flags.ngrams = true,
                "lexicon" => flags.lexicon = true,
                "style" => flags.style = true,
                "nela" => flags.nela = true,
                "all" => flags = FamilyFlags::ALL,
                other => {
                    return Err(Error::Config(format!("unknown feature family {other:?}")));
                }
            }
        }
        if flags.bits() == 0 {
            return Err(Error::Config("at least one feature family is required".into()));
        }
        Ok(flags)
    }
}

impl fmt::Display for FamilyFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = FeatureFamily::ALL
            .iter()
            .filter(|fam| self.enabled(**fam))
            .map(|fam| fam.name())
            .collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpan {
    pub family: FeatureFamily,
    pub columns: Range<usize>,
}

/// Sparse feature row. `indices` are strictly increasing and below `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub width: usize,
    pub family_spans: Vec<FamilySpan>,
}

impl FeatureVector {
    /// A row without family structure, mostly for training on raw data.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        FeatureVector {
            indices,
            values,
            width: dense.len(),
            family_spans: Vec::new(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.width];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            dense[i] = v;
        }
        dense
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| weights[i] * v)
            .sum()
    }

    pub fn span(&self, family: FeatureFamily) -> Option<&Range<usize>> {
        self.family_spans
            .iter()
            .find(|s| s.family == family)
            .map(|s| &s.columns)
    }
}

/// Training-set mean and standard deviation of the dense scalar columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], width: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Standardizer { mean, std }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std` clipped to `±STANDARDIZED_CLIP`; columns with
    /// (near) zero spread are only centered.
    ///
    /// The clip keeps degenerate inputs (the Honoré guard on a text of all
    /// distinct words gives R around 1e8) from swamping every other column.
    pub fn apply(&self, raw: &mut [f64]) {
        for ((x, m), s) in raw.iter_mut().zip(&self.mean).zip(&self.std) {
            let scale = if *s > STD_FLOOR { *s } else { 1.0 };
            *x = ((*x - m) / scale).clamp(-STANDARDIZED_CLIP, STANDARDIZED_CLIP);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub flags: FamilyFlags,
    pub min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            flags: FamilyFlags::ALL,
            min_df: tfidf::DEFAULT_MIN_DF,
        }
    }
}

/// Everything needed to turn text into a [`FeatureVector`]: fitted
/// vectorizers, lexicons and standardization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub(crate) config: FeatureConfig,
    pub(crate) word: Option<Vectorizer>,
    pub(crate) chars: Option<Vectorizer>,
    pub(crate) lexicons: Vec<Lexicon>,
    pub(crate) nela: NelaLexicons,
    pub(crate) standardizer: Option<Standardizer>,
}

impl FeaturePipeline {
    /// An unfitted pipeline. [`FeaturePipeline::assemble`] fails until
    /// [`FeaturePipeline::fit`] has run.
    pub fn new(config: FeatureConfig, lexicons: Vec<Lexicon>) -> Self {
        FeaturePipeline {
            config,
            word: None,
            chars: None,
            lexicons,
            nela: NelaLexicons::default(),
            standardizer: None,
        }
    }

    pub fn fit<S: AsRef<str> + Sync>(&mut self, corpus: &[S]) -> Result<()> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot fit features on an empty corpus".into()));
        }
        let flags = self.config.flags;
        self.word = flags
            .ngrams
            .then(|| Vectorizer::fit(corpus, VectorizerKind::WordNgram1To3, self.config.min_df))
            .transpose()?;
        self.chars = flags
            .style
            .then(|| Vectorizer::fit(corpus, VectorizerKind::CharNgram3, self.config.min_df))
            .transpose()?;
        let rows: Vec<Vec<f64>> = corpus
            .par_iter()
            .map(|doc| {
                let doc = doc.as_ref();
                self.dense_raw(doc, &tokenize(doc))
            })
            .collect();
        self.standardizer = Some(Standardizer::fit(&rows, self.dense_width()));
        Ok(())
    }

    pub fn fitted<S: AsRef<str> + Sync>(config: FeatureConfig, lexicons: Vec<Lexicon>, corpus: &[S]) -> Result<Self> {
        let mut pipeline = FeaturePipeline::new(config, lexicons);
        pipeline.fit(corpus)?;
        Ok(pipeline)
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn flags(&self) -> FamilyFlags {
        self.config.flags
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn word_vectorizer(&self) -> Option<&Vectorizer> {
        self.word.as_ref()
    }

    pub fn char_vectorizer(&self) -> Option<&Vectorizer> {
        self.chars.as_ref()
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    fn block_widths(&self) -> [usize; 4] {
        let flags = self.config.flags;
        [
            if flags.ngrams {
                self.word.as_ref().map_or(0, Vectorizer::vocab_len)
            } else {
                0
            },
            if flags.lexicon { self.lexicons.len() } else { 0 },
            if flags.style {
                self.chars.as_ref().map_or(0, Vectorizer::vocab_len) + STYLE_SCALARS.len()
            } else {
                0
            },
            if flags.nela { NELA_WIDTH } else { 0 },
        ]
    }

    pub fn family_spans(&self) -> Vec<FamilySpan> {
        let mut start = 0;
        FeatureFamily::ALL
            .iter()
            .zip(self.block_widths())
            .map(|(&family, w)| {
                let span = FamilySpan {
                    family,
                    columns: start..start + w,
                };
                start += w;
                span
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.block_widths().iter().sum()
    }

    fn dense_width(&self) -> usize {
        let flags = self.config.flags;
        (if flags.lexicon { self.lexicons.len() } else { 0 })
            + (if flags.style { STYLE_SCALARS.len() } else { 0 })
            + (if flags.nela { NELA_WIDTH } else { 0 })
    }

    /// Unstandardized dense scalars of the enabled families, concatenated
    /// as lexicon, style scalars, nela.
    pub fn dense_raw(&self, text: &str, tokenization: &Tokenization) -> Vec<f64> {
        let flags = self.config.flags;
        let mut out = Vec::with_capacity(self.dense_width());
        if flags.lexicon {
            out.extend(lexicon_features(tokenization, &self.lexicons));
        }
        if flags.style {
            let r = richness(tokenization);
            let rd = readability_of(tokenization);
            out.extend([
                r.ttr,
                r.v1 as f64,
                r.v2 as f64,
                r.honore_r,
                r.yule_k,
                rd.fk_grade,
                rd.flesch_ease,
                rd.gunning_fog,
            ]);
        }
        if flags.nela {
            out.extend(nela_subset(text, tokenization, &self.nela));
        }
        out
    }

    /// Featurizes one document.
    pub fn assemble(&self, text: &str) -> Result<FeatureVector> {
        let flags = self.config.flags;
        if flags.ngrams && self.word.is_none() {
            return Err(Error::UnfittedVectorizer("ngrams"));
        }
        if flags.style && self.chars.is_none() {
            return Err(Error::UnfittedVectorizer("style"));
        }
        let standardizer = self
            .standardizer
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("feature pipeline is not fitted".into()))?;

        let tokenization = tokenize(text);
        let mut dense = self.dense_raw(text, &tokenization);
        standardizer.apply(&mut dense);
        let mut dense = dense.into_iter();

        let spans = self.family_spans();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut push = |col: usize, v: f64| {
            if v != 0.0 {
                indices.push(col);
                values.push(v);
            }
        };
        for span in &spans {
            let start = span.columns.start;
            match span.family {
                FeatureFamily::Ngrams if flags.ngrams => {
                    let x = self.word.as_ref().expect("checked").transform(text);
                    x.indices.iter().zip(&x.values).for_each(|(&i, &v)| push(start + i, v));
                }
                FeatureFamily::Lexicon if flags.lexicon => {
                    for (k, v) in dense.by_ref().take(self.lexicons.len()).enumerate() {
                        push(start + k, v);
                    }
                }
                FeatureFamily::Style if flags.style => {
                    let chars = self.chars.as_ref().expect("checked");
                    let x = chars.transform(text);
                    x.indices.iter().zip(&x.values).for_each(|(&i, &v)| push(start + i, v));
                    let scalar_start = start + chars.vocab_len();
                    for (k, v) in dense.by_ref().take(STYLE_SCALARS.len()).enumerate() {
                        push(scalar_start + k, v);
                    }
                }
                FeatureFamily::Nela if flags.nela => {
                    for (k, v) in dense.by_ref().take(NELA_WIDTH).enumerate() {
                        push(start + k, v);
                    }
                }
                _ => {}
            }
        }
        Ok(FeatureVector {
            indices,
            values,
            width: self.width(),
            family_spans: spans,
        })
    }

    pub fn assemble_all<S: AsRef<str> + Sync>(&self, docs: &[S]) -> Result<Vec<FeatureVector>> {
        docs.par_iter().map(|d| self.assemble(d.as_ref())).collect()
    }
}
