//! Word lexicons and their per-document frequency features.
//!
//! File format (UTF-8): the first line is `#name <lexicon-name>`, followed
//! by one entry per line. An entry ending in `*` matches any token with that
//! prefix. Blank lines and further `#` lines are ignored. Entries are
//! lowercased on load.
//!
//! A licensed LIWC dictionary can be used by exporting each category to
//! this format, one file per category.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::tokenize::Tokenization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    exact: BTreeSet<String>,
    prefixes: Vec<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::InvalidInput("lexicon name must not be empty".into()));
        }
        let mut exact = BTreeSet::new();
        let mut prefixes = BTreeSet::new();
        for entry in entries {
            let entry = entry.as_ref().trim().to_lowercase();
            if entry.is_empty() {
                continue;
            }
            match entry.strip_suffix('*') {
                Some(prefix) => prefixes.insert(prefix.to_string()),
                None => exact.insert(entry),
            };
        }
        Ok(Lexicon {
            name,
            exact,
            prefixes: prefixes.into_iter().collect(),
        })
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let mut lines = raw.lines();
        let header = lines.next().unwrap_or("");
        let name = header
            .trim()
            .strip_prefix("#name")
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "lexicon must start with `#name <lexicon-name>`, found {header:?}"
                ))
            })?;
        Lexicon::new(name, lines.filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&raw)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in file form (`*` suffix for prefixes), sorted.
    pub fn entries(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .exact
            .iter()
            .cloned()
            .chain(self.prefixes.iter().map(|p| format!("{p}*")))
            .collect();
        all.sort();
        all
    }

    pub fn matches(&self, token: &str) -> bool {
        self.exact.contains(token) || self.prefixes.iter().any(|p| token.starts_with(p.as_str()))
    }

    /// Share of tokens matching any entry, over `max(1, total tokens)`.
    pub fn frequency(&self, tokens: &[String]) -> f64 {
        let hits = tokens.iter().filter(|t| self.matches(t)).count();
        hits as f64 / tokens.len().max(1) as f64
    }
}

macro_rules! shipped {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            pub fn $name() -> Lexicon {
                Lexicon::parse(include_str!(concat!("../../data/lexicons/", $file)))
                    .expect("shipped lexicon parses")
            }
        )*
    };
}

/// Open lexicons shipped with the crate.
pub mod shipped {
    use super::Lexicon;

    shipped! {
        hedges => "hedges.txt",
        assertives => "assertives.txt",
        subjectives => "subjectives.txt",
        negations => "negations.txt",
        swear => "swear.txt",
        pronouns_first => "pronouns_first.txt",
        pronouns_second => "pronouns_second.txt",
        pronouns_third => "pronouns_third.txt",
    }

    /// Lexicons used for the lexicon feature family by default.
    pub fn default_set() -> Vec<Lexicon> {
        vec![hedges(), assertives(), subjectives()]
    }
}

pub fn lexicon_features(tokenization: &Tokenization, lexicons: &[Lexicon]) -> Vec<f64> {
    lexicons.iter().map(|lex| lex.frequency(&tokenization.tokens)).collect()
}
