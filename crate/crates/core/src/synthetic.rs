//! Labeled news-like corpus with a planted propaganda signal.
//!
//! Both classes draw topical filler from the same templates and word lists.
//! Propaganda documents differ only in the rates of three markers:
//!
//! * loaded adjectives from the subjectives lexicon (visible to every
//!   feature family, including word n-grams)
//! * exclamation marks
//! * fully capitalized words
//!
//! Word n-grams are lowercased and drop punctuation, so the last two
//! markers are only visible to the character, lexicon and nela features.
//! A classifier with only word n-grams therefore sees part of the signal.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::corpus::{Label, LabeledDoc};
use crate::error::{Error, Result};

const TOPICS: [&[&str]; 10] = [
    &[
        "council",
        "budget",
        "mayor",
        "district",
        "tax",
        "ordinance",
        "vote",
        "committee",
        "resident",
        "zoning",
        "permit",
        "hearing",
    ],
    &[
        "harbor",
        "freighter",
        "dock",
        "cargo",
        "container",
        "crane",
        "shipment",
        "port",
        "vessel",
        "terminal",
        "crew",
        "pier",
    ],
    &[
        "hospital",
        "clinic",
        "nurse",
        "vaccine",
        "patient",
        "ward",
        "doctor",
        "treatment",
        "trial",
        "outbreak",
        "pharmacy",
        "surgeon",
    ],
    &[
        "school",
        "teacher",
        "student",
        "classroom",
        "exam",
        "curriculum",
        "principal",
        "campus",
        "tuition",
        "lecture",
        "graduate",
        "library",
    ],
    &[
        "farmer",
        "harvest",
        "wheat",
        "drought",
        "irrigation",
        "cattle",
        "orchard",
        "tractor",
        "soil",
        "grain",
        "market",
        "barn",
    ],
    &[
        "railway",
        "train",
        "station",
        "platform",
        "ticket",
        "commuter",
        "tunnel",
        "signal",
        "timetable",
        "carriage",
        "track",
        "depot",
    ],
    &[
        "factory", "worker", "union", "wage", "shift", "assembly", "plant", "contract", "overtime", "manager",
        "pension", "strike",
    ],
    &[
        "storm",
        "flood",
        "river",
        "levee",
        "rainfall",
        "shelter",
        "evacuation",
        "forecast",
        "coastline",
        "rescue",
        "dam",
        "valley",
    ],
    &[
        "court",
        "judge",
        "trial",
        "verdict",
        "appeal",
        "lawyer",
        "witness",
        "jury",
        "ruling",
        "hearing",
        "sentence",
        "defendant",
    ],
    &[
        "stadium",
        "coach",
        "striker",
        "league",
        "season",
        "match",
        "goal",
        "referee",
        "tournament",
        "fans",
        "keeper",
        "transfer",
    ],
];

const VERBS: [&str; 20] = [
    "reviewed",
    "approved",
    "delayed",
    "inspected",
    "renovated",
    "expanded",
    "relocated",
    "discussed",
    "funded",
    "closed",
    "reopened",
    "visited",
    "measured",
    "planned",
    "postponed",
    "described",
    "questioned",
    "replaced",
    "repaired",
    "examined",
];

const ADJECTIVES: [&str; 16] = [
    "local",
    "new",
    "annual",
    "regional",
    "small",
    "large",
    "northern",
    "southern",
    "recent",
    "final",
    "public",
    "private",
    "early",
    "weekly",
    "temporary",
    "second",
];

const PLACES: [&str; 12] = [
    "Ashford",
    "Brenton",
    "Calloway",
    "Dunmore",
    "Elmsworth",
    "Farrow",
    "Glenhaven",
    "Harwick",
    "Islington",
    "Juniper",
    "Kelso",
    "Lindale",
];

const DAYS: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

/// Each matches an entry of the shipped subjectives lexicon.
pub const LOADED_WORDS: [&str; 24] = [
    "corrupt",
    "disgraceful",
    "catastrophic",
    "evil",
    "shameful",
    "outrageous",
    "criminal",
    "dangerous",
    "devastating",
    "fraudulent",
    "despicable",
    "fake",
    "dishonest",
    "appalling",
    "absurd",
    "awful",
    "blatant",
    "cowardly",
    "deceitful",
    "disgusting",
    "horrible",
    "pathetic",
    "ludicrous",
    "shocking",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerRates {
    /// Expected count per document for propaganda documents.
    pub propaganda: f64,
    /// Expected count per document for other documents.
    pub other: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub propaganda_share: f64,
    pub seed: u64,
    pub sentences: (usize, usize),
    pub loaded_words: MarkerRates,
    pub exclamations: MarkerRates,
    pub caps_words: MarkerRates,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_docs: 5000,
            propaganda_share: 0.5,
            seed: 42,
            sentences: (6, 14),
            loaded_words: MarkerRates {
                propaganda: 7.0,
                other: 1.0,
            },
            exclamations: MarkerRates {
                propaganda: 2.5,
                other: 0.2,
            },
            caps_words: MarkerRates {
                propaganda: 2.0,
                other: 0.15,
            },
        }
    }
}

fn poisson(rate: f64, rng: &mut ChaCha8Rng) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as usize
}

fn sentence(topic: &[&str], rng: &mut ChaCha8Rng) -> Vec<String> {
    let noun = |rng: &mut ChaCha8Rng| topic.choose(rng).expect("non-empty").to_string();
    let pick = |list: &[&str], rng: &mut ChaCha8Rng| list.choose(rng).expect("non-empty").to_string();
    let mut words: Vec<String> = Vec::new();
    match rng.random_range(0..4) {
        0 => {
            words.extend([
                "The".into(),
                pick(&ADJECTIVES, rng),
                noun(rng),
                pick(&VERBS, rng),
                "the".into(),
                noun(rng),
            ]);
            words.extend(["in".into(), pick(&PLACES, rng)]);
        }
        1 => {
            words.extend([
                "Officials".into(),
                "in".into(),
                pick(&PLACES, rng),
                pick(&VERBS, rng),
                "a".into(),
            ]);
            words.extend([pick(&ADJECTIVES, rng), noun(rng), "on".into(), pick(&DAYS, rng)]);
        }
        2 => {
            words.extend([
                "A".into(),
                noun(rng),
                "and".into(),
                "the".into(),
                noun(rng),
                "were".into(),
            ]);
            words.extend([
                pick(&VERBS, rng),
                "after".into(),
                "the".into(),
                pick(&ADJECTIVES, rng),
                noun(rng),
            ]);
        }
        _ => {
            words.extend([
                "On".into(),
                pick(&DAYS, rng),
                "the".into(),
                noun(rng),
                "was".into(),
                pick(&VERBS, rng),
            ]);
            words.extend(["by".into(), "the".into(), noun(rng), "from".into(), pick(&PLACES, rng)]);
        }
    }
    words
}

fn document(propaganda: bool, config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> String {
    let rate = |m: MarkerRates| if propaganda { m.propaganda } else { m.other };
    let topic = TOPICS[rng.random_range(0..TOPICS.len())];
    let n_sentences = rng.random_range(config.sentences.0..=config.sentences.1);
    let mut sentences: Vec<Vec<String>> = (0..n_sentences).map(|_| sentence(topic, rng)).collect();

    for _ in 0..poisson(rate(config.loaded_words), rng) {
        let s = rng.random_range(0..sentences.len());
        let at = rng.random_range(1..sentences[s].len());
        let word = LOADED_WORDS.choose(rng).expect("non-empty").to_string();
        sentences[s].insert(at, word);
    }
    for _ in 0..poisson(rate(config.caps_words), rng) {
        let s = rng.random_range(0..sentences.len());
        let at = rng.random_range(0..sentences[s].len());
        sentences[s][at] = sentences[s][at].to_uppercase();
    }
    let mut ends = vec!['.'; sentences.len()];
    for _ in 0..poisson(rate(config.exclamations), rng) {
        let s = rng.random_range(0..sentences.len());
        ends[s] = '!';
    }
    sentences
        .iter()
        .zip(ends)
        .map(|(words, end)| format!("{}{end}", words.join(" ")))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Generates the corpus. Labels are assigned by a stratified count, so
/// exactly `round(n_docs · propaganda_share)` documents are propaganda,
/// then the order is shuffled.
pub fn generate(config: &SyntheticConfig) -> Result<Vec<LabeledDoc>> {
    if config.n_docs < 2 {
        return Err(Error::InvalidInput(
            "synthetic corpus needs at least 2 documents".into(),
        ));
    }
    if !(config.propaganda_share > 0.0 && config.propaganda_share < 1.0) {
        return Err(Error::InvalidInput("propaganda_share must be in (0, 1)".into()));
    }
    if config.sentences.0 == 0 || config.sentences.0 > config.sentences.1 {
        return Err(Error::InvalidInput(
            "sentence range must be non-empty and positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_pos = ((config.n_docs as f64 * config.propaganda_share).round() as usize).clamp(1, config.n_docs - 1);
    let mut labels: Vec<bool> = (0..config.n_docs).map(|i| i < n_pos).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    Ok(labels
        .into_iter()
        .map(|propaganda| LabeledDoc {
            text: document(propaganda, config, &mut rng),
            label: Label::from(propaganda),
        })
        .collect())
}
