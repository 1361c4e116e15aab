//! Propaganda index: a fitted feature pipeline plus logistic weights.

mod format;
pub mod logistic;

use serde::{Deserialize, Serialize};

use crate::corpus::scoring_document;
use crate::error::{Error, Result};
use crate::features::lexicon::Lexicon;
use crate::features::{FeatureConfig, FeatureFamily, FeaturePipeline, FeatureVector};
pub use format::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use logistic::{LogisticFit, StopReason, TrainOptions, DEFAULT_L2_LAMBDA};

/// Largest `f64` strictly below one.
const INDEX_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredArticle {
    pub article_id: String,
    pub propaganda_index: f64,
    pub bin: u8,
}

impl ScoredArticle {
    pub fn new(article_id: impl Into<String>, propaganda_index: f64) -> Result<Self> {
        Ok(ScoredArticle {
            article_id: article_id.into(),
            propaganda_index,
            bin: bin(propaganda_index)?,
        })
    }
}

/// Five equal-width, left-inclusive bins; `1.0` falls in bin 5.
pub fn bin(p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("propaganda index {p} is outside [0, 1]")));
    }
    Ok(((p * 5.0).floor() as u8 + 1).min(5))
}

/// `σ(z)` kept strictly inside `(0, 1)`.
pub fn index_from_logit(z: f64) -> f64 {
    logistic::sigmoid(z).clamp(f64::MIN_POSITIVE, INDEX_MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyContribution {
    pub family: FeatureFamily,
    pub value: f64,
}

/// Full scoring result for one document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Score {
    pub propaganda_index: f64,
    pub bin: u8,
    pub logit: f64,
    pub bias: f64,
    /// `w·x` restricted to each enabled family; these plus `bias` sum to
    /// `logit`.
    pub family_contributions: Vec<FamilyContribution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub pipeline: FeaturePipeline,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub version: u32,
}

impl Model {
    pub fn new(pipeline: FeaturePipeline, weights: Vec<f64>, bias: f64, l2_lambda: f64) -> Result<Self> {
        if weights.len() != pipeline.width() {
            return Err(Error::DimensionMismatch {
                expected: pipeline.width(),
                actual: weights.len(),
            });
        }
        if !(l2_lambda.is_finite() && l2_lambda > 0.0) {
            return Err(Error::Config(format!("l2_lambda must be positive, got {l2_lambda}")));
        }
        Ok(Model {
            pipeline,
            weights,
            bias,
            l2_lambda,
            version: MODEL_FORMAT_VERSION,
        })
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn logit(&self, x: &FeatureVector) -> Result<f64> {
        if x.width != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: x.width,
            });
        }
        Ok(x.dot(&self.weights) + self.bias)
    }

    pub fn predict_index(&self, x: &FeatureVector) -> Result<f64> {
        self.logit(x).map(index_from_logit)
    }

    pub fn family_contributions(&self, x: &FeatureVector) -> Result<Vec<FamilyContribution>> {
        if x.width != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: x.width,
            });
        }
        let flags = self.pipeline.flags();
        Ok(self
            .pipeline
            .family_spans()
            .into_iter()
            .filter(|span| flags.enabled(span.family))
            .map(|span| {
                let value = x
                    .indices
                    .iter()
                    .zip(&x.values)
                    .filter(|(i, _)| span.columns.contains(i))
                    .map(|(&i, &v)| self.weights[i] * v)
                    .sum();
                FamilyContribution {
                    family: span.family,
                    value,
                }
            })
            .collect())
    }

    /// Scores an already assembled document text.
    pub fn score(&self, document: &str) -> Result<Score> {
        let x = self.pipeline.assemble(document)?;
        let logit = self.logit(&x)?;
        let propaganda_index = index_from_logit(logit);
        Ok(Score {
            propaganda_index,
            bin: bin(propaganda_index)?,
            logit,
            bias: self.bias,
            family_contributions: self.family_contributions(&x)?,
        })
    }

    /// Scores an article given its optional title and body.
    pub fn score_article(&self, title: Option<&str>, text: &str) -> Result<Score> {
        self.score(&scoring_document(title, text))
    }

    pub fn predict_text(&self, document: &str) -> Result<f64> {
        let x = self.pipeline.assemble(document)?;
        self.predict_index(&x)
    }

    /// Hex SHA-256 of the serialized model file. Any change to weights,
    /// vocabularies or configuration changes it.
    pub fn fingerprint(&self) -> String {
        format::content_fingerprint(self)
    }

    /// Hex SHA-256 of the configuration section only: feature flags,
    /// vectorizer settings, lexicons and the regularization strength.
    pub fn config_fingerprint(&self) -> String {
        format::config_fingerprint(self)
    }
}

/// Fits the feature pipeline on `documents` and trains the classifier.
pub fn train_model<S: AsRef<str> + Sync>(
    documents: &[S],
    labels: &[bool],
    features: FeatureConfig,
    lexicons: Vec<Lexicon>,
    options: &TrainOptions,
) -> Result<(Model, LogisticFit)> {
    if documents.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} documents but {} labels",
            documents.len(),
            labels.len()
        )));
    }
    let pipeline = FeaturePipeline::fitted(features, lexicons, documents)?;
    let xs = pipeline.assemble_all(documents)?;
    let fit = logistic::fit(&xs, labels, options)?;
    let model = Model::new(pipeline, fit.weights.clone(), fit.bias, options.l2_lambda)?;
    Ok((model, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::lexicon::shipped;
    use crate::features::FamilyFlags;

    #[test]
    fn bin_boundaries() {
        let cases = [
            (0.0, 1),
            (0.1999, 1),
            (0.2, 2),
            (0.4, 3),
            (0.6, 4),
            (0.79, 4),
            (0.8, 5),
            (1.0, 5),
        ];
        for (p, b) in cases {
            assert_eq!(bin(p).unwrap(), b, "{p}");
        }
        assert!(bin(-0.01).is_err());
        assert!(bin(1.01).is_err());
        assert!(bin(f64::NAN).is_err());
    }

    #[test]
    fn index_is_strictly_inside_unit_interval() {
        for z in [-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6] {
            let p = index_from_logit(z);
            assert!(p > 0.0 && p < 1.0, "{z} -> {p}");
        }
        assert!((index_from_logit(3f64.ln()) - 0.75).abs() < 1e-15);
    }

    fn tiny_model() -> Model {
        let docs = [
            "Traitors and liars destroy our glorious nation! Wake up!",
            "The council approved the budget on Tuesday.",
            "Corrupt elites betray the nation again! Shocking!",
            "The committee published its annual report on Tuesday.",
        ];
        let (model, _) = train_model(
            &docs,
            &[true, false, true, false],
            FeatureConfig {
                flags: FamilyFlags::ALL,
                min_df: 1,
            },
            shipped::default_set(),
            &TrainOptions::default(),
        )
        .unwrap();
        model
    }

    #[test]
    fn zero_model_scores_one_half() {
        let mut model = tiny_model();
        model.weights.iter_mut().for_each(|w| *w = 0.0);
        model.bias = 0.0;
        assert_eq!(model.predict_text("anything at all").unwrap(), 0.5);
    }

    #[test]
    fn contributions_plus_bias_equal_logit() {
        let model = tiny_model();
        let s = model
            .score_article(Some("Shocking"), "The nation is betrayed by liars!")
            .unwrap();
        let total: f64 = s.family_contributions.iter().map(|c| c.value).sum::<f64>() + s.bias;
        assert!((total - s.logit).abs() < 1e-9);
        let p = s.propaganda_index;
        assert!(((p / (1.0 - p)).ln() - s.logit).abs() < 1e-9);
        assert_eq!(s.family_contributions.len(), 4);
        assert_eq!(s.bin, bin(p).unwrap());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let model = tiny_model();
        let x = FeatureVector::from_dense(&[1.0]);
        assert!(matches!(model.predict_index(&x), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn positive_weight_feature_is_monotone() {
        let model = tiny_model();
        let x = model.pipeline.assemble("Traitors betray the nation!").unwrap();
        let (k, _) = model
            .weights
            .iter()
            .enumerate()
            .find(|(_, w)| **w > 0.0)
            .expect("some positive weight");
        let mut dense = x.to_dense();
        let before = model.predict_index(&x).unwrap();
        dense[k] += 1.0;
        let bumped = FeatureVector::from_dense(&dense);
        assert!(model.predict_index(&bumped).unwrap() >= before);
    }
}
