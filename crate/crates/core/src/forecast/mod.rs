//! Trajectory forecasting from a post and its top-level comment.

pub mod eval;
pub mod features;
pub mod gbt;
pub mod lda;
pub mod ridge;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use eval::{
    category_mse, evaluate_regression, half_scores, half_split_analysis, half_stratum, ks_statistic,
    ks_two_sample, CategoryRow, HalfSplitReport, HalfStratum, RegressionReport, StratumRow,
};
pub use features::{
    build_features, feature_names, parse_gender_lookup, post_text, FeatureModels, ForecastFeatures, Gender,
    SubredditEmbeddings, EMBEDDING_DIM,
};
pub use gbt::{gbt_fit, GbtModel, GbtParams, Tree, TreeNode};
pub use lda::{lda_fit, lda_tokens, LdaModel, LdaParams};
pub use ridge::{ridge_fit, RidgeModel, DEFAULT_RIDGE_LAMBDA};

use crate::corpus::Conversation;
use crate::error::{Error, Result};
use crate::textlex::StopWords;

pub const BUNDLE_FORMAT: &str = "prosocial-forecaster";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecasterKind {
    Mean,
    Ridge,
    Gbt,
}

impl ForecasterKind {
    pub const ALL: [ForecasterKind; 3] = [ForecasterKind::Mean, ForecasterKind::Ridge, ForecasterKind::Gbt];

    pub fn name(self) -> &'static str {
        match self {
            ForecasterKind::Mean => "mean",
            ForecasterKind::Ridge => "ridge",
            ForecasterKind::Gbt => "gbt",
        }
    }
}

/// Fitted feature extractors and all three forecasters, stored together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastBundle {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub features: FeatureModels,
    pub baseline_mean: f64,
    pub ridge: RidgeModel,
    pub gbt: GbtModel,
}

impl ForecastBundle {
    pub fn predict(&self, kind: ForecasterKind, x: &[f64]) -> f64 {
        match kind {
            ForecasterKind::Mean => self.baseline_mean,
            ForecasterKind::Ridge => self.ridge.predict(x),
            ForecasterKind::Gbt => self.gbt.predict(x),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut b: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
        if b.format != BUNDLE_FORMAT || b.version != BUNDLE_VERSION {
            return Err(Error::Config(format!("{source}: expected {BUNDLE_FORMAT} version {BUNDLE_VERSION}")));
        }
        let expected = feature_names(b.features.post_lda.topics(), b.features.tlc_lda.topics());
        if b.feature_names != expected {
            return Err(Error::Manifest {
                expected,
                found: b.feature_names,
            });
        }
        b.features.reindex();
        Ok(b)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&crate::resources::read_text(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Fits the post and TLC topic models over the given conversations.
pub fn fit_feature_models(
    convs: &[Conversation],
    stopwords: &StopWords,
    lda: LdaParams,
    embeddings: SubredditEmbeddings,
    genders: BTreeMap<String, Gender>,
    seed: u64,
) -> Result<FeatureModels> {
    // one document per distinct post
    let mut posts: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for c in convs {
        posts
            .entry(c.post.id.as_str())
            .or_insert_with(|| lda_tokens(&post_text(&c.post), stopwords));
    }
    let post_docs: Vec<Vec<String>> = posts.into_values().collect();
    let tlc_docs: Vec<Vec<String>> = convs.iter().map(|c| lda_tokens(&c.tlc.body, stopwords)).collect();
    Ok(FeatureModels {
        post_lda: lda_fit(&post_docs, lda, seed)?,
        tlc_lda: lda_fit(&tlc_docs, lda, seed.wrapping_add(1))?,
        embeddings,
        genders,
        seed,
    })
}

/// Trains the baseline, ridge and boosted forecasters.
pub fn train_forecasters(
    features: FeatureModels,
    train: (&[Vec<f64>], &[f64]),
    dev: (&[Vec<f64>], &[f64]),
    ridge_lambda: f64,
    gbt: &GbtParams,
    seed: u64,
) -> Result<ForecastBundle> {
    if train.0.is_empty() {
        return Err(Error::Argument("no training rows for the forecasters".into()));
    }
    let names = feature_names(features.post_lda.topics(), features.tlc_lda.topics());
    if train.0.iter().chain(dev.0).any(|r| r.len() != names.len()) {
        return Err(Error::Argument(format!("feature rows must have width {}", names.len())));
    }
    Ok(ForecastBundle {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        feature_names: names,
        baseline_mean: train.1.iter().sum::<f64>() / train.1.len() as f64,
        ridge: ridge_fit(train.0, train.1, ridge_lambda)?,
        gbt: gbt_fit(train.0, train.1, gbt, dev, seed)?,
        features,
    })
}
