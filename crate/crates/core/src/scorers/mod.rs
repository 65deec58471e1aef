//! Comment-level scorers: n-gram logistic classifiers, politeness and
//! supportiveness regressors, and toxicity.

pub mod labeling;
pub mod ngram;
pub mod regressor;
pub mod toxicity;

use crate::error::{Error, Result};
use crate::resources::parse_term_values;
use crate::textlex::{tokenize, PhraseMatcher, TokenizedText};

pub use labeling::{heuristic_label_corpus, LabelRules, LabelTask, LabeledCorpus};
pub use ngram::{classify_text, train_ngram_classifier, NgramLogisticModel, TrainOptions};
pub use regressor::{LinearTextRegressor, RegressorKind, TextRegressorHandle};
pub use toxicity::{
    toxicity_metrics, HttpTransport, ToxicityConfig, ToxicityMetrics, ToxicityScorer, Transport,
};

/// Weighted phrase lexicon; matches are leftmost-longest and non-overlapping.
#[derive(Debug, Clone, Default)]
pub struct PhraseLexicon {
    matcher: PhraseMatcher,
    weights: Vec<f64>,
}

impl PhraseLexicon {
    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let pairs = parse_term_values(text, source)?;
        if pairs.iter().any(|(t, _)| tokenize(t).is_empty()) {
            return Err(Error::Config(format!("{source}: lexicon term without word characters")));
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn from_pairs<I: IntoIterator<Item = (S, f64)>, S: AsRef<str>>(pairs: I) -> Self {
        let (terms, weights): (Vec<String>, Vec<f64>) =
            pairs.into_iter().map(|(t, w)| (t.as_ref().to_string(), w)).unzip();
        Self {
            matcher: PhraseMatcher::new(&terms),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum of matched weights.
    pub fn hits(&self, text: &TokenizedText) -> f64 {
        self.matcher
            .find_all(text)
            .iter()
            .map(|m| self.weights[m.phrase])
            .sum()
    }

    /// `h / (|h| + 1)`, in (-1, 1).
    pub fn signed_score(&self, text: &str) -> f64 {
        let h = self.hits(&tokenize(text));
        (h / (h.abs() + 1.0)).clamp(-1.0, 1.0)
    }

    /// `h / (h + 1)` over non-negative hit mass, in [0, 1).
    pub fn saturating_score(&self, text: &str) -> f64 {
        let h = self.hits(&tokenize(text)).max(0.0);
        h / (h + 1.0)
    }
}

/// Unigram and bigram counts of a token sequence, as `"w"` and `"w1 w2"`.
pub fn ngram_counts(tokens: &[String]) -> std::collections::HashMap<String, f64> {
    let mut out = std::collections::HashMap::new();
    for t in tokens {
        *out.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    for w in tokens.windows(2) {
        *out.entry(format!("{} {}", w[0], w[1])).or_insert(0.0) += 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phrase_lexicon_scores() {
        let lex = PhraseLexicon::from_pairs([("please", 1.0), ("thank you", 1.0), ("shut up", -2.0)]);
        assert_eq!(lex.signed_score(""), 0.0);
        assert_eq!(lex.signed_score("please"), 0.5);
        assert!((lex.signed_score("shut up") - -2.0 / 3.0).abs() < 1e-12);
        assert_eq!(lex.saturating_score("shut up"), 0.0);
        assert_eq!(lex.saturating_score("please please please"), 0.75);
    }

    #[test]
    fn ngram_counts_include_bigrams() {
        let toks: Vec<String> = ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let c = ngram_counts(&toks);
        assert_eq!(c["a"], 2.0);
        assert_eq!(c["a b"], 2.0);
        assert_eq!(c["b a"], 1.0);
    }
}
