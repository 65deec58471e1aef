use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ngram_counts, PhraseLexicon};
use crate::error::{Error, Result};
use crate::resources::read_text;
use crate::textlex::tokenize;

pub const REGRESSOR_FORMAT: &str = "prosocial-text-regressor";
pub const REGRESSOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Politeness,
    Supportiveness,
}

impl RegressorKind {
    pub fn name(self) -> &'static str {
        match self {
            RegressorKind::Politeness => "politeness",
            RegressorKind::Supportiveness => "supportiveness",
        }
    }
}

/// Linear model over unigram/bigram counts, loaded from a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTextRegressor {
    pub format: String,
    pub version: u32,
    pub kind: RegressorKind,
    pub bias: f64,
    pub weights: BTreeMap<String, f64>,
}

impl LinearTextRegressor {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let model: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
        if model.format != REGRESSOR_FORMAT || model.version != REGRESSOR_VERSION {
            return Err(Error::Config(format!(
                "{source}: expected {REGRESSOR_FORMAT} version {REGRESSOR_VERSION}, found {} version {}",
                model.format, model.version
            )));
        }
        if !model.bias.is_finite() || model.weights.values().any(|w| !w.is_finite()) {
            return Err(Error::Config(format!("{source}: non-finite weight")));
        }
        Ok(model)
    }

    pub fn predict(&self, text: &str) -> f64 {
        let counts = ngram_counts(&tokenize(text).tokens);
        let z: f64 = counts
            .iter()
            .filter_map(|(g, c)| self.weights.get(g).map(|w| w * c))
            .sum();
        (self.bias + z).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    External(LinearTextRegressor),
    Lexicon(PhraseLexicon),
}

/// Politeness or supportiveness scorer with output in [-1, 1].
#[derive(Debug, Clone)]
pub struct TextRegressorHandle {
    kind: RegressorKind,
    backend: Backend,
}

impl TextRegressorHandle {
    pub fn lexicon(kind: RegressorKind, lexicon: PhraseLexicon) -> Self {
        Self {
            kind,
            backend: Backend::Lexicon(lexicon),
        }
    }

    pub fn external(model: LinearTextRegressor) -> Self {
        Self {
            kind: model.kind,
            backend: Backend::External(model),
        }
    }

    /// Loads the model file when one is configured. A missing or invalid
    /// file is an error unless `allow_fallback` is set.
    pub fn configure(
        kind: RegressorKind,
        model_path: Option<&Path>,
        allow_fallback: bool,
        lexicon: &PhraseLexicon,
    ) -> Result<Self> {
        let Some(path) = model_path else {
            return Ok(Self::lexicon(kind, lexicon.clone()));
        };
        let loaded = read_text(path).and_then(|t| LinearTextRegressor::parse(&t, &path.display().to_string()));
        match loaded {
            Ok(m) if m.kind == kind => Ok(Self::external(m)),
            Ok(m) => Err(Error::Config(format!(
                "{}: model is for {}, expected {}",
                path.display(),
                m.kind.name(),
                kind.name()
            ))),
            Err(_) if allow_fallback => Ok(Self::lexicon(kind, lexicon.clone())),
            Err(e) => Err(e),
        }
    }

    pub fn kind(&self) -> RegressorKind {
        self.kind
    }

    pub fn backend_name(&self) -> &'static str {
        match self.backend {
            Backend::External(_) => "external",
            Backend::Lexicon(_) => "lexicon",
        }
    }

    pub fn score(&self, text: &str) -> f64 {
        match &self.backend {
            Backend::External(m) => m.predict(text),
            Backend::Lexicon(l) => l.signed_score(text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#"
format = "prosocial-text-regressor"
version = 1
kind = "politeness"
bias = 0.1
[weights]
please = 0.5
"thank you" = 0.7
"#;

    #[test]
    fn external_model_is_clamped() {
        let m = LinearTextRegressor::parse(MODEL, "m").unwrap();
        assert!((m.predict("please") - 0.6).abs() < 1e-12);
        assert_eq!(m.predict("please thank you"), 1.0);
        assert!((m.predict("") - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fallback_lexicon() {
        let lex = PhraseLexicon::from_pairs([("please", 1.0)]);
        let h = TextRegressorHandle::configure(RegressorKind::Politeness, None, false, &lex).unwrap();
        assert_eq!(h.score(""), 0.0);
        assert_eq!(h.score("please"), 0.5);
    }

    #[test]
    fn missing_model_file() {
        let lex = PhraseLexicon::default();
        let p = Path::new("/nonexistent/model.toml");
        assert!(matches!(
            TextRegressorHandle::configure(RegressorKind::Politeness, Some(p), false, &lex),
            Err(Error::Io { .. })
        ));
        let h = TextRegressorHandle::configure(RegressorKind::Politeness, Some(p), true, &lex).unwrap();
        assert_eq!(h.backend_name(), "lexicon");
    }

    #[test]
    fn kind_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        std::fs::write(&p, MODEL).unwrap();
        let lex = PhraseLexicon::default();
        assert!(TextRegressorHandle::configure(RegressorKind::Supportiveness, Some(&p), false, &lex).is_err());
    }
}
