//! Plain-text data files and the bundled defaults shipped in `data/`.
//!
//! Every data file is UTF-8; blank lines and lines starting with `#` are
//! ignored. Term/value files are `term<TAB>value`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accommodation::MarkerCatalog;
use crate::corpus::BotList;
use crate::error::{Error, Result};
use crate::metrics::lexical::DomainLists;
use crate::scorers::PhraseLexicon;
use crate::textlex::{Dictionary, SentimentLexicon, StopWords, SubjectivityLexicon};

pub(crate) mod bundled {
    pub const VALENCE: &str = include_str!("../data/sentiment_valence.tsv");
    pub const BOOSTERS: &str = include_str!("../data/sentiment_boosters.tsv");
    pub const NEGATORS: &str = include_str!("../data/negators.txt");
    pub const SUBJECTIVITY: &str = include_str!("../data/subjectivity.tsv");
    pub const DICTIONARY: &str = include_str!("../data/dictionary.txt");
    pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");
    pub const EDUCATIONAL: &str = include_str!("../data/educational_domains.txt");
    pub const DONATION: &str = include_str!("../data/donation_domains.txt");
    pub const MARKERS: &str = include_str!("../data/markers.tsv");
    pub const POLITENESS: &str = include_str!("../data/politeness.tsv");
    pub const SUPPORTIVENESS: &str = include_str!("../data/supportiveness.tsv");
    pub const TOXICITY: &str = include_str!("../data/toxicity_fallback.tsv");
    pub const BOTS: &str = include_str!("../data/bots.txt");
    pub const CATEGORIES: &str = include_str!("../data/categories.tsv");
    pub const ASK_SUBREDDITS: &str = include_str!("../data/ask_subreddits.txt");
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// One entry per non-comment line, trimmed.
pub fn parse_word_list(text: &str) -> Vec<String> {
    content_lines(text).map(|(_, l)| l.trim().to_string()).collect()
}

/// `key<TAB>value` pairs with the value kept as text.
pub fn parse_pairs(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    content_lines(text)
        .map(|(line, l)| {
            let (k, v) = l.split_once('\t').ok_or_else(|| {
                Error::Config(format!("{source}:{line}: expected `term<TAB>value`"))
            })?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// `term<TAB>number` pairs; values must be finite.
pub fn parse_term_values(text: &str, source: &str) -> Result<Vec<(String, f64)>> {
    parse_pairs(text, source)?
        .into_iter()
        .map(|(k, v)| {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::Config(format!("{source}: `{v}` is not a number (term `{k}`)")))?;
            if !x.is_finite() {
                return Err(Error::Config(format!("{source}: non-finite value for `{k}`")));
            }
            Ok((k, x))
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Optional overrides for the data files; unset entries use the bundled copy.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub sentiment_valence: Option<PathBuf>,
    pub sentiment_boosters: Option<PathBuf>,
    pub negators: Option<PathBuf>,
    pub subjectivity: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub educational_domains: Option<PathBuf>,
    pub donation_domains: Option<PathBuf>,
    pub markers: Option<PathBuf>,
    pub politeness: Option<PathBuf>,
    pub supportiveness: Option<PathBuf>,
    pub toxicity_fallback: Option<PathBuf>,
    pub bots: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub ask_subreddits: Option<PathBuf>,
}

impl ResourcePaths {
    /// Every configured path, for up-front existence checks.
    pub fn configured(&self) -> Vec<&Path> {
        [
            &self.sentiment_valence,
            &self.sentiment_boosters,
            &self.negators,
            &self.subjectivity,
            &self.dictionary,
            &self.stopwords,
            &self.educational_domains,
            &self.donation_domains,
            &self.markers,
            &self.politeness,
            &self.supportiveness,
            &self.toxicity_fallback,
            &self.bots,
            &self.categories,
            &self.ask_subreddits,
        ]
        .into_iter()
        .filter_map(|p| p.as_deref())
        .collect()
    }
}

fn load_or(path: &Option<PathBuf>, fallback: &'static str) -> Result<(String, String)> {
    match path {
        Some(p) => Ok((read_text(p)?, p.display().to_string())),
        None => Ok((fallback.to_string(), "<bundled>".to_string())),
    }
}

/// All immutable lexical resources used by the metric modules.
#[derive(Debug, Clone)]
pub struct Resources {
    pub sentiment: SentimentLexicon,
    pub subjectivity: SubjectivityLexicon,
    pub dictionary: Dictionary,
    pub stopwords: StopWords,
    pub domains: DomainLists,
    pub markers: MarkerCatalog,
    pub politeness: PhraseLexicon,
    pub supportiveness: PhraseLexicon,
    pub toxicity_fallback: PhraseLexicon,
    pub bots: BotList,
    pub categories: Vec<(String, String)>,
    pub ask_subreddits: Vec<String>,
}

impl Resources {
    pub fn bundled() -> Self {
        Self::load(&ResourcePaths::default()).expect("bundled data files are valid")
    }

    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        let (valence, vs) = load_or(&paths.sentiment_valence, bundled::VALENCE)?;
        let (boosters, bs) = load_or(&paths.sentiment_boosters, bundled::BOOSTERS)?;
        let (negators, _) = load_or(&paths.negators, bundled::NEGATORS)?;
        let sentiment = SentimentLexicon::from_texts(&valence, &vs, &boosters, &bs, &negators)?;

        let (subj, ss) = load_or(&paths.subjectivity, bundled::SUBJECTIVITY)?;
        let subjectivity = SubjectivityLexicon::from_text(&subj, &ss)?;

        let (dict, _) = load_or(&paths.dictionary, bundled::DICTIONARY)?;
        let (stop, _) = load_or(&paths.stopwords, bundled::STOPWORDS)?;
        let (edu, _) = load_or(&paths.educational_domains, bundled::EDUCATIONAL)?;
        let (don, _) = load_or(&paths.donation_domains, bundled::DONATION)?;
        let domains = DomainLists::new(parse_word_list(&edu), parse_word_list(&don))?;

        let (markers, ms) = load_or(&paths.markers, bundled::MARKERS)?;
        let (pol, ps) = load_or(&paths.politeness, bundled::POLITENESS)?;
        let (sup, sps) = load_or(&paths.supportiveness, bundled::SUPPORTIVENESS)?;
        let (tox, ts) = load_or(&paths.toxicity_fallback, bundled::TOXICITY)?;
        let (bots, _) = load_or(&paths.bots, bundled::BOTS)?;
        let (cats, cs) = load_or(&paths.categories, bundled::CATEGORIES)?;
        let (ask, _) = load_or(&paths.ask_subreddits, bundled::ASK_SUBREDDITS)?;

        Ok(Self {
            sentiment,
            subjectivity,
            dictionary: Dictionary::from_text(&dict),
            stopwords: StopWords::from_text(&stop),
            domains,
            markers: MarkerCatalog::from_text(&markers, &ms)?,
            politeness: PhraseLexicon::from_text(&pol, &ps)?,
            supportiveness: PhraseLexicon::from_text(&sup, &sps)?,
            toxicity_fallback: PhraseLexicon::from_text(&tox, &ts)?,
            bots: BotList::from_text(&bots),
            categories: parse_pairs(&cats, &cs)?,
            ask_subreddits: parse_word_list(&ask),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# header\n\nfoo\t1.5\n  # indented comment\nbar\t-2\n";
        let pairs = parse_term_values(text, "t").unwrap();
        assert_eq!(pairs, vec![("foo".into(), 1.5), ("bar".into(), -2.0)]);
    }

    #[test]
    fn missing_tab_is_a_config_error() {
        assert!(matches!(parse_term_values("foo 1", "t"), Err(Error::Config(_))));
    }

    #[test]
    fn non_numeric_value_rejected() {
        assert!(parse_term_values("foo\tbar", "t").is_err());
        assert!(parse_term_values("foo\tNaN", "t").is_err());
    }

    #[test]
    fn bundled_resources_load() {
        let r = Resources::bundled();
        assert_eq!(r.domains.educational().len(), 17);
        assert_eq!(r.markers.categories().len(), 8);
        assert_eq!(r.ask_subreddits.len(), 18);
    }
}
