//! Rule-based valence scoring compatible with the VADER lexicon format, and
//! lexicon-mean subjectivity.

use std::collections::{HashMap, HashSet};

use super::{tokenize, TokenizedText};
use crate::error::Result;
use crate::resources::{parse_term_values, parse_word_list};

pub const NORMALIZATION_ALPHA: f64 = 15.0;
pub const NEGATION_FACTOR: f64 = -0.74;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 3;

/// Booster damping by distance (1, 2, 3 tokens back).
const BOOSTER_DAMPING: [f64; 3] = [1.0, 0.95, 0.9];

#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    valence: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negators: HashSet<String>,
}

impl SentimentLexicon {
    pub fn new(
        valence: HashMap<String, f64>,
        boosters: HashMap<String, f64>,
        negators: HashSet<String>,
    ) -> Self {
        Self {
            valence,
            boosters,
            negators,
        }
    }

    pub fn from_texts(
        valence: &str,
        valence_source: &str,
        boosters: &str,
        boosters_source: &str,
        negators: &str,
    ) -> Result<Self> {
        let valence = parse_term_values(valence, valence_source)?
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        let boosters = parse_term_values(boosters, boosters_source)?
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        let negators = parse_word_list(negators)
            .into_iter()
            .map(|w| w.to_lowercase().replace('\'', ""))
            .collect();
        Ok(Self::new(valence, boosters, negators))
    }

    pub fn valence(&self, word: &str) -> Option<f64> {
        self.valence.get(word).copied()
    }

    pub fn booster(&self, word: &str) -> Option<f64> {
        self.boosters.get(word).copied()
    }

    pub fn is_negator(&self, word: &str) -> bool {
        word.ends_with("n't") || self.negators.contains(&word.replace('\'', ""))
    }
}

fn is_all_caps(word: &str) -> bool {
    word.chars().any(char::is_alphabetic) && !word.chars().any(char::is_lowercase)
}

fn normalize(sum: f64) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    (sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Sum of rule-adjusted valences over `words` (lowercased tokens paired with
/// their surface forms).
fn valence_sum(words: &[(&str, &str)], lexicon: &SentimentLexicon) -> f64 {
    let caps = words.iter().filter(|(_, s)| is_all_caps(s)).count();
    let cap_differential = caps > 0 && caps < words.len();

    let mut total = 0.0;
    for (i, (word, surface)) in words.iter().enumerate() {
        if lexicon.booster(word).is_some() {
            continue;
        }
        let Some(mut v) = lexicon.valence(word) else {
            continue;
        };
        if cap_differential && is_all_caps(surface) {
            v += CAPS_INCREMENT * v.signum();
        }
        for back in 0..3 {
            if i <= back {
                break;
            }
            let (prev, prev_surface) = words[i - back - 1];
            if lexicon.valence(prev).is_some() {
                continue;
            }
            if let Some(mut scalar) = lexicon.booster(prev) {
                if v < 0.0 {
                    scalar = -scalar;
                }
                if cap_differential && is_all_caps(prev_surface) {
                    scalar += CAPS_INCREMENT * v.signum();
                }
                v += scalar * BOOSTER_DAMPING[back];
            }
            if lexicon.is_negator(prev) {
                v *= NEGATION_FACTOR;
            }
        }
        total += v;
    }
    total
}

/// Compound valence in (-1, 1) of the whole text.
pub fn sentiment_compound(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let tokenized = tokenize(text);
    compound_from_tokens(&tokenized, text, lexicon)
}

pub(crate) fn compound_from_tokens(
    tokenized: &TokenizedText,
    raw: &str,
    lexicon: &SentimentLexicon,
) -> f64 {
    let words: Vec<(&str, &str)> = (0..tokenized.len())
        .map(|i| (tokenized.tokens[i].as_str(), tokenized.surface(i)))
        .collect();
    let mut sum = valence_sum(&words, lexicon);
    if sum != 0.0 {
        let bangs = raw.chars().filter(|&c| c == '!').count().min(MAX_EXCLAMATIONS);
        sum += sum.signum() * bangs as f64 * EXCLAMATION_INCREMENT;
    }
    normalize(sum)
}

/// Compound valence of an already-tokenized word window (lowercase, no
/// punctuation amplification).
pub fn sentiment_compound_words(words: &[&str], lexicon: &SentimentLexicon) -> f64 {
    let pairs: Vec<(&str, &str)> = words.iter().map(|w| (*w, *w)).collect();
    normalize(valence_sum(&pairs, lexicon))
}

#[derive(Debug, Clone, Default)]
pub struct SubjectivityLexicon(HashMap<String, f64>);

impl SubjectivityLexicon {
    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (k, v) in parse_term_values(text, source)? {
            if !(0.0..=1.0).contains(&v) {
                return Err(crate::Error::Config(format!(
                    "{source}: subjectivity for `{k}` outside [0,1]"
                )));
            }
            map.insert(k.to_lowercase(), v);
        }
        Ok(Self(map))
    }

    pub fn from_pairs<I: IntoIterator<Item = (S, f64)>, S: Into<String>>(pairs: I) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.0.get(word).copied()
    }
}

/// Mean subjectivity over matched tokens; 0 when nothing matches.
pub fn subjectivity_score(text: &str, lexicon: &SubjectivityLexicon) -> f64 {
    let hits: Vec<f64> = tokenize(text)
        .tokens
        .iter()
        .filter_map(|t| lexicon.get(t))
        .collect();
    if hits.is_empty() {
        0.0
    } else {
        hits.iter().sum::<f64>() / hits.len() as f64
    }
}
