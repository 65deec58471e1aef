//! Language primitives shared by every metric: tokenization, sentence
//! splitting, markup stripping, readability, sentiment, subjectivity and
//! misspelling counts.
//!
//! All functions are pure over immutable lexicons.

mod phrase;
mod readability;
mod sentiment;

use std::collections::HashSet;
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

pub use phrase::{PhraseMatch, PhraseMatcher};
pub use readability::{count_syllables, flesch_kincaid_grade};
pub use sentiment::{
    sentiment_compound, sentiment_compound_words, subjectivity_score, SentimentLexicon,
    SubjectivityLexicon, CAPS_INCREMENT, EXCLAMATION_INCREMENT, MAX_EXCLAMATIONS, NEGATION_FACTOR,
    NORMALIZATION_ALPHA,
};

use crate::resources::parse_word_list;

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bhttps?://[^\s<>\[\]()]+").expect("url pattern"));

const URL_TRAILING: &[char] = &['.', ',', '!', '?', ';', ':', '\'', '"', ')', ']', '*', '_', '’'];

/// A tokenized text. Token offsets index into `clean`, which is the input
/// with every URL replaced by spaces of equal byte length.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedText {
    pub raw: String,
    pub clean: String,
    pub tokens: Vec<String>,
    pub offsets: Vec<Range<usize>>,
    pub sentences: Vec<Range<usize>>,
    pub urls: Vec<String>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Original-case surface form of token `i`.
    pub fn surface(&self, i: usize) -> &str {
        &self.clean[self.offsets[i].clone()]
    }

    /// True when only whitespace separates token `i` from token `i + 1`.
    pub fn joined_by_space(&self, i: usize) -> bool {
        let gap = &self.clean[self.offsets[i].end..self.offsets[i + 1].start];
        gap.chars().all(char::is_whitespace)
    }
}

/// Extracts URLs (scheme + host, trailing punctuation trimmed) with their
/// byte ranges.
pub fn extract_urls(text: &str) -> Vec<(Range<usize>, String)> {
    URL_RE
        .find_iter(text)
        .map(|m| {
            let trimmed = m.as_str().trim_end_matches(URL_TRAILING);
            let range = m.start()..m.start() + trimmed.len();
            (range, trimmed.to_string())
        })
        .filter(|(_, u)| u.contains("://") && u.split("://").nth(1).is_some_and(|h| !h.is_empty()))
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

/// Splits `text` into lowercased word tokens (maximal runs of letters, digits
/// and apostrophes, with leading/trailing apostrophes trimmed), sentence
/// spans and URLs. URLs never appear as word tokens.
pub fn tokenize(text: &str) -> TokenizedText {
    let urls = extract_urls(text);
    let mut clean = text.to_string();
    // same byte length, so offsets into `clean` are offsets into `raw`
    for (range, _) in &urls {
        clean.replace_range(range.clone(), &" ".repeat(range.len()));
    }

    let mut tokens = Vec::new();
    let mut offsets = Vec::new();
    let mut sentences = Vec::new();
    let mut sentence_start = 0usize;

    let chars: Vec<(usize, char)> = clean.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if is_word_char(c) {
            let mut j = i;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            let end = if j < chars.len() { chars[j].0 } else { clean.len() };
            let word = &clean[pos..end];
            let lead = word.len() - word.trim_start_matches(is_apostrophe).len();
            let inner = word.trim_matches(is_apostrophe);
            if !inner.is_empty() {
                let start = pos + lead;
                let lowered: String = inner
                    .chars()
                    .flat_map(char::to_lowercase)
                    .map(|c| if c == '’' { '\'' } else { c })
                    .filter(|c| is_word_char(*c))
                    .collect();
                if !lowered.is_empty() {
                    tokens.push(lowered);
                    offsets.push(start..start + inner.len());
                }
            }
            i = j;
        } else if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let at_boundary = j >= chars.len() || chars[j].1.is_whitespace();
            if at_boundary && tokens.len() > sentence_start {
                sentences.push(sentence_start..tokens.len());
                sentence_start = tokens.len();
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if tokens.len() > sentence_start {
        sentences.push(sentence_start..tokens.len());
    }

    TokenizedText {
        raw: text.to_string(),
        clean,
        tokens,
        offsets,
        sentences,
        urls: urls.into_iter().map(|(_, u)| u).collect(),
    }
}

static MD_LINK_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[([^\]]*)\]\([^)]*\)").expect("markdown link pattern"));
static MD_SYMBOL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[*_~`#>|]+|&(amp|lt|gt|nbsp|quot);|\^").expect("markdown symbol pattern"));

/// Removes markdown links (keeping their text), URLs, emphasis/heading/quote
/// symbols and common HTML entities.
pub fn strip_markup(text: &str) -> String {
    let no_links = MD_LINK_RE.replace_all(text, "$1");
    let no_urls = URL_RE.replace_all(&no_links, " ");
    MD_SYMBOL_RE.replace_all(&no_urls, " ").into_owned()
}

/// Whitespace-delimited words after markup stripping.
pub fn word_count(text: &str) -> usize {
    strip_markup(text).split_whitespace().count()
}

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn from_text(text: &str) -> Self {
        Self(parse_word_list(text).into_iter().map(|w| w.to_lowercase()).collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    /// Set of non-stop-word tokens of `text`.
    pub fn content_words(&self, text: &str) -> HashSet<String> {
        tokenize(text)
            .tokens
            .into_iter()
            .filter(|t| !self.contains(t))
            .collect()
    }
}

/// Word list for misspelling detection. Lookups are lowercase and tolerate
/// regular English inflections and contractions.
#[derive(Debug, Clone, Default)]
pub struct Dictionary(HashSet<String>);

const CONTRACTIONS: &[&str] = &["can't", "won't", "ain't", "shan't", "y'all"];

impl Dictionary {
    pub fn from_text(text: &str) -> Self {
        Self(parse_word_list(text).into_iter().map(|w| w.to_lowercase()).collect())
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Self(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains_exact(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn knows(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        if self.0.contains(&w) || CONTRACTIONS.contains(&w.as_str()) {
            return true;
        }
        if let Some(idx) = w.find('\'') {
            let base = w.strip_suffix("n't").unwrap_or(&w[..idx]);
            return !base.is_empty() && (self.0.contains(base) || self.inflected(base));
        }
        self.inflected(&w)
    }

    fn inflected(&self, w: &str) -> bool {
        let mut candidates: Vec<String> = Vec::new();
        if let Some(b) = w.strip_suffix("ies") {
            candidates.push(format!("{b}y"));
        }
        if let Some(b) = w.strip_suffix("ied") {
            candidates.push(format!("{b}y"));
        }
        for suffix in ["es", "s", "ed", "ing", "ly", "er", "est", "d"] {
            if let Some(b) = w.strip_suffix(suffix) {
                if b.len() >= 2 {
                    candidates.push(b.to_string());
                    if matches!(suffix, "ed" | "ing" | "er" | "est") {
                        candidates.push(format!("{b}e"));
                        let bytes = b.as_bytes();
                        if bytes.len() >= 3 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
                            candidates.push(b[..b.len() - 1].to_string());
                        }
                    }
                }
            }
        }
        candidates.iter().any(|c| self.0.contains(c))
    }
}

/// Counts token occurrences (not types) that are alphabetic, at least two
/// characters long, and unknown to `dictionary`.
pub fn count_misspellings(text: &str, dictionary: &Dictionary) -> usize {
    tokenize(text)
        .tokens
        .iter()
        .filter(|t| t.chars().filter(|c| c.is_alphabetic()).count() >= 2)
        .filter(|t| t.chars().all(|c| c.is_alphabetic() || c == '\''))
        .filter(|t| !dictionary.knows(t))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_strips_urls_and_punctuation() {
        let t = tokenize("Thanks, see https://a.org!");
        assert_eq!(t.tokens, vec!["thanks", "see"]);
        assert_eq!(t.urls, vec!["https://a.org"]);
    }

    #[test]
    fn tokenize_empty() {
        let t = tokenize("");
        assert!(t.tokens.is_empty());
        assert!(t.sentences.is_empty());
        assert!(t.urls.is_empty());
    }

    #[test]
    fn tokenize_keeps_contractions() {
        assert_eq!(tokenize("don't stop").tokens, vec!["don't", "stop"]);
        assert_eq!(tokenize("Don’t 'quote'").tokens, vec!["don't", "quote"]);
    }

    #[test]
    fn sentences_split_on_terminal_punctuation() {
        let t = tokenize("The cat sat. It purred!! Then? no end");
        assert_eq!(t.sentences, vec![0..3, 3..5, 5..6, 6..8]);
        // a decimal point is not a boundary
        assert_eq!(tokenize("pi is 3.14 ok").sentences.len(), 1);
    }

    #[test]
    fn url_inside_sentence_does_not_split() {
        let t = tokenize("see https://en.wikipedia.org/wiki/PCA for more.");
        assert_eq!(t.tokens, vec!["see", "for", "more"]);
        assert_eq!(t.sentences.len(), 1);
        assert_eq!(t.urls, vec!["https://en.wikipedia.org/wiki/PCA"]);
    }

    #[test]
    fn surface_keeps_case() {
        let t = tokenize("GREAT job");
        assert_eq!(t.surface(0), "GREAT");
        assert!(t.joined_by_space(0));
        assert!(!tokenize("you, are").joined_by_space(0));
    }

    #[test]
    fn markup_stripping_counts_words() {
        assert_eq!(word_count("**bold** and [a link](https://x.org) > quoted"), 5);
        assert_eq!(word_count("see https://a.org now"), 2);
        assert_eq!(word_count(""), 0);
    }

    #[test]
    fn misspellings_count_occurrences() {
        let d = Dictionary::from_words(["hello", "world", "run"]);
        assert_eq!(count_misspellings("helo world", &d), 1);
        assert_eq!(count_misspellings("hello world", &d), 0);
        assert_eq!(count_misspellings("xyzzyq xyzzyq", &d), 2);
        // numerals, single letters and URLs are ignored
        assert_eq!(count_misspellings("a 2017 https://qqq.zz", &d), 0);
        // inflections resolve to their base
        assert_eq!(count_misspellings("running runs", &d), 0);
    }

    #[test]
    fn bundled_dictionary_example() {
        let d = Dictionary::from_text(crate::resources::bundled::DICTIONARY);
        assert_eq!(count_misspellings("helo world", &d), 1);
        assert_eq!(count_misspellings("the people don't like cats", &d), 0);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_tokens(s in "\\PC{0,80}") {
            let first = tokenize(&s).tokens;
            let again = tokenize(&first.join(" ")).tokens;
            prop_assert_eq!(first, again);
        }

        #[test]
        fn token_offsets_ordered_and_disjoint(s in "\\PC{0,80}") {
            let t = tokenize(&s);
            for w in t.offsets.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for u in &t.urls {
                prop_assert!(!t.tokens.iter().any(|tok| tok == u));
            }
        }
    }
}
