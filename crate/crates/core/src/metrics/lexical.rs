use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::Conversation;
use crate::error::{Error, Result};
use crate::textlex::{sentiment_compound_words, tokenize, PhraseMatcher, SentimentLexicon, TokenizedText};

pub const LAUGHTER_PATTERN: &str =
    r"\ba*h+a+h+a+(h+a+)*?h*\b|\bl+o+l+(o+l+)*?\b|\bh+e+h+e+(h+e+)*?h*\b";

static LAUGHTER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("(?i){LAUGHTER_PATTERN}")).expect("laughter pattern"));

pub const GRATITUDE_WORDS: [&str; 3] = ["thanks", "contented", "blessed"];
pub const GRATITUDE_PHRASES: [&str; 11] = [
    "thank you",
    "thankful for",
    "grateful for",
    "greatful for",
    "my gratitude",
    "i appreciate",
    "make me smile",
    "i super appreciate",
    "i deeply appreciate",
    "i really appreciate",
    "bless your soul",
];

static GRATITUDE: LazyLock<PhraseMatcher> =
    LazyLock::new(|| PhraseMatcher::new(GRATITUDE_PHRASES.iter().chain(&GRATITUDE_WORDS)));

pub const COMPLIMENT_THRESHOLD: f64 = 0.7;
const COMPLIMENT_WINDOW: usize = 5;

pub const FIRST_PERSON: [&str; 5] = ["i", "me", "my", "mine", "myself"];

pub fn count_gratitude_tokens(text: &TokenizedText) -> usize {
    GRATITUDE.find_all(text).len()
}

/// Non-overlapping gratitude lexicon matches; phrases win over single words.
pub fn count_gratitude(text: &str) -> usize {
    count_gratitude_tokens(&tokenize(text))
}

/// Non-overlapping matches of the laughter pattern, case-insensitive.
pub fn count_laughter(text: &str) -> usize {
    LAUGHTER_RE.find_iter(text).count()
}

fn is_copula(tok: &str) -> bool {
    tok == "is" || tok == "are"
}

pub fn detect_compliments_tokens(text: &TokenizedText, lexicon: &SentimentLexicon) -> usize {
    let toks = &text.tokens;
    let mut count = 0;
    let mut i = 0;
    while i < toks.len() {
        // end of the matched candidate phrase (exclusive)
        let end = match toks[i].as_str() {
            "you" if i + 1 < toks.len() && is_copula(&toks[i + 1]) && text.joined_by_space(i) => {
                Some(i + 2)
            }
            "your"
                if i + 2 < toks.len()
                    && is_copula(&toks[i + 2])
                    && text.joined_by_space(i)
                    && text.joined_by_space(i + 1) =>
            {
                Some(i + 3)
            }
            _ => None,
        };
        let Some(end) = end else {
            i += 1;
            continue;
        };
        let generic = i > 0 && matches!(toks[i - 1].as_str(), "if" | "when");
        if !generic {
            let window: Vec<&str> = toks[end..(end + COMPLIMENT_WINDOW).min(toks.len())]
                .iter()
                .map(String::as_str)
                .collect();
            if sentiment_compound_words(&window, lexicon) >= COMPLIMENT_THRESHOLD {
                count += 1;
            }
        }
        i = end;
    }
    count
}

/// Compliments addressed to the parent's author: "you is/are" or
/// "your <word> is/are" not preceded by "if"/"when", followed by five
/// tokens whose compound sentiment reaches the threshold.
pub fn detect_compliments(text: &str, lexicon: &SentimentLexicon) -> usize {
    detect_compliments_tokens(&tokenize(text), lexicon)
}

pub fn has_first_person_tokens(text: &TokenizedText) -> bool {
    text.tokens.iter().any(|t| {
        // "i'm", "i've" carry the pronoun too
        let head = t.split('\'').next().unwrap_or(t);
        FIRST_PERSON.contains(&head)
    })
}

pub fn has_first_person(text: &str) -> bool {
    has_first_person_tokens(&tokenize(text))
}

/// Replies that contain a first-person singular pronoun.
pub fn count_disclosures(conv: &Conversation) -> usize {
    conv.replies().iter().filter(|r| has_first_person(&r.body)).count()
}

#[derive(Debug, Clone, Default)]
pub struct DomainLists {
    educational: HashSet<String>,
    donation: HashSet<String>,
}

fn normalize_domain(d: &str) -> String {
    let d = d.trim().trim_end_matches('.').to_lowercase();
    d.strip_prefix("www.").map(str::to_string).unwrap_or(d)
}

impl DomainLists {
    pub fn new(educational: Vec<String>, donation: Vec<String>) -> Result<Self> {
        let educational: HashSet<String> = educational.iter().map(|d| normalize_domain(d)).collect();
        let donation: HashSet<String> = donation.iter().map(|d| normalize_domain(d)).collect();
        let mut shared: Vec<&String> = educational.intersection(&donation).collect();
        if !shared.is_empty() {
            shared.sort();
            return Err(Error::Config(format!(
                "domains listed as both educational and donation: {shared:?}"
            )));
        }
        Ok(Self {
            educational,
            donation,
        })
    }

    pub fn educational(&self) -> &HashSet<String> {
        &self.educational
    }

    pub fn donation(&self) -> &HashSet<String> {
        &self.donation
    }
}

/// Lowercased host of an http(s) URL without `www.`, or `None` when the URL
/// has no usable host.
pub fn url_host(url: &str) -> Option<String> {
    let rest = url.split_once("://")?.1;
    let authority = rest.split(['/', '?', '#']).next()?;
    let host = authority.rsplit('@').next()?;
    let host = match host.rsplit_once(':') {
        Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
        _ => host,
    };
    let host = normalize_domain(host);
    let valid = !host.is_empty()
        && host.contains('.')
        && host
            .split('.')
            .all(|label| !label.is_empty() && label.chars().all(|c| c.is_alphanumeric() || c == '-'));
    valid.then_some(host)
}

fn listed(host: &str, set: &HashSet<String>) -> bool {
    if set.contains(host) {
        return true;
    }
    let mut rest = host;
    while let Some((_, parent)) = rest.split_once('.') {
        if set.contains(parent) {
            return true;
        }
        rest = parent;
    }
    false
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounts {
    pub links: usize,
    pub educational: usize,
    pub donation: usize,
}

impl std::ops::AddAssign for LinkCounts {
    fn add_assign(&mut self, o: Self) {
        self.links += o.links;
        self.educational += o.educational;
        self.donation += o.donation;
    }
}

pub fn classify_urls<S: AsRef<str>>(urls: &[S], lists: &DomainLists) -> LinkCounts {
    let mut out = LinkCounts::default();
    for url in urls {
        out.links += 1;
        if let Some(host) = url_host(url.as_ref()) {
            if listed(&host, &lists.educational) {
                out.educational += 1;
            } else if listed(&host, &lists.donation) {
                out.donation += 1;
            }
        }
    }
    out
}

/// Link, educational-link and donation-link occurrences over all replies.
pub fn classify_links(conv: &Conversation, lists: &DomainLists) -> LinkCounts {
    let mut total = LinkCounts::default();
    for r in conv.replies() {
        total += classify_urls(&tokenize(&r.body).urls, lists);
    }
    total
}
