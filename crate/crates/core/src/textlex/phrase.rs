use std::collections::HashMap;

use super::{tokenize, TokenizedText};

/// Multi-word phrase matcher over token sequences.
///
/// Matching is leftmost, longest-first and non-overlapping; consecutive
/// phrase tokens must be separated by whitespace only, so "thank, you" does
/// not match "thank you".
#[derive(Debug, Clone, Default)]
pub struct PhraseMatcher {
    phrases: Vec<Vec<String>>,
    // first token -> phrase indices, longest first
    by_head: HashMap<String, Vec<usize>>,
}

/// One match: token span and the index of the phrase that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    pub start: usize,
    pub len: usize,
    pub phrase: usize,
}

impl PhraseMatcher {
    /// Phrases are tokenized with [`tokenize`]; entries with no tokens are
    /// kept (so indices line up) but never match.
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(phrases: I) -> Self {
        let phrases: Vec<Vec<String>> = phrases
            .into_iter()
            .map(|p| tokenize(p.as_ref()).tokens)
            .collect();
        let mut by_head: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, p) in phrases.iter().enumerate() {
            if let Some(head) = p.first() {
                by_head.entry(head.clone()).or_default().push(i);
            }
        }
        for list in by_head.values_mut() {
            list.sort_by(|&a, &b| phrases[b].len().cmp(&phrases[a].len()).then(a.cmp(&b)));
        }
        Self { phrases, by_head }
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    fn matches_at(&self, text: &TokenizedText, start: usize, phrase: &[String]) -> bool {
        if start + phrase.len() > text.len() {
            return false;
        }
        phrase.iter().enumerate().all(|(k, tok)| {
            text.tokens[start + k] == *tok && (k == 0 || text.joined_by_space(start + k - 1))
        })
    }

    pub fn find_all(&self, text: &TokenizedText) -> Vec<PhraseMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < text.len() {
            let hit = self.by_head.get(&text.tokens[i]).and_then(|cands| {
                cands
                    .iter()
                    .find(|&&p| self.matches_at(text, i, &self.phrases[p]))
                    .copied()
            });
            match hit {
                Some(p) => {
                    let len = self.phrases[p].len();
                    out.push(PhraseMatch { start: i, len, phrase: p });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}
