//! Function-word style coordination of repliers toward the TLC author.

use std::collections::{BTreeMap, HashSet};

use crate::corpus::{Conversation, ROOT};
use crate::error::{Error, Result};
use crate::resources::parse_pairs;
use crate::textlex::tokenize;

/// Marker categories in file order.
#[derive(Debug, Clone, Default)]
pub struct MarkerCatalog {
    categories: Vec<(String, HashSet<String>)>,
}

impl MarkerCatalog {
    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut words: BTreeMap<String, HashSet<String>> = BTreeMap::new();
        for (cat, word) in parse_pairs(text, source)? {
            if !words.contains_key(&cat) {
                order.push(cat.clone());
            }
            words.entry(cat).or_default().insert(word.to_lowercase());
        }
        let categories: Vec<(String, HashSet<String>)> = order
            .into_iter()
            .map(|c| {
                let set = words.remove(&c).unwrap_or_default();
                (c, set)
            })
            .collect();
        Self::new(categories).map_err(|e| Error::Config(format!("{source}: {e}")))
    }

    pub fn new(categories: Vec<(String, HashSet<String>)>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::Config("marker catalog has no categories".into()));
        }
        if let Some((name, _)) = categories.iter().find(|(_, w)| w.is_empty()) {
            return Err(Error::Config(format!("marker category `{name}` is empty")));
        }
        Ok(Self { categories })
    }

    pub fn categories(&self) -> &[(String, HashSet<String>)] {
        &self.categories
    }
}

/// True iff some token of `text` is in `words`.
pub fn marker_presence(text: &str, words: &HashSet<String>) -> bool {
    tokenize(text).tokens.iter().any(|t| words.contains(t))
}

#[derive(Debug, Clone, Copy)]
pub struct Exchange<'a> {
    pub parent_text: &'a str,
    pub reply_text: &'a str,
}

/// P(marker in reply | marker in parent) - P(marker in reply) over
/// `(parent has marker, reply has marker)` observations.
pub fn coordination_from_presence(obs: &[(bool, bool)]) -> Option<f64> {
    let triggered = obs.iter().filter(|(p, _)| *p).count();
    if triggered == 0 {
        return None;
    }
    let echoed = obs.iter().filter(|(p, r)| *p && *r).count();
    let replied = obs.iter().filter(|(_, r)| *r).count();
    Some(echoed as f64 / triggered as f64 - replied as f64 / obs.len() as f64)
}

pub fn coordination_score(exchanges: &[Exchange], words: &HashSet<String>) -> Option<f64> {
    let obs: Vec<(bool, bool)> = exchanges
        .iter()
        .map(|e| (marker_presence(e.parent_text, words), marker_presence(e.reply_text, words)))
        .collect();
    coordination_from_presence(&obs)
}

/// Exchanges between any comment by the TLC author and each direct reply to
/// it written by someone else.
pub fn tlc_author_exchanges(conv: &Conversation) -> Vec<Exchange<'_>> {
    let target = &conv.tlc;
    let mut out = Vec::new();
    for n in 0..conv.node_count() {
        let parent = conv.node(n);
        let by_target = n == ROOT || (!target.author_deleted() && parent.author == target.author);
        if !by_target || parent.is_deleted || parent.is_removed {
            continue;
        }
        for &k in conv.children(n) {
            let reply = conv.node(k);
            if reply.is_deleted || reply.is_removed || reply.author == target.author {
                continue;
            }
            out.push(Exchange {
                parent_text: &parent.body,
                reply_text: &reply.body,
            });
        }
    }
    out
}

/// Mean coordination over categories where it is defined.
pub fn conversation_accommodation(conv: &Conversation, catalog: &MarkerCatalog) -> Option<f64> {
    let exchanges = tlc_author_exchanges(conv);
    if exchanges.is_empty() {
        return None;
    }
    let tokens: Vec<(Vec<String>, Vec<String>)> = exchanges
        .iter()
        .map(|e| (tokenize(e.parent_text).tokens, tokenize(e.reply_text).tokens))
        .collect();
    let has = |toks: &[String], words: &HashSet<String>| toks.iter().any(|t| words.contains(t));
    let defined: Vec<f64> = catalog
        .categories()
        .iter()
        .filter_map(|(_, words)| {
            let obs: Vec<(bool, bool)> = tokens.iter().map(|(p, r)| (has(p, words), has(r, words))).collect();
            coordination_from_presence(&obs)
        })
        .collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn articles() -> HashSet<String> {
        ["a", "an", "the"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn presence() {
        assert!(marker_presence("the dog", &articles()));
        assert!(!marker_presence("dog runs", &articles()));
        assert!(!marker_presence("", &articles()));
    }

    #[test]
    fn coordination_examples() {
        let ex = [
            Exchange { parent_text: "the cat", reply_text: "a dog" },
            Exchange { parent_text: "an owl", reply_text: "the bird" },
            Exchange { parent_text: "cats", reply_text: "the mouse" },
            Exchange { parent_text: "owls", reply_text: "birds" },
        ];
        let c = coordination_score(&ex, &articles()).unwrap();
        assert!((c - 0.25).abs() < 1e-12);
        assert_eq!(coordination_score(&ex[2..], &articles()), None);
        assert_eq!(coordination_score(&[], &articles()), None);
        let always = [
            Exchange { parent_text: "the", reply_text: "a" },
            Exchange { parent_text: "x", reply_text: "the" },
        ];
        assert_eq!(coordination_score(&always, &articles()), Some(0.0));
    }

    #[test]
    fn catalog_parsing() {
        let cat = MarkerCatalog::from_text("# c\nart\tThe\nart\ta\npro\tI\n", "m.tsv").unwrap();
        assert_eq!(cat.categories().len(), 2);
        assert_eq!(cat.categories()[0].0, "art");
        assert!(cat.categories()[0].1.contains("the"));
        assert!(MarkerCatalog::from_text("# nothing\n", "m.tsv").is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(obs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..40),
                                             seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = coordination_from_presence(&obs);
            if let Some(v) = a {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
            let mut shuffled = obs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a, coordination_from_presence(&shuffled));
        }

        #[test]
        fn verbatim_copies_coordinate_nonnegatively(parents in proptest::collection::vec(any::<bool>(), 1..40)) {
            let obs: Vec<(bool, bool)> = parents.iter().map(|&p| (p, p)).collect();
            if let Some(v) = coordination_from_presence(&obs) {
                let p_reply = parents.iter().filter(|&&p| p).count() as f64 / parents.len() as f64;
                prop_assert!((v - (1.0 - p_reply)).abs() < 1e-12);
                prop_assert!(v >= 0.0);
            }
        }
    }
}
