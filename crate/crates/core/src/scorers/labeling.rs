//! Heuristic training corpora for the information-sharing and mentoring
//! classifiers.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Conversation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelTask {
    Information,
    Mentoring,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledCorpus {
    pub texts: Vec<String>,
    pub labels: Vec<bool>,
}

impl LabeledCorpus {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRules {
    /// Question-focused subreddits (case-insensitive).
    pub ask_subreddits: Vec<String>,
    /// Replies must score strictly above this to count as informative.
    pub min_info_score: i64,
    /// Reservoir size for negatives.
    pub max_negatives: usize,
}

impl Default for LabelRules {
    fn default() -> Self {
        Self {
            ask_subreddits: Vec::new(),
            min_info_score: 2,
            max_negatives: 500_000,
        }
    }
}

/// Advice communities: name contains "advice" but not "bad".
pub fn is_advice_subreddit(name: &str) -> bool {
    let n = name.to_lowercase();
    n.contains("advice") && !n.contains("bad")
}

fn post_asks_question(conv: &Conversation) -> bool {
    conv.post.title.contains('?') || conv.post.selftext.contains('?')
}

enum Role {
    Positive,
    Negative,
    Skip,
}

/// Algorithm R reservoir over a stream of texts.
struct Reservoir {
    items: Vec<String>,
    seen: usize,
    cap: usize,
}

impl Reservoir {
    fn offer(&mut self, text: &str, rng: &mut ChaCha8Rng) {
        self.seen += 1;
        if self.items.len() < self.cap {
            self.items.push(text.to_string());
        } else if self.cap > 0 {
            let j = rng.gen_range(0..self.seen);
            if j < self.cap {
                self.items[j] = text.to_string();
            }
        }
    }
}

/// Labels TLCs of the given conversations.
///
/// Information: a TLC answering a question post in an ask-subreddit with
/// score above the threshold is positive; low-scored answers there are
/// skipped; TLCs elsewhere are candidate negatives. Mentoring: TLCs in
/// advice subreddits are positive, "bad advice" subreddits are skipped,
/// everything else is a candidate negative. Negatives are reservoir
/// sampled; positives are all kept.
pub fn heuristic_label_corpus(
    convs: &[Conversation],
    task: LabelTask,
    rules: &LabelRules,
    seed: u64,
) -> Result<LabeledCorpus> {
    let ask: HashSet<String> = rules.ask_subreddits.iter().map(|s| s.to_lowercase()).collect();
    let mut positives = Vec::new();
    let mut reservoir = Reservoir {
        items: Vec::new(),
        seen: 0,
        cap: rules.max_negatives,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for conv in convs {
        let tlc = &conv.tlc;
        if tlc.is_deleted || tlc.is_removed {
            continue;
        }
        let sub = tlc.subreddit.to_lowercase();
        let role = match task {
            LabelTask::Information if ask.contains(&sub) => {
                if post_asks_question(conv) && tlc.score > rules.min_info_score {
                    Role::Positive
                } else {
                    Role::Skip
                }
            }
            LabelTask::Information => Role::Negative,
            LabelTask::Mentoring if sub.contains("advice") => {
                if is_advice_subreddit(&sub) {
                    Role::Positive
                } else {
                    Role::Skip
                }
            }
            LabelTask::Mentoring => Role::Negative,
        };
        match role {
            Role::Positive => positives.push(tlc.body.clone()),
            Role::Negative => reservoir.offer(&tlc.body, &mut rng),
            Role::Skip => {}
        }
    }
    if positives.is_empty() {
        return Err(Error::EmptyCorpus(format!("no positive examples matched for {task:?}")));
    }
    let mut out = LabeledCorpus::default();
    for t in positives {
        out.texts.push(t);
        out.labels.push(true);
    }
    for t in reservoir.items {
        out.texts.push(t);
        out.labels.push(false);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Comment, Post};

    fn conv(sub: &str, title: &str, score: i64, body: &str) -> Conversation {
        let post = Post {
            id: format!("p{body}"),
            title: title.into(),
            selftext: String::new(),
            subreddit: sub.into(),
            created_utc: 0,
            author: "op".into(),
        };
        let tlc = Comment {
            id: format!("c{body}"),
            parent_id: Some(post.id.clone()),
            link_id: post.id.clone(),
            author: "a".into(),
            subreddit: sub.into(),
            created_utc: 1,
            body: body.into(),
            score,
            is_deleted: false,
            is_removed: false,
            is_bot: false,
        };
        Conversation::new(post, tlc, vec![], 0).unwrap()
    }

    fn rules() -> LabelRules {
        LabelRules {
            ask_subreddits: vec!["AskScience".into()],
            max_negatives: 10,
            ..Default::default()
        }
    }

    #[test]
    fn information_rules() {
        let convs = vec![
            conv("askscience", "why is the sky blue?", 3, "pos"),
            conv("askscience", "why is the sky blue?", 2, "lowscore"),
            conv("askscience", "the sky is blue", 10, "noquestion"),
            conv("pics", "cat?", 50, "neg"),
        ];
        let c = heuristic_label_corpus(&convs, LabelTask::Information, &rules(), 1).unwrap();
        assert_eq!(c.texts, vec!["pos".to_string(), "neg".to_string()]);
        assert_eq!(c.labels, vec![true, false]);
    }

    #[test]
    fn mentoring_rules() {
        let convs = vec![
            conv("legaladvice", "", 1, "pos"),
            conv("badadvice", "", 1, "skip"),
            conv("pics", "", 1, "neg"),
        ];
        let c = heuristic_label_corpus(&convs, LabelTask::Mentoring, &rules(), 1).unwrap();
        assert_eq!(c.texts, vec!["pos".to_string(), "neg".to_string()]);
    }

    #[test]
    fn no_positives_is_error() {
        let convs = vec![conv("pics", "", 1, "neg")];
        assert!(matches!(
            heuristic_label_corpus(&convs, LabelTask::Mentoring, &rules(), 1),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn reservoir_caps_negatives_deterministically() {
        let mut convs: Vec<Conversation> = (0..100).map(|i| conv("pics", "", 1, &format!("n{i}"))).collect();
        convs.push(conv("legaladvice", "", 1, "pos"));
        let a = heuristic_label_corpus(&convs, LabelTask::Mentoring, &rules(), 5).unwrap();
        assert_eq!(a.texts.len(), 11);
        assert_eq!(a, heuristic_label_corpus(&convs, LabelTask::Mentoring, &rules(), 5).unwrap());
    }
}
