//! Synthetic corpus with a planted one-dimensional prosociality factor.
//!
//! Each conversation draws a factor z ~ N(0, 1). Reply count, thread
//! shape, the share of friendly replies and the number of hostile replies
//! all move with z, so every panel metric carries the same latent signal.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Comment, Post};
use crate::error::{Error, Result};
use crate::rank_eval::{Choice, PairJudgment, Stratum};

const SUBREDDITS: &[&str] = &[
    "AskReddit",
    "askscience",
    "relationship_advice",
    "legaladvice",
    "science",
    "gaming",
    "worldnews",
    "cooking",
    "programming",
    "fitness",
];

const TOPICS: &[&[&str]] = &[
    &["recipe", "oven", "garlic", "butter", "dinner", "flavor", "bake"],
    &["game", "level", "controller", "console", "boss", "quest", "multiplayer"],
    &["planet", "telescope", "orbit", "galaxy", "photon", "gravity", "star"],
    &["compiler", "function", "debugger", "library", "thread", "memory", "rust"],
    &["lawyer", "contract", "landlord", "lease", "court", "tenant", "deposit"],
    &["workout", "protein", "squat", "running", "muscle", "stretch", "cardio"],
    &["election", "government", "economy", "border", "treaty", "minister", "policy"],
    &["partner", "friendship", "family", "wedding", "sister", "trust", "dating"],
];

const FRIENDLY: &[&str] = &[
    "Thanks so much, this is a great idea! haha I think you nailed it.",
    "Thank you for sharing, I hope it works out. You got this, good luck!",
    "haha that is wonderful. My dad did the same thing, please keep us posted.",
    "Great point, I appreciate it. Here is a guide: https://en.wikipedia.org/wiki/Help",
    "I really love this, thanks! I can relate, my family had the same problem.",
    "lol yes! Awesome explanation, thank you. I donated here https://www.gofundme.com/f/help",
    "You are amazing and so kind, thanks for helping!",
    "Your advice is wonderful and really helpful, I think I will try it.",
];

const NEUTRAL: &[&str] = &[
    "Not sure about that part of it.",
    "It depends on the details, hard to say.",
    "Which version was that?",
    "That happened last year as well.",
    "Maybe check the settings first.",
];

const HOSTILE: &[&str] = &[
    "Shut up you stupid idiot, this is garbage and you are a pathetic loser.",
    "What a moron. Fucking bullshit, you are an idiot and this is trash.",
    "You are a dumbass and a fucker, shut up, nobody cares, pathetic idiot.",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub conversations: usize,
    /// Top-level comments per post.
    pub tlcs_per_post: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            conversations: 5000,
            tlcs_per_post: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tlc_id: String,
    pub factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<Post>,
    pub comments: Vec<Comment>,
    pub truth: Vec<GroundTruth>,
    pub judgments: Vec<PairJudgment>,
}

struct Gen {
    rng: ChaCha8Rng,
    next_id: usize,
}

impl Gen {
    fn id(&mut self, prefix: char) -> String {
        self.next_id += 1;
        format!("{prefix}{:06}", self.next_id)
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn topic_sentence(&mut self, topic: usize, words: usize) -> String {
        let vocab = TOPICS[topic];
        (0..words).map(|_| *vocab.choose(&mut self.rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[allow(clippy::too_many_arguments)]
fn comment(
    id: String,
    parent: &str,
    post: &Post,
    author: String,
    created_utc: i64,
    body: String,
    score: i64,
) -> Comment {
    Comment {
        id,
        parent_id: Some(parent.to_string()),
        link_id: post.id.clone(),
        author,
        subreddit: post.subreddit.clone(),
        created_utc,
        body,
        score,
        is_deleted: false,
        is_removed: false,
        is_bot: false,
    }
}

pub fn generate(params: &SynthParams) -> SynthCorpus {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        next_id: 0,
    };
    let mut out = SynthCorpus::default();
    let per_post = params.tlcs_per_post.max(1);
    let base_time: i64 = 1_600_000_000;
    let mut made = 0;
    let mut post_no = 0;
    while made < params.conversations {
        let sub = SUBREDDITS[post_no % SUBREDDITS.len()];
        let topic = g.rng.gen_range(0..TOPICS.len());
        let post = Post {
            id: g.id('p'),
            title: format!("{}?", g.topic_sentence(topic, 6)),
            selftext: g.topic_sentence(topic, 20),
            subreddit: sub.to_string(),
            created_utc: base_time + post_no as i64 * 5400,
            author: format!("op{}", post_no % 97),
        };
        post_no += 1;
        let mut tlc_ids: Vec<(String, f64)> = Vec::new();
        for k in 0..per_post.min(params.conversations - made) {
            let z = g.normal();
            let tlc_id = g.id('c');
            let tlc_author = format!("user{}", g.rng.gen_range(0..5000));
            let tlc_time = post.created_utc + 60 * (1 + k as i64 * 7 + g.rng.gen_range(0..20));
            let friendly_tlc = g.rng.gen::<f64>() < sigmoid(2.0 * z);
            let tlc_text = format!(
                "{} {}",
                g.topic_sentence(topic, 12),
                if friendly_tlc {
                    "Thanks for asking, I hope this helps and good luck!"
                } else {
                    "Whatever, not much to add."
                }
            );
            let tlc_score = (3.0 + 4.0 * z).round().max(0.0) as i64;
            let tlc = comment(tlc_id.clone(), &post.id, &post, tlc_author.clone(), tlc_time, tlc_text, tlc_score);
            out.comments.push(tlc);

            let n = (8.0 + 4.0 * z + 0.5 * g.normal()).round().clamp(0.0, 40.0) as usize;
            let hostile = (1.5 - 1.5 * z + 0.3 * g.normal()).round().clamp(0.0, n as f64) as usize;
            let p_friendly = sigmoid(2.0 * z);
            let partner = format!("partner{}", g.rng.gen_range(0..5000));
            // first half forms an alternating chain with the TLC author,
            // the rest reply to the TLC directly
            let chain = n / 2;
            let mut parent = tlc_id.clone();
            let mut t = tlc_time;
            for i in 0..n {
                t += 30 + g.rng.gen_range(0..600);
                let (author, par) = if i < chain {
                    let a = if i % 2 == 0 { partner.clone() } else { tlc_author.clone() };
                    (a, parent.clone())
                } else {
                    (format!("user{}", g.rng.gen_range(0..5000)), tlc_id.clone())
                };
                let body = if i >= n - hostile {
                    HOSTILE.choose(&mut g.rng).expect("non-empty").to_string()
                } else if g.rng.gen::<f64>() < p_friendly {
                    FRIENDLY.choose(&mut g.rng).expect("non-empty").to_string()
                } else {
                    NEUTRAL.choose(&mut g.rng).expect("non-empty").to_string()
                };
                let id = g.id('c');
                let score = (1.0 + 2.0 * z).round().max(-5.0) as i64;
                out.comments.push(comment(id.clone(), &par, &post, author, t, body, score));
                if i < chain {
                    parent = id;
                }
            }
            out.truth.push(GroundTruth {
                tlc_id: tlc_id.clone(),
                factor: z,
            });
            tlc_ids.push((tlc_id, z));
            made += 1;
        }
        let strata = [Stratum::AnyTime, Stratum::Within5Min, Stratum::MetricCoverage, Stratum::NoReply];
        for w in tlc_ids.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            out.judgments.push(PairJudgment {
                post_id: post.id.clone(),
                tlc_a: a.0.clone(),
                tlc_b: b.0.clone(),
                choice: if b.1 > a.1 { Choice::B } else { Choice::A },
                annotator_id: format!("annotator{}", out.judgments.len() % 3),
                stratum: strata[out.judgments.len() % strata.len()],
            });
            // every fifth pair gets a second, occasionally dissenting, rating
            if out.judgments.len() % 5 == 0 {
                let mut again = out.judgments.last().expect("just pushed").clone();
                again.annotator_id = "annotator9".into();
                if g.rng.gen::<f64>() < 0.1 {
                    again.choice = again.choice.flip();
                }
                out.judgments.push(again);
            }
        }
        out.posts.push(post);
    }
    out
}

fn wire_id(kind: &str, id: &str) -> String {
    format!("{kind}_{id}")
}

pub fn comment_record(c: &Comment, posts_prefix: &str) -> String {
    let parent = match &c.parent_id {
        Some(p) if *p == c.link_id => wire_id(posts_prefix, p),
        Some(p) => wire_id("t1", p),
        None => String::new(),
    };
    json!({
        "id": c.id,
        "parent_id": parent,
        "link_id": wire_id(posts_prefix, &c.link_id),
        "author": c.author,
        "subreddit": c.subreddit,
        "created_utc": c.created_utc,
        "body": c.body,
        "score": c.score,
    })
    .to_string()
}

pub fn post_record(p: &Post) -> String {
    json!({
        "id": p.id,
        "title": p.title,
        "selftext": p.selftext,
        "subreddit": p.subreddit,
        "created_utc": p.created_utc,
        "author": p.author,
    })
    .to_string()
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `posts.jsonl`, `comments.jsonl`, `truth.jsonl` and
/// `judgments.jsonl` into `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_lines(&dir.join("posts.jsonl"), corpus.posts.iter().map(post_record))?;
    write_lines(&dir.join("comments.jsonl"), corpus.comments.iter().map(|c| comment_record(c, "t3")))?;
    write_lines(
        &dir.join("truth.jsonl"),
        corpus.truth.iter().map(|t| serde_json::to_string(t).expect("truth serializes")),
    )?;
    crate::rank_eval::write_judgments(&dir.join("judgments.jsonl"), &corpus.judgments)
}

pub fn read_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    let text = crate::resources::read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_conversations, parse_comment_record, parse_post_record, BotList};
    use std::collections::HashMap;

    #[test]
    fn seeded_and_sized() {
        let p = SynthParams {
            conversations: 30,
            tlcs_per_post: 4,
            seed: 5,
        };
        let a = generate(&p);
        assert_eq!(a, generate(&p));
        assert_eq!(a.truth.len(), 30);
        assert_eq!(a.posts.len(), 8);
        assert!(generate(&SynthParams { conversations: 0, ..p }).comments.is_empty());
    }

    #[test]
    fn records_parse_into_conversations() {
        let c = generate(&SynthParams {
            conversations: 12,
            tlcs_per_post: 3,
            seed: 1,
        });
        let bots = BotList::default();
        let comments: Vec<Comment> = c
            .comments
            .iter()
            .enumerate()
            .map(|(i, x)| parse_comment_record(&comment_record(x, "t3"), i + 1, &bots).unwrap())
            .collect();
        assert_eq!(comments, c.comments);
        let posts: HashMap<String, Post> = c
            .posts
            .iter()
            .map(|p| (p.id.clone(), parse_post_record(&post_record(p), 1).unwrap()))
            .collect();
        let (convs, report) = build_conversations(comments, &posts);
        assert_eq!(convs.len(), 12);
        assert_eq!(report.orphans, 0);
    }
}
