use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::Conversation;
use crate::error::{Error, Result};
use crate::textlex::word_count;

pub const DEFAULT_MAX_TLC_WORDS: usize = 3500;
pub const DEFAULT_MIN_PER_SUBREDDIT: usize = 100;
pub const DEFAULT_MAX_PER_SUBREDDIT: usize = 500;

/// Removal counts by reason. A conversation is attributed to the first
/// reason that applies, in field order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub input: usize,
    pub tlc_deleted: usize,
    pub tlc_too_long: usize,
    pub contains_bot: usize,
    pub retained: usize,
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conversations in         {}", self.input)?;
        writeln!(f, "removed: tlc deleted     {}", self.tlc_deleted)?;
        writeln!(f, "removed: tlc too long    {}", self.tlc_too_long)?;
        writeln!(f, "removed: bot comment     {}", self.contains_bot)?;
        writeln!(f, "retained                 {}", self.retained)
    }
}

pub fn filter_conversations(
    convs: Vec<Conversation>,
    max_tlc_words: usize,
) -> (Vec<Conversation>, FilterReport) {
    let mut report = FilterReport {
        input: convs.len(),
        ..Default::default()
    };
    let kept: Vec<Conversation> = convs
        .into_iter()
        .filter(|c| {
            if c.tlc.is_deleted || c.tlc.is_removed {
                report.tlc_deleted += 1;
                false
            } else if word_count(&c.tlc.body) > max_tlc_words {
                report.tlc_too_long += 1;
                false
            } else if c.tlc.is_bot || c.replies().iter().any(|r| r.is_bot) {
                report.contains_bot += 1;
                false
            } else {
                true
            }
        })
        .collect();
    report.retained = kept.len();
    (kept, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPartition {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Largest-remainder allocation of `n` items to `ratios`.
pub(crate) fn split_sizes(n: usize, ratios: [u32; 3]) -> [usize; 3] {
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    let mut sizes = [0usize; 3];
    let mut remainders = [(0u64, 0usize); 3];
    for (k, &r) in ratios.iter().enumerate() {
        let exact = n as u64 * r as u64;
        sizes[k] = (exact / total) as usize;
        remainders[k] = (exact % total, k);
    }
    let mut left = n - sizes.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in &remainders {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded train/dev/test split of conversation ids.
pub fn partition_dataset(ids: &[String], ratios: [u32; 3], seed: u64) -> Result<DatasetPartition> {
    if ratios.contains(&0) {
        return Err(Error::Argument(format!("partition ratios must be positive, got {ratios:?}")));
    }
    if ids.len() < ratios.len() {
        return Err(Error::Size(format!(
            "cannot split {} conversations into 3 partitions",
            ids.len()
        )));
    }
    let mut shuffled = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [a, b, _] = split_sizes(ids.len(), ratios);
    let test = shuffled.split_off(a + b);
    let dev = shuffled.split_off(a);
    Ok(DatasetPartition {
        train: shuffled,
        dev,
        test,
        seed,
    })
}

/// Drops subreddits with fewer than `min` conversations and truncates larger
/// ones to `max` by seeded sampling. Output is grouped by subreddit name.
pub fn downsample_training(
    train: Vec<Conversation>,
    min: usize,
    max: usize,
    seed: u64,
) -> Vec<Conversation> {
    let mut by_sub: BTreeMap<String, Vec<Conversation>> = BTreeMap::new();
    for c in train {
        by_sub.entry(c.subreddit().to_string()).or_default().push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (_, mut convs) in by_sub {
        if convs.len() < min {
            continue;
        }
        if convs.len() > max {
            convs.sort_by(|a, b| a.id().cmp(b.id()));
            convs.shuffle(&mut rng);
            convs.truncate(max);
        }
        out.extend(convs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::{Comment, Post};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn conv(id: &str, sub: &str, body: &str) -> Conversation {
        let post = Post {
            id: format!("p_{id}"),
            title: String::new(),
            selftext: String::new(),
            subreddit: sub.into(),
            created_utc: 0,
            author: "op".into(),
        };
        let tlc = Comment {
            id: id.into(),
            parent_id: Some(post.id.clone()),
            link_id: post.id.clone(),
            author: "a".into(),
            subreddit: sub.into(),
            created_utc: 1,
            body: body.into(),
            score: 1,
            is_deleted: false,
            is_removed: false,
            is_bot: false,
        };
        Conversation::new(post, tlc, vec![], 0).unwrap()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn long_tlc_removed_at_boundary() {
        let ok = conv("a", "s", &vec!["w"; 3500].join(" "));
        let long = conv("b", "s", &vec!["w"; 3501].join(" "));
        let (kept, rep) = filter_conversations(vec![ok, long], 3500);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id(), "a");
        assert_eq!(rep.tlc_too_long, 1);
    }

    #[test]
    fn bot_reply_removes_thread() {
        let c = conv("a", "s", "hello there");
        let mut bot = c.tlc.clone();
        bot.id = "r".into();
        bot.parent_id = Some("a".into());
        bot.is_bot = true;
        let c = Conversation::new(c.post.clone(), c.tlc.clone(), vec![bot], 0).unwrap();
        let plain = conv("b", "s", "ten words is what this little comment has in it");
        let (kept, rep) = filter_conversations(vec![c, plain], 3500);
        assert_eq!(rep.contains_bot, 1);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn deleted_tlc_removed() {
        let mut c = conv("a", "s", "[deleted]");
        c.tlc.is_deleted = true;
        let (kept, rep) = filter_conversations(vec![c], 3500);
        assert!(kept.is_empty());
        assert_eq!(rep.tlc_deleted, 1);
    }

    #[test]
    fn partition_sizes() {
        let p = partition_dataset(&ids(10), [8, 1, 1], 42).unwrap();
        assert_eq!((p.train.len(), p.dev.len(), p.test.len()), (8, 1, 1));
        let p = partition_dataset(&ids(1000), [8, 1, 1], 42).unwrap();
        assert_eq!((p.train.len(), p.dev.len(), p.test.len()), (800, 100, 100));
        assert_eq!(p, partition_dataset(&ids(1000), [8, 1, 1], 42).unwrap());
        assert!(matches!(partition_dataset(&ids(2), [8, 1, 1], 1), Err(Error::Size(_))));
    }

    #[test]
    fn downsample_bounds() {
        let mut convs = Vec::new();
        for i in 0..99 {
            convs.push(conv(&format!("a{i}"), "small", "x"));
        }
        for i in 0..600 {
            convs.push(conv(&format!("b{i}"), "big", "x"));
        }
        for i in 0..100 {
            convs.push(conv(&format!("c{i}"), "edge", "x"));
        }
        let out = downsample_training(convs.clone(), 100, 500, 7);
        let count = |s: &str| out.iter().filter(|c| c.subreddit() == s).count();
        assert_eq!(count("small"), 0);
        assert_eq!(count("big"), 500);
        assert_eq!(count("edge"), 100);
        let again = downsample_training(convs, 100, 500, 7);
        assert_eq!(out, again);
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_cover(n in 3usize..400, seed in any::<u64>(),
                                       r in (1u32..10, 1u32..10, 1u32..10)) {
            let all = ids(n);
            let ratios = [r.0, r.1, r.2];
            let p = partition_dataset(&all, ratios, seed).unwrap();
            let mut seen = HashSet::new();
            for id in p.train.iter().chain(&p.dev).chain(&p.test) {
                prop_assert!(seen.insert(id.clone()));
            }
            prop_assert_eq!(seen.len(), n);
            let total = (r.0 + r.1 + r.2) as f64;
            for (size, ratio) in [(p.train.len(), r.0), (p.dev.len(), r.1), (p.test.len(), r.2)] {
                prop_assert!((size as f64 - n as f64 * ratio as f64 / total).abs() <= 1.0);
            }
        }
    }
}
