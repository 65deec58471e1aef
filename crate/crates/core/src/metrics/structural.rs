use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, NodeId, ROOT};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    pub subsequent_comments: usize,
    pub direct_replies: usize,
    pub depth: usize,
    pub sustained_partners: usize,
    pub sustained_turns: usize,
    pub community_score: i64,
}

/// (all reply nodes, children of the TLC)
pub fn count_replies(conv: &Conversation) -> (usize, usize) {
    (conv.replies().len(), conv.children(ROOT).len())
}

/// Edges on the longest path below the TLC.
pub fn conversation_depth(conv: &Conversation) -> usize {
    let mut depth = vec![0usize; conv.node_count()];
    let mut max = 0;
    // pre-order guarantees parents precede children
    for n in 1..conv.node_count() {
        let p = conv.parent(n).expect("reply has a parent");
        depth[n] = depth[p] + 1;
        max = max.max(depth[n]);
    }
    max
}

fn pairable(conv: &Conversation, a: NodeId, b: NodeId) -> bool {
    let (x, y) = (conv.node(a), conv.node(b));
    !x.author_deleted() && !y.author_deleted() && x.author != y.author
}

/// (distinct author pairs joined by a reply edge, longest strictly
/// alternating two-author chain in comments).
pub fn sustained_stats(conv: &Conversation) -> (usize, usize) {
    let mut pairs: HashSet<(&str, &str)> = HashSet::new();
    let mut chain = vec![1usize; conv.node_count()];
    let mut best = 0;
    for n in 1..conv.node_count() {
        let p = conv.parent(n).expect("reply has a parent");
        if !pairable(conv, p, n) {
            continue;
        }
        let (a, b) = (conv.node(p).author.as_str(), conv.node(n).author.as_str());
        pairs.insert(if a < b { (a, b) } else { (b, a) });
        chain[n] = match conv.parent(p) {
            Some(g) if chain[p] >= 2 && conv.node(g).author == conv.node(n).author => chain[p] + 1,
            _ => 2,
        };
        best = best.max(chain[n]);
    }
    (pairs.len(), best)
}

/// Sum of reply scores; the TLC's own score is excluded.
pub fn community_score(conv: &Conversation) -> i64 {
    conv.replies().iter().map(|r| r.score).sum()
}

pub fn structural_metrics(conv: &Conversation) -> StructuralMetrics {
    let (subsequent_comments, direct_replies) = count_replies(conv);
    let (sustained_partners, sustained_turns) = sustained_stats(conv);
    StructuralMetrics {
        subsequent_comments,
        direct_replies,
        depth: conversation_depth(conv),
        sustained_partners,
        sustained_turns,
        community_score: community_score(conv),
    }
}
