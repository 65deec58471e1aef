use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{Comment, Post};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Node handle inside a [`Conversation`]: 0 is the TLC, `k` is reply `k - 1`
/// in canonical pre-order.
pub type NodeId = usize;
pub const ROOT: NodeId = 0;

/// A post, one top-level comment and the reply tree beneath it.
///
/// Replies are stored in pre-order with siblings sorted by
/// `(created_utc, id)`, so traversal is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub post: Post,
    pub tlc: Comment,
    replies: Vec<Comment>,
    parents: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    pub orphan_count: usize,
}

fn sibling_key(c: &Comment) -> (i64, &str) {
    (c.created_utc, c.id.as_str())
}

impl Conversation {
    /// Assembles and validates a conversation. Every reply must descend from
    /// the TLC; reply order on input is irrelevant.
    pub fn new(post: Post, tlc: Comment, replies: Vec<Comment>, orphan_count: usize) -> Result<Self> {
        if !tlc.is_top_level() || tlc.link_id != post.id {
            return Err(Error::Argument(format!(
                "comment {} is not a top-level comment of post {}",
                tlc.id, post.id
            )));
        }
        let mut by_parent: HashMap<&str, Vec<&Comment>> = HashMap::new();
        let mut seen = HashSet::new();
        for r in &replies {
            if !seen.insert(r.id.as_str()) || r.id == tlc.id {
                return Err(Error::Argument(format!("duplicate comment id {}", r.id)));
            }
            let parent = r.parent_id.as_deref().unwrap_or("");
            by_parent.entry(parent).or_default().push(r);
        }
        for kids in by_parent.values_mut() {
            kids.sort_by(|a, b| sibling_key(a).cmp(&sibling_key(b)));
        }

        let mut ordered: Vec<Comment> = Vec::with_capacity(replies.len());
        let mut parents = vec![None];
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new()];
        let kids_of = |id: &str| by_parent.get(id).map(Vec::as_slice).unwrap_or_default();
        let mut stack: Vec<(NodeId, &Comment)> =
            kids_of(&tlc.id).iter().rev().map(|c| (ROOT, *c)).collect();
        while let Some((parent, c)) = stack.pop() {
            let nid = ordered.len() + 1;
            ordered.push(c.clone());
            parents.push(Some(parent));
            children.push(Vec::new());
            children[parent].push(nid);
            stack.extend(kids_of(&c.id).iter().rev().map(|k| (nid, *k)));
        }
        if ordered.len() != replies.len() {
            return Err(Error::Argument(format!(
                "{} replies of conversation {} do not descend from it",
                replies.len() - ordered.len(),
                tlc.id
            )));
        }
        Ok(Self {
            post,
            tlc,
            replies: ordered,
            parents,
            children,
            orphan_count,
        })
    }

    /// TLC id, the conversation's identity.
    pub fn id(&self) -> &str {
        &self.tlc.id
    }

    pub fn subreddit(&self) -> &str {
        &self.tlc.subreddit
    }

    pub fn replies(&self) -> &[Comment] {
        &self.replies
    }

    pub fn node_count(&self) -> usize {
        self.replies.len() + 1
    }

    pub fn node(&self, id: NodeId) -> &Comment {
        if id == ROOT {
            &self.tlc
        } else {
            &self.replies[id - 1]
        }
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parents[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    /// Reply node ids ordered by `(created_utc, id)`.
    pub fn replies_by_time(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (1..self.node_count()).collect();
        ids.sort_by(|&a, &b| sibling_key(self.node(a)).cmp(&sibling_key(self.node(b))));
        ids
    }

    /// Copy keeping only the given reply nodes. A kept reply whose parent is
    /// dropped is re-attached to its nearest kept ancestor (or the TLC).
    pub fn restrict(&self, keep: &[NodeId]) -> Conversation {
        let wanted: HashSet<NodeId> = keep.iter().copied().filter(|&n| n != ROOT).collect();
        let replies = (1..self.node_count())
            .filter(|n| wanted.contains(n))
            .map(|n| {
                let mut c = self.node(n).clone();
                let mut anc = self.parent(n);
                while let Some(a) = anc {
                    if a == ROOT || wanted.contains(&a) {
                        break;
                    }
                    anc = self.parent(a);
                }
                c.parent_id = Some(self.node(anc.unwrap_or(ROOT)).id.clone());
                c
            })
            .collect();
        Conversation::new(self.post.clone(), self.tlc.clone(), replies, 0)
            .expect("re-attached replies descend from the tlc")
    }

    pub fn to_line(&self) -> String {
        let wire = WireConversation {
            schema_version: SCHEMA_VERSION,
            post: self.post.clone(),
            tlc: self.tlc.clone(),
            replies: self.replies.clone(),
            orphan_count: self.orphan_count,
        };
        serde_json::to_string(&wire).expect("conversation serializes")
    }

    pub fn from_line(line: &str, line_no: usize) -> Result<Self> {
        let wire: WireConversation = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if wire.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    wire.schema_version
                ),
            });
        }
        Conversation::new(wire.post, wire.tlc, wire.replies, wire.orphan_count).map_err(|e| {
            Error::Parse {
                line: line_no,
                message: e.to_string(),
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
struct WireConversation {
    schema_version: u32,
    post: Post,
    tlc: Comment,
    replies: Vec<Comment>,
    orphan_count: usize,
}

/// Counts produced while assembling trees.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub comments: usize,
    pub duplicate_ids: usize,
    pub orphans: usize,
    pub missing_post: usize,
    pub conversations: usize,
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "comments read            {}", self.comments)?;
        writeln!(f, "duplicate ids dropped    {}", self.duplicate_ids)?;
        writeln!(f, "orphan replies dropped   {}", self.orphans)?;
        writeln!(f, "tlcs without post        {}", self.missing_post)?;
        writeln!(f, "conversations built      {}", self.conversations)
    }
}

struct PostGroup {
    link_id: String,
    comments: Vec<Comment>,
}

fn build_group(group: PostGroup, post: Option<&Post>) -> (Vec<Conversation>, usize, usize) {
    let mut children: HashMap<&str, Vec<&Comment>> = HashMap::new();
    let mut tlcs: Vec<&Comment> = Vec::new();
    for c in &group.comments {
        if c.is_top_level() {
            tlcs.push(c);
        } else if let Some(p) = c.parent_id.as_deref() {
            children.entry(p).or_default().push(c);
        }
    }
    tlcs.sort_by(|a, b| sibling_key(a).cmp(&sibling_key(b)));

    let mut threads: Vec<(&Comment, Vec<Comment>)> = Vec::with_capacity(tlcs.len());
    let mut attached = 0usize;
    for tlc in &tlcs {
        let mut replies = Vec::new();
        let mut visited: HashSet<&str> = HashSet::from([tlc.id.as_str()]);
        let mut frontier = vec![tlc.id.as_str()];
        while let Some(id) = frontier.pop() {
            for kid in children.get(id).map(Vec::as_slice).unwrap_or_default() {
                if visited.insert(kid.id.as_str()) {
                    replies.push((*kid).clone());
                    frontier.push(kid.id.as_str());
                }
            }
        }
        attached += replies.len();
        threads.push((tlc, replies));
    }
    let orphans = group.comments.len() - tlcs.len() - attached;

    let Some(post) = post else {
        return (Vec::new(), orphans, tlcs.len());
    };
    let convs = threads
        .into_iter()
        .map(|(tlc, replies)| {
            Conversation::new(post.clone(), tlc.clone(), replies, orphans)
                .expect("replies were collected by descent from the tlc")
        })
        .collect();
    (convs, orphans, 0)
}

/// Groups comments by post and builds one conversation per top-level
/// comment. Replies that cannot be traced to a TLC are dropped; every
/// conversation of a post records that post's orphan count.
pub fn build_conversations<I>(comments: I, posts: &HashMap<String, Post>) -> (Vec<Conversation>, BuildReport)
where
    I: IntoIterator<Item = Comment>,
{
    let mut report = BuildReport::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut groups: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
    for c in comments {
        report.comments += 1;
        if !seen.insert(c.id.clone()) {
            report.duplicate_ids += 1;
            continue;
        }
        groups.entry(c.link_id.clone()).or_default().push(c);
    }

    let built: Vec<(Vec<Conversation>, usize, usize)> = groups
        .into_iter()
        .map(|(link_id, comments)| PostGroup { link_id, comments })
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|g| {
            let post = posts.get(&g.link_id);
            build_group(g, post)
        })
        .collect();

    let mut conversations = Vec::new();
    for (convs, orphans, missing) in built {
        report.orphans += orphans;
        report.missing_post += missing;
        conversations.extend(convs);
    }
    report.conversations = conversations.len();
    (conversations, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn post(id: &str) -> Post {
        Post {
            id: id.into(),
            title: "title".into(),
            selftext: String::new(),
            subreddit: "pics".into(),
            created_utc: 0,
            author: "op".into(),
        }
    }

    pub(crate) fn comment(id: &str, parent: &str, t: i64) -> Comment {
        Comment {
            id: id.into(),
            parent_id: Some(parent.into()),
            link_id: "p".into(),
            author: format!("u_{id}"),
            subreddit: "pics".into(),
            created_utc: t,
            body: "text".into(),
            score: 1,
            is_deleted: false,
            is_removed: false,
            is_bot: false,
        }
    }

    fn posts() -> HashMap<String, Post> {
        HashMap::from([("p".to_string(), post("p"))])
    }

    #[test]
    fn tlc_with_two_replies() {
        let cs = vec![comment("r2", "t", 3), comment("t", "p", 1), comment("r1", "t", 2)];
        let (convs, rep) = build_conversations(cs, &posts());
        assert_eq!(convs.len(), 1);
        assert_eq!(convs[0].replies().len(), 2);
        assert_eq!(convs[0].orphan_count, 0);
        assert_eq!(convs[0].replies()[0].id, "r1");
        assert_eq!(rep.orphans, 0);
    }

    #[test]
    fn orphan_is_counted_and_dropped() {
        let cs = vec![comment("t", "p", 1), comment("r1", "t", 2), comment("x", "nope", 3)];
        let (convs, rep) = build_conversations(cs, &posts());
        assert_eq!(convs[0].orphan_count, 1);
        assert_eq!(convs[0].replies().len(), 1);
        assert_eq!(rep.orphans, 1);
    }

    #[test]
    fn chain_builds_depth_two() {
        let cs = vec![comment("r2", "r1", 3), comment("r1", "t", 2), comment("t", "p", 1)];
        let (convs, _) = build_conversations(cs, &posts());
        let c = &convs[0];
        assert_eq!(c.children(ROOT), &[1]);
        assert_eq!(c.children(1), &[2]);
        assert_eq!(c.parent(2), Some(1));
    }

    #[test]
    fn missing_post_skips_conversation() {
        let mut cs = vec![comment("t", "p", 1)];
        cs[0].link_id = "q".into();
        cs[0].parent_id = Some("q".into());
        let (convs, rep) = build_conversations(cs, &posts());
        assert!(convs.is_empty());
        assert_eq!(rep.missing_post, 1);
    }

    #[test]
    fn cycles_are_orphans() {
        let cs = vec![comment("t", "p", 1), comment("a", "b", 2), comment("b", "a", 3)];
        let (convs, rep) = build_conversations(cs, &posts());
        assert_eq!(convs[0].replies().len(), 0);
        assert_eq!(rep.orphans, 2);
    }

    #[test]
    fn sibling_ties_break_by_id() {
        let cs = vec![comment("t", "p", 1), comment("b", "t", 5), comment("a", "t", 5)];
        let (convs, _) = build_conversations(cs, &posts());
        let ids: Vec<&str> = convs[0].replies().iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
    }

    #[test]
    fn line_round_trip() {
        let cs = vec![
            comment("t", "p", 1),
            comment("r1", "t", 2),
            comment("r2", "r1", 3),
            comment("r3", "t", 4),
        ];
        let (convs, _) = build_conversations(cs, &posts());
        let line = convs[0].to_line();
        assert!(line.contains("\"schema_version\":1"));
        let back = Conversation::from_line(&line, 1).unwrap();
        assert_eq!(back, convs[0]);
    }

    #[test]
    fn restrict_reattaches_to_kept_ancestor() {
        let cs = vec![
            comment("t", "p", 1),
            comment("a", "t", 2),
            comment("b", "a", 3),
            comment("c", "b", 4),
        ];
        let (convs, _) = build_conversations(cs, &posts());
        // nodes: 1=a, 2=b, 3=c; drop b
        let r = convs[0].restrict(&[1, 3]);
        assert_eq!(r.replies().len(), 2);
        assert_eq!(r.replies()[1].parent_id.as_deref(), Some("a"));
        let r = convs[0].restrict(&[3]);
        assert_eq!(r.replies()[0].parent_id.as_deref(), Some("t"));
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let (convs, _) = build_conversations(vec![comment("t", "p", 1)], &posts());
        let line = convs[0].to_line().replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(matches!(Conversation::from_line(&line, 4), Err(Error::Parse { line: 4, .. })));
    }
}
