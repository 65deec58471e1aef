use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::resources::parse_word_list;

pub const DELETED_BODY: &str = "[deleted]";
pub const REMOVED_BODY: &str = "[removed]";

/// Case-insensitive set of bot account names.
#[derive(Debug, Clone, Default)]
pub struct BotList(HashSet<String>);

impl BotList {
    pub fn from_text(text: &str) -> Self {
        Self::from_names(parse_word_list(text))
    }

    pub fn from_names<I: IntoIterator<Item = S>, S: AsRef<str>>(names: I) -> Self {
        Self(names.into_iter().map(|n| n.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, author: &str) -> bool {
        self.0.contains(&author.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub parent_id: Option<String>,
    pub link_id: String,
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub body: String,
    pub score: i64,
    pub is_deleted: bool,
    pub is_removed: bool,
    pub is_bot: bool,
}

impl Comment {
    /// Top-level comments reply to the post itself.
    pub fn is_top_level(&self) -> bool {
        match &self.parent_id {
            None => true,
            Some(p) => *p == self.link_id,
        }
    }

    /// Whether the author identity is unknowable.
    pub fn author_deleted(&self) -> bool {
        self.author.is_empty() || self.author == DELETED_BODY
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub title: String,
    pub selftext: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub author: String,
}

/// Drops the `t1_`/`t3_`-style kind prefix used by dump identifiers.
fn strip_kind(id: &str) -> &str {
    match id.as_bytes() {
        [b't', d, b'_', ..] if d.is_ascii_digit() => &id[3..],
        _ => id,
    }
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    line: usize,
}

impl<'a> Fields<'a> {
    fn new(value: &'a Value, line: usize) -> Result<Self> {
        match value.as_object() {
            Some(map) => Ok(Self { map, line }),
            None => Err(Error::Parse {
                line,
                message: "record is not a JSON object".into(),
            }),
        }
    }

    fn present(&self, field: &str) -> Option<&'a Value> {
        self.map.get(field).filter(|v| !v.is_null())
    }

    fn string(&self, field: &str) -> Result<String> {
        match self.present(field) {
            None => Err(Error::Schema {
                line: self.line,
                field: field.into(),
            }),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            Some(other) => Err(self.bad(field, other)),
        }
    }

    fn optional_string(&self, field: &str) -> Result<Option<String>> {
        match self.present(field) {
            None => Ok(None),
            Some(_) => self.string(field).map(Some),
        }
    }

    fn integer(&self, field: &str) -> Result<i64> {
        let v = self.present(field).ok_or_else(|| Error::Schema {
            line: self.line,
            field: field.into(),
        })?;
        let parsed = match v {
            Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
            Value::String(s) => s
                .trim()
                .parse::<i64>()
                .ok()
                .or_else(|| s.trim().parse::<f64>().ok().map(|f| f as i64)),
            _ => None,
        };
        parsed.ok_or_else(|| self.bad(field, v))
    }

    fn timestamp(&self, field: &str) -> Result<i64> {
        let t = self.integer(field)?;
        if t < 0 {
            return Err(Error::Parse {
                line: self.line,
                message: format!("`{field}` must be non-negative, got {t}"),
            });
        }
        Ok(t)
    }

    fn bad(&self, field: &str, v: &Value) -> Error {
        Error::Parse {
            line: self.line,
            message: format!("field `{field}` has unexpected value {v}"),
        }
    }
}

fn parse_json(line: &str, line_no: usize) -> Result<Value> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

/// Parses one newline-delimited comment record (public dump schema).
pub fn parse_comment_record(line: &str, line_no: usize, bots: &BotList) -> Result<Comment> {
    let value = parse_json(line, line_no)?;
    let f = Fields::new(&value, line_no)?;
    let id = strip_kind(&f.string("id")?).to_string();
    if id.is_empty() {
        return Err(Error::Schema {
            line: line_no,
            field: "id".into(),
        });
    }
    let link_id = strip_kind(&f.string("link_id")?).to_string();
    let parent_id = f.optional_string("parent_id")?.map(|p| strip_kind(&p).to_string());
    let author = f.string("author")?;
    let body = f.string("body")?;
    Ok(Comment {
        is_bot: bots.contains(&author),
        is_deleted: body.trim() == DELETED_BODY,
        is_removed: body.trim() == REMOVED_BODY,
        id,
        parent_id,
        link_id,
        author,
        subreddit: f.string("subreddit")?,
        created_utc: f.timestamp("created_utc")?,
        body,
        score: f.integer("score")?,
    })
}

/// Parses one newline-delimited post (submission) record.
pub fn parse_post_record(line: &str, line_no: usize) -> Result<Post> {
    let value = parse_json(line, line_no)?;
    let f = Fields::new(&value, line_no)?;
    let id = strip_kind(&f.string("id")?).to_string();
    if id.is_empty() {
        return Err(Error::Schema {
            line: line_no,
            field: "id".into(),
        });
    }
    Ok(Post {
        id,
        title: f.optional_string("title")?.unwrap_or_default(),
        selftext: f.optional_string("selftext")?.unwrap_or_default(),
        subreddit: f.string("subreddit")?,
        created_utc: f.timestamp("created_utc")?,
        author: f.optional_string("author")?.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bots() -> BotList {
        BotList::from_names(["AutoModerator"])
    }

    const VALID: &str = r#"{"id":"c1","parent_id":"t3_p1","link_id":"t3_p1","author":"alice","subreddit":"pics","created_utc":1500000000,"body":"hi","score":3}"#;

    #[test]
    fn valid_record_maps_fields() {
        let c = parse_comment_record(VALID, 1, &bots()).unwrap();
        assert_eq!(c.author, "alice");
        assert_eq!(c.body, "hi");
        assert_eq!(c.parent_id.as_deref(), Some("p1"));
        assert_eq!(c.link_id, "p1");
        assert!(!c.is_bot && !c.is_deleted && !c.is_removed);
        assert!(c.is_top_level());
    }

    #[test]
    fn deleted_and_removed_bodies_flag() {
        let d = VALID.replace("\"hi\"", "\"[deleted]\"");
        assert!(parse_comment_record(&d, 1, &bots()).unwrap().is_deleted);
        let r = VALID.replace("\"hi\"", "\"[removed]\"");
        assert!(parse_comment_record(&r, 1, &bots()).unwrap().is_removed);
    }

    #[test]
    fn bot_match_is_case_insensitive() {
        let b = VALID.replace("alice", "automoderator");
        assert!(parse_comment_record(&b, 1, &bots()).unwrap().is_bot);
    }

    #[test]
    fn missing_id_is_schema_error() {
        let m = VALID.replace("\"id\":\"c1\",", "");
        match parse_comment_record(&m, 7, &bots()) {
            Err(Error::Schema { line, field }) => {
                assert_eq!(line, 7);
                assert_eq!(field, "id");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_carries_line() {
        match parse_comment_record("{not json", 12, &bots()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn string_timestamps_and_negative_rejected() {
        let s = VALID.replace("1500000000", "\"1500000000\"");
        assert_eq!(parse_comment_record(&s, 1, &bots()).unwrap().created_utc, 1_500_000_000);
        let n = VALID.replace("1500000000", "-5");
        assert!(matches!(parse_comment_record(&n, 1, &bots()), Err(Error::Parse { .. })));
    }

    #[test]
    fn post_record() {
        let p = parse_post_record(
            r#"{"id":"p1","title":"Q?","subreddit":"askscience","created_utc":10,"author":"op"}"#,
            1,
        )
        .unwrap();
        assert_eq!(p.selftext, "");
        assert_eq!(p.title, "Q?");
    }
}
