//! Comment dumps to filtered, partitioned conversation trees.

mod record;
pub(crate) mod select;
mod tree;

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

pub use record::{parse_comment_record, parse_post_record, BotList, Comment, Post, DELETED_BODY, REMOVED_BODY};
pub use select::{
    downsample_training, filter_conversations, partition_dataset, DatasetPartition, FilterReport,
    DEFAULT_MAX_PER_SUBREDDIT, DEFAULT_MAX_TLC_WORDS, DEFAULT_MIN_PER_SUBREDDIT,
};
pub use tree::{build_conversations, BuildReport, Conversation, NodeId, ROOT, SCHEMA_VERSION};

use crate::error::{Error, Result};

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

pub fn read_comments(path: &Path, bots: &BotList) -> Result<Vec<Comment>> {
    let mut out = Vec::new();
    for (no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_comment_record(&line, no, bots)?);
    }
    Ok(out)
}

pub fn read_posts(path: &Path) -> Result<HashMap<String, Post>> {
    let mut out = HashMap::new();
    for (no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let post = parse_post_record(&line, no)?;
        out.entry(post.id.clone()).or_insert(post);
    }
    Ok(out)
}

/// Reads a canonical conversation file.
pub fn read_conversations(path: &Path) -> Result<Vec<Conversation>> {
    let mut out = Vec::new();
    for (no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Conversation::from_line(&line, no)?);
    }
    Ok(out)
}

pub fn write_conversations(path: &Path, convs: &[Conversation]) -> Result<()> {
    let mut text = String::new();
    for c in convs {
        text.push_str(&c.to_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
