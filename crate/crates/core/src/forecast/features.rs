use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use chrono::{DateTime, Datelike, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lda::{lda_tokens, LdaModel};
use crate::corpus::{Comment, Post};
use crate::error::{Error, Result};
use crate::textlex::{
    count_misspellings, flesch_kincaid_grade, sentiment_compound, subjectivity_score, word_count,
};
use crate::trajectory::{principal_components, tlc_block, PanelContext, TLC_BLOCK_NAMES};

pub const EMBEDDING_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Unknown,
    M,
    F,
}

/// Author gender lookup: `author<TAB>m|f` lines.
pub fn parse_gender_lookup(text: &str, source: &str) -> Result<BTreeMap<String, Gender>> {
    let mut out = BTreeMap::new();
    for (author, g) in crate::resources::parse_pairs(text, source)? {
        let g = match g.to_ascii_lowercase().as_str() {
            "m" => Gender::M,
            "f" => Gender::F,
            other => return Err(Error::Config(format!("{source}: unknown gender label `{other}`"))),
        };
        out.insert(author, g);
    }
    Ok(out)
}

/// Subreddit vectors reduced to `EMBEDDING_DIM` dimensions. Unknown names
/// get a deterministic pseudo-random vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubredditEmbeddings {
    pub table: BTreeMap<String, Vec<f64>>,
    pub seed: u64,
    /// Share of variance kept by the reduction, when one was done.
    pub explained: Option<f64>,
}

impl SubredditEmbeddings {
    pub fn hashed_only(seed: u64) -> Self {
        Self {
            table: BTreeMap::new(),
            seed,
            explained: None,
        }
    }

    /// Parses `name v1 v2 ...` lines and projects them onto their top
    /// principal components.
    pub fn from_text(text: &str, source: &str, seed: u64) -> Result<Self> {
        let mut names = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(name) = parts.next() else { continue };
            let row: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("{source}:{}: {e}", i + 1)))?;
            if row.is_empty() || rows.first().is_some_and(|r| r.len() != row.len()) {
                return Err(Error::Config(format!("{source}:{}: inconsistent vector width", i + 1)));
            }
            names.push(name.to_lowercase());
            rows.push(row);
        }
        if rows.is_empty() {
            return Ok(Self::hashed_only(seed));
        }
        let width = rows[0].len();
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&means).map(|(x, m)| x - m).collect())
            .collect();
        let active: Vec<usize> = (0..width).collect();
        let (values, loadings) = principal_components(&centered, &active, width)?;
        let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
        let k = EMBEDDING_DIM.min(width);
        let kept: f64 = values[..k].iter().map(|v| v.max(0.0)).sum();
        let table = names
            .into_iter()
            .zip(&centered)
            .map(|(name, c)| {
                let mut v: Vec<f64> = loadings[..k].iter().map(|l| crate::numeric::dot(l, c)).collect();
                v.resize(EMBEDDING_DIM, 0.0);
                (name, v)
            })
            .collect();
        Ok(Self {
            table,
            seed,
            explained: (total > 0.0).then(|| kept / total),
        })
    }

    pub fn hashed(&self, name: &str) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(name.to_lowercase().as_bytes());
        let digest = h.finalize();
        let mut s = [0u8; 32];
        s.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(s);
        (0..EMBEDDING_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    pub fn get(&self, name: &str) -> Vec<f64> {
        self.table.get(&name.to_lowercase()).cloned().unwrap_or_else(|| self.hashed(name))
    }
}

/// Everything fitted ahead of feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModels {
    pub post_lda: LdaModel,
    pub tlc_lda: LdaModel,
    pub embeddings: SubredditEmbeddings,
    pub genders: BTreeMap<String, Gender>,
    pub seed: u64,
}

impl FeatureModels {
    pub fn reindex(&mut self) {
        self.post_lda.reindex();
        self.tlc_lda.reindex();
    }
}

pub fn post_text(post: &Post) -> String {
    format!("{}\n{}", post.title, post.selftext)
}

/// Forecast inputs for one (post, TLC) pair. Built without access to any
/// reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastFeatures {
    pub tlc_block: [f64; 15],
    pub topic_post: Vec<f64>,
    pub topic_tlc: Vec<f64>,
    pub topic_cosine: f64,
    pub jaccard: f64,
    pub tlc_word_count: usize,
    pub tlc_sentiment: f64,
    pub tlc_subjectivity: f64,
    pub tlc_misspellings: usize,
    pub tlc_fk_grade: f64,
    pub author_gender: Gender,
    pub subreddit_embedding: Vec<f64>,
    /// sin/cos of day-of-month, day-of-week, hour-of-day
    pub time_cyclic: [f64; 6],
    pub minutes_since_post: f64,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = crate::numeric::dot(a, a).sqrt();
    let nb = crate::numeric::dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    crate::numeric::dot(a, b) / (na * nb)
}

/// Jaccard similarity of two sets; two empty sets give 0.
pub fn jaccard<T: Eq + std::hash::Hash>(a: &std::collections::HashSet<T>, b: &std::collections::HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn time_features(created_utc: i64) -> [f64; 6] {
    let t = DateTime::from_timestamp(created_utc, 0).unwrap_or_default();
    let angle = |x: f64, period: f64| (TAU * x / period).sin_cos();
    let (sd, cd) = angle(t.day0() as f64, 31.0);
    let (sw, cw) = angle(t.weekday().num_days_from_monday() as f64, 7.0);
    let (sh, ch) = angle(t.hour() as f64, 24.0);
    [sd, cd, sw, cw, sh, ch]
}

pub fn build_features(
    post: &Post,
    tlc: &Comment,
    ctx: &PanelContext,
    models: &FeatureModels,
) -> Result<ForecastFeatures> {
    let res = &ctx.resources;
    let ptext = post_text(post);
    let topic_post = models.post_lda.infer(&lda_tokens(&ptext, &res.stopwords), models.seed);
    let tlc_tokens = lda_tokens(&tlc.body, &res.stopwords);
    let topic_tlc = models.tlc_lda.infer(&tlc_tokens, models.seed);
    // compared in the post model's topic space so the two vectors share axes
    let tlc_in_post_space = models.post_lda.infer(&tlc_tokens, models.seed);
    let minutes = (tlc.created_utc - post.created_utc).max(0) as f64 / 60.0;
    Ok(ForecastFeatures {
        tlc_block: tlc_block(&tlc.body, ctx)?,
        topic_cosine: cosine(&topic_post, &tlc_in_post_space),
        topic_post,
        topic_tlc,
        jaccard: jaccard(&res.stopwords.content_words(&ptext), &res.stopwords.content_words(&tlc.body)),
        tlc_word_count: word_count(&tlc.body),
        tlc_sentiment: sentiment_compound(&tlc.body, &res.sentiment),
        tlc_subjectivity: subjectivity_score(&tlc.body, &res.subjectivity),
        tlc_misspellings: count_misspellings(&tlc.body, &res.dictionary),
        tlc_fk_grade: flesch_kincaid_grade(&tlc.body),
        author_gender: models.genders.get(&tlc.author).copied().unwrap_or(Gender::Unknown),
        subreddit_embedding: models.embeddings.get(&tlc.subreddit),
        time_cyclic: time_features(tlc.created_utc),
        minutes_since_post: minutes.ln_1p(),
    })
}

impl ForecastFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(96);
        v.extend_from_slice(&self.tlc_block);
        v.extend_from_slice(&self.topic_post);
        v.extend_from_slice(&self.topic_tlc);
        v.push(self.topic_cosine);
        v.push(self.jaccard);
        v.push(self.tlc_word_count as f64);
        v.push(self.tlc_sentiment);
        v.push(self.tlc_subjectivity);
        v.push(self.tlc_misspellings as f64);
        v.push(self.tlc_fk_grade);
        for g in [Gender::Unknown, Gender::M, Gender::F] {
            v.push(if self.author_gender == g { 1.0 } else { 0.0 });
        }
        v.extend_from_slice(&self.subreddit_embedding);
        v.extend_from_slice(&self.time_cyclic);
        v.push(self.minutes_since_post);
        v
    }
}

/// Column names matching `ForecastFeatures::to_vec`.
pub fn feature_names(post_topics: usize, tlc_topics: usize) -> Vec<String> {
    let mut names: Vec<String> = TLC_BLOCK_NAMES.iter().map(|s| s.to_string()).collect();
    names.extend((0..post_topics).map(|k| format!("topic_post_{k}")));
    names.extend((0..tlc_topics).map(|k| format!("topic_tlc_{k}")));
    for s in [
        "topic_cosine",
        "jaccard",
        "tlc_word_count",
        "tlc_sentiment",
        "tlc_subjectivity",
        "tlc_misspellings",
        "tlc_fk_grade",
        "gender_unknown",
        "gender_m",
        "gender_f",
    ] {
        names.push(s.into());
    }
    names.extend((0..EMBEDDING_DIM).map(|k| format!("subreddit_embedding_{k}")));
    for s in ["day_of_month", "day_of_week", "hour_of_day"] {
        names.push(format!("{s}_sin"));
        names.push(format!("{s}_cos"));
    }
    names.push("log1p_minutes_since_post".into());
    names
}

/// Looks up subreddit categories, defaulting to "uncategorized".
pub fn category_of<'a>(categories: &'a HashMap<String, String>, subreddit: &str) -> &'a str {
    categories
        .get(&subreddit.to_lowercase())
        .map(String::as_str)
        .unwrap_or("uncategorized")
}
