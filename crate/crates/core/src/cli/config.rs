use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DEFAULT_MAX_TLC_WORDS, DEFAULT_MAX_PER_SUBREDDIT, DEFAULT_MIN_PER_SUBREDDIT};
use crate::error::{Error, Result};
use crate::forecast::{GbtParams, LdaParams, DEFAULT_RIDGE_LAMBDA};
use crate::rank_eval::RankerOptions;
use crate::resources::ResourcePaths;
use crate::scorers::{LabelRules, ToxicityConfig, TrainOptions};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub comments: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub genders: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub max_tlc_words: usize,
    pub split: [u32; 3],
    pub downsample: bool,
    pub min_per_subreddit: usize,
    pub max_per_subreddit: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            max_tlc_words: DEFAULT_MAX_TLC_WORDS,
            split: [8, 1, 1],
            downsample: false,
            min_per_subreddit: DEFAULT_MIN_PER_SUBREDDIT,
            max_per_subreddit: DEFAULT_MAX_PER_SUBREDDIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub information_model: Option<PathBuf>,
    pub mentoring_model: Option<PathBuf>,
    pub politeness_model: Option<PathBuf>,
    pub supportiveness_model: Option<PathBuf>,
    /// Use the bundled lexicon when a regressor model file is unusable.
    pub allow_regressor_fallback: bool,
    pub min_info_score: i64,
    pub max_negatives: usize,
    pub training: TrainOptions,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let rules = LabelRules::default();
        Self {
            information_model: None,
            mentoring_model: None,
            politeness_model: None,
            supportiveness_model: None,
            allow_regressor_fallback: true,
            min_info_score: rules.min_info_score,
            max_negatives: rules.max_negatives,
            training: TrainOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeConfig {
    pub lambda: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_RIDGE_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerConfig {
    pub l2: f64,
    pub max_iter: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        let o = RankerOptions::default();
        Self {
            l2: o.l2,
            max_iter: o.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub conversations: usize,
    pub tlcs_per_post: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            conversations: 5000,
            tlcs_per_post: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub output_dir: PathBuf,
    pub input: InputPaths,
    pub resources: ResourcePaths,
    pub toxicity: ToxicityConfig,
    pub selection: SelectionConfig,
    pub classifiers: ClassifierConfig,
    pub lda: LdaParams,
    pub ridge: RidgeConfig,
    pub gbt: GbtParams,
    pub ranker: RankerConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: None,
            output_dir: PathBuf::from("out"),
            input: InputPaths::default(),
            resources: ResourcePaths::default(),
            toxicity: ToxicityConfig::default(),
            selection: SelectionConfig::default(),
            classifiers: ClassifierConfig::default(),
            lda: LdaParams::default(),
            ridge: RidgeConfig::default(),
            gbt: GbtParams::default(),
            ranker: RankerConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn literal(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies a `dotted.key=value` override to a TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("--set has an empty key segment in `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("--set: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), literal(value.trim()));
    Ok(())
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    /// Reads the config file (if any), applies overrides and resolves
    /// relative paths against the file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (mut table, base) = match path {
            Some(p) => {
                let text = crate::resources::read_text(p)?;
                let t: toml::Table = text
                    .parse()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                (t, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        let i = &mut self.input;
        for p in [
            &mut i.comments,
            &mut i.posts,
            &mut i.judgments,
            &mut i.truth,
            &mut i.embeddings,
            &mut i.genders,
        ] {
            resolve(base, p);
        }
        let r = &mut self.resources;
        for p in [
            &mut r.sentiment_valence,
            &mut r.sentiment_boosters,
            &mut r.negators,
            &mut r.subjectivity,
            &mut r.dictionary,
            &mut r.stopwords,
            &mut r.educational_domains,
            &mut r.donation_domains,
            &mut r.markers,
            &mut r.politeness,
            &mut r.supportiveness,
            &mut r.toxicity_fallback,
            &mut r.bots,
            &mut r.categories,
            &mut r.ask_subreddits,
        ] {
            resolve(base, p);
        }
        let c = &mut self.classifiers;
        for p in [
            &mut c.information_model,
            &mut c.mentoring_model,
            &mut c.politeness_model,
            &mut c.supportiveness_model,
        ] {
            resolve(base, p);
        }
        resolve(base, &mut self.toxicity.cache_path);
    }

    /// Every referenced input file must exist.
    pub fn validate(&self) -> Result<()> {
        self.toxicity.validate()?;
        self.gbt.validate()?;
        let i = &self.input;
        let mut paths: Vec<&Path> = [&i.comments, &i.posts, &i.judgments, &i.truth, &i.embeddings, &i.genders]
            .into_iter()
            .filter_map(|p| p.as_deref())
            .collect();
        paths.extend(self.resources.configured());
        for p in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("configured file not found: {}", p.display())));
            }
        }
        if self.selection.split.contains(&0) {
            return Err(Error::Config("selection.split ratios must all be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_literals() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "gbt.rounds=10").unwrap();
        apply_override(&mut t, "toxicity.offline=true").unwrap();
        apply_override(&mut t, "output_dir=runs/a").unwrap();
        let cfg: PipelineConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.gbt.rounds, 10);
        assert!(cfg.toxicity.offline);
        assert_eq!(cfg.output_dir, PathBuf::from("runs/a"));
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = PipelineConfig::load(None, &["gbt.nonsense=1".into()]).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "output_dir = \"o\"\n[input]\ncomments = \"c.jsonl\"\n").unwrap();
        let cfg = PipelineConfig::load(Some(&p), &[]).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("o"));
        assert_eq!(cfg.input.comments, Some(dir.path().join("c.jsonl")));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
