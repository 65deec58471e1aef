use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::PipelineConfig;
use super::report::{fmt_f, fmt_opt, Report};
use crate::corpus::{
    build_conversations, downsample_training, filter_conversations, partition_dataset, read_comments, read_posts,
    read_conversations, write_conversations, Conversation, DatasetPartition,
};
use crate::error::{Error, Result};
use crate::forecast::{
    build_features, category_mse, evaluate_regression, feature_names, fit_feature_models, half_split_analysis,
    parse_gender_lookup, train_forecasters, ForecastBundle, ForecasterKind, SubredditEmbeddings,
};
use crate::numeric::pearson;
use crate::rank_eval::{
    fit_pairwise_ranker, krippendorff_alpha, mcc, mcc_significance, rank_pair_by_trajectory, ranking_accuracy,
    read_judgments, split_judgments, Choice, PairJudgment, PairwiseRanker, RankerOptions,
};
use crate::resources::{read_text, Resources};
use crate::scorers::{
    heuristic_label_corpus, train_ngram_classifier, LabelRules, LabelTask, NgramLogisticModel, TextRegressorHandle,
    RegressorKind, ToxicityScorer,
};
use crate::synth::{self, SynthParams};
use crate::trajectory::{
    assemble_panel, fit_trajectory, manifest, read_panels, write_panels, PanelContext, PanelRow, TrajectoryModel,
    METRIC_COUNT, METRIC_NAMES,
};

pub const CONVERSATIONS_FILE: &str = "conversations.jsonl";
pub const PARTITION_FILE: &str = "partition.json";
pub const PANELS_FILE: &str = "panels.jsonl";
pub const FORECASTS_FILE: &str = "forecasts.jsonl";
pub const RANKINGS_FILE: &str = "rankings.jsonl";
pub const THROUGHPUT_FILE: &str = "throughput.json";
pub const REPORTS_DIR: &str = "reports";
pub const MODELS_DIR: &str = "models";

/// Per-TLC forecasts with the realized trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub id: String,
    pub post_id: String,
    pub subreddit: String,
    pub split: String,
    pub truth: f64,
    pub mean: f64,
    pub ridge: f64,
    pub gbt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub post_id: String,
    pub tlc_a: String,
    pub tlc_b: String,
    pub annotator_id: String,
    pub split: String,
    pub human: Choice,
    /// `None` when the realized trajectories are equal.
    pub oracle: Option<Choice>,
    pub ridge: Choice,
    pub gbt: Choice,
    pub ranker: Choice,
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn model_path(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(MODELS_DIR).join(format!("{name}.json"))
}

fn reports_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join(REPORTS_DIR)
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("`{key}` is not set in the configuration")))
}

fn upstream(path: &Path, stage: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} not found; run `prosocial {stage}` first", path.display())))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Prefixes parse errors with the file they came from.
fn located(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("row serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

fn read_partition(cfg: &PipelineConfig) -> Result<DatasetPartition> {
    let p = out(cfg, PARTITION_FILE);
    upstream(&p, "ingest")?;
    serde_json::from_str(&read_text(&p)?).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", p.display()),
    })
}

fn split_of(part: &DatasetPartition) -> HashMap<&str, &'static str> {
    let mut m = HashMap::new();
    for (ids, name) in [(&part.train, "train"), (&part.dev, "dev"), (&part.test, "test")] {
        for id in ids {
            m.insert(id.as_str(), name);
        }
    }
    m
}

fn load_conversations(cfg: &PipelineConfig) -> Result<Vec<Conversation>> {
    let p = out(cfg, CONVERSATIONS_FILE);
    upstream(&p, "ingest")?;
    read_conversations(&p).map_err(located(&p))
}

pub fn load_resources(cfg: &PipelineConfig) -> Result<Resources> {
    Resources::load(&cfg.resources)
}

fn classifier_path(cfg: &PipelineConfig, configured: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    configured.clone().or_else(|| Some(model_path(cfg, name)).filter(|p| p.is_file()))
}

/// Scorers for panel assembly: trained classifiers when available, the
/// configured regressors and the toxicity client.
pub fn panel_context(cfg: &PipelineConfig, resources: Resources) -> Result<PanelContext> {
    let toxicity = ToxicityScorer::new(cfg.toxicity.clone(), resources.toxicity_fallback.clone())?;
    let c = &cfg.classifiers;
    let load = |p: Option<PathBuf>| p.map(|p| NgramLogisticModel::load(&p)).transpose();
    let information = load(classifier_path(cfg, &c.information_model, "information"))?;
    let mentoring = load(classifier_path(cfg, &c.mentoring_model, "mentoring"))?;
    let politeness = TextRegressorHandle::configure(
        RegressorKind::Politeness,
        c.politeness_model.as_deref(),
        c.allow_regressor_fallback,
        &resources.politeness,
    )?;
    let supportiveness = TextRegressorHandle::configure(
        RegressorKind::Supportiveness,
        c.supportiveness_model.as_deref(),
        c.allow_regressor_fallback,
        &resources.supportiveness,
    )?;
    Ok(PanelContext {
        resources,
        information,
        mentoring,
        politeness,
        supportiveness,
        toxicity,
    })
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let posts_path = required(&cfg.input.posts, "input.posts")?;
    let comments_path = required(&cfg.input.comments, "input.comments")?;
    let posts = read_posts(posts_path).map_err(located(posts_path))?;
    let comments = read_comments(comments_path, &res.bots).map_err(located(comments_path))?;
    let (convs, built) = build_conversations(comments, &posts);
    let (kept, filtered) = filter_conversations(convs, cfg.selection.max_tlc_words);
    let ids: Vec<String> = kept.iter().map(|c| c.id().to_string()).collect();
    let mut part = partition_dataset(&ids, cfg.selection.split, cfg.seed)?;
    let s = &cfg.selection;
    if s.downsample {
        let train: BTreeSet<&str> = part.train.iter().map(String::as_str).collect();
        let pool: Vec<Conversation> = kept.iter().filter(|c| train.contains(c.id())).cloned().collect();
        part.train = downsample_training(pool, s.min_per_subreddit, s.max_per_subreddit, cfg.seed)
            .iter()
            .map(|c| c.id().to_string())
            .collect();
    }
    create_dir(&cfg.output_dir)?;
    write_conversations(&out(cfg, CONVERSATIONS_FILE), &kept)?;
    let pp = out(cfg, PARTITION_FILE);
    std::fs::write(&pp, serde_json::to_string_pretty(&part).expect("partition serializes") + "\n")
        .map_err(|e| Error::io(&pp, e))?;

    let mut r = Report::new("ingest");
    r.kv("comments read", json!(built.comments));
    r.kv("duplicate ids dropped", json!(built.duplicate_ids));
    r.kv("orphan replies dropped", json!(built.orphans));
    r.kv("tlcs without post", json!(built.missing_post));
    r.kv("conversations built", json!(built.conversations));
    r.line("");
    r.table(
        &["filter", "removed"],
        &[
            vec!["tlc deleted or removed".into(), filtered.tlc_deleted.to_string()],
            vec!["tlc too long".into(), filtered.tlc_too_long.to_string()],
            vec!["contains bot comment".into(), filtered.contains_bot.to_string()],
        ],
    );
    for (reason, n) in [
        ("tlc_deleted", filtered.tlc_deleted),
        ("tlc_too_long", filtered.tlc_too_long),
        ("contains_bot", filtered.contains_bot),
    ] {
        r.record("filter", json!({ "reason": reason, "removed": n }));
    }
    r.line("");
    r.kv("conversations retained", json!(filtered.retained));
    r.kv("train", json!(part.train.len()));
    r.kv("dev", json!(part.dev.len()));
    r.kv("test", json!(part.test.len()));
    r.write(&reports_dir(cfg))
}

pub fn cmd_train_classifiers(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let convs = load_conversations(cfg)?;
    let part = read_partition(cfg)?;
    let train: BTreeSet<&str> = part.train.iter().map(String::as_str).collect();
    let train_convs: Vec<Conversation> = convs.into_iter().filter(|c| train.contains(c.id())).collect();
    let rules = LabelRules {
        ask_subreddits: res.ask_subreddits.clone(),
        min_info_score: cfg.classifiers.min_info_score,
        max_negatives: cfg.classifiers.max_negatives,
    };
    create_dir(&cfg.output_dir.join(MODELS_DIR))?;
    let mut r = Report::new("train-classifiers");
    let mut rows = Vec::new();
    for (task, name) in [(LabelTask::Information, "information"), (LabelTask::Mentoring, "mentoring")] {
        let path = model_path(cfg, name);
        let outcome = heuristic_label_corpus(&train_convs, task, &rules, cfg.seed)
            .and_then(|corpus| {
                let m = train_ngram_classifier(&corpus, &cfg.classifiers.training, cfg.seed)?;
                Ok((corpus, m))
            });
        match outcome {
            Ok((corpus, model)) => {
                model.save(&path)?;
                let pos = corpus.positives();
                let neg = corpus.labels.len() - pos;
                rows.push(vec![
                    name.to_string(),
                    "trained".into(),
                    pos.to_string(),
                    neg.to_string(),
                    model.min_ngram_frequency.to_string(),
                    fmt_opt(model.cv_f1),
                ]);
                r.record(
                    "classifier",
                    json!({ "task": name, "status": "trained", "positives": pos, "negatives": neg,
                            "min_ngram_frequency": model.min_ngram_frequency, "cv_f1": model.cv_f1 }),
                );
            }
            Err(e @ (Error::EmptyCorpus(_) | Error::Training(_))) => {
                // a stale model from an earlier run would otherwise be picked up by `score`
                if path.is_file() {
                    std::fs::remove_file(&path).map_err(|err| Error::io(&path, err))?;
                }
                rows.push(vec![name.to_string(), "skipped".into(), "-".into(), "-".into(), "-".into(), "-".into()]);
                r.record("classifier", json!({ "task": name, "status": "skipped", "reason": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    r.table(&["task", "status", "positives", "negatives", "min_freq", "cv_f1"], &rows);
    r.write(&reports_dir(cfg))
}

pub fn cmd_score(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let ctx = panel_context(cfg, res)?;
    let convs = load_conversations(cfg)?;
    let started = Instant::now();
    let panels = convs
        .par_iter()
        .map(|c| assemble_panel(c, &ctx))
        .collect::<Result<Vec<_>>>()?;
    let seconds = started.elapsed().as_secs_f64();
    let comments: usize = convs.iter().map(|c| c.replies().len() + 1).sum();
    let rows: Vec<PanelRow> = convs
        .iter()
        .zip(&panels)
        .map(|(c, p)| PanelRow {
            id: c.id().to_string(),
            subreddit: c.subreddit().to_string(),
            values: p.values.clone(),
            defined: p.defined.clone(),
        })
        .collect();
    write_panels(&out(cfg, PANELS_FILE), &rows)?;

    // timing and request counts vary between runs, so they stay out of reports/
    let tp = out(cfg, THROUGHPUT_FILE);
    let stats = json!({
        "stage": "score",
        "conversations": convs.len(),
        "comments": comments,
        "seconds": seconds,
        "comments_per_sec": if seconds > 0.0 { comments as f64 / seconds } else { 0.0 },
        "toxicity_requests": ctx.toxicity.request_count(),
        "toxicity_cache_hits": ctx.toxicity.cache_hits(),
    });
    std::fs::write(&tp, serde_json::to_string_pretty(&stats).expect("json") + "\n").map_err(|e| Error::io(&tp, e))?;
    eprintln!(
        "scored {comments} comments in {seconds:.3} s ({:.1} comments/sec)",
        stats["comments_per_sec"].as_f64().unwrap_or(0.0)
    );

    let mut r = Report::new("score");
    r.kv("conversations", json!(convs.len()));
    r.kv("comments", json!(comments));
    r.kv("toxicity backend", json!(if cfg.toxicity.offline { "offline" } else { "api" }));
    r.kv("information classifier", json!(if ctx.information.is_some() { "trained" } else { "none" }));
    r.kv("mentoring classifier", json!(if ctx.mentoring.is_some() { "trained" } else { "none" }));
    r.kv("politeness backend", json!(ctx.politeness.backend_name()));
    r.kv("supportiveness backend", json!(ctx.supportiveness.backend_name()));
    r.line("");
    let mut table = Vec::new();
    for (m, name) in METRIC_NAMES.iter().enumerate() {
        let vals: Vec<f64> = panels.iter().filter(|p| p.defined[m]).map(|p| p.values[m]).collect();
        let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
        table.push(vec![name.to_string(), vals.len().to_string(), fmt_f(mean)]);
        r.record(
            "metric",
            json!({ "metric": name, "defined": vals.len(), "mean": if mean.is_nan() { None } else { Some(mean) } }),
        );
    }
    r.table(&["metric", "defined", "mean"], &table);
    r.write(&reports_dir(cfg))
}

fn load_panels(cfg: &PipelineConfig) -> Result<Vec<PanelRow>> {
    let p = out(cfg, PANELS_FILE);
    upstream(&p, "score")?;
    let (found, rows) = read_panels(&p).map_err(located(&p))?;
    let expected = manifest();
    if found != expected {
        return Err(Error::Manifest { expected, found });
    }
    Ok(rows)
}

fn load_trajectory(cfg: &PipelineConfig) -> Result<TrajectoryModel> {
    let p = model_path(cfg, "trajectory");
    upstream(&p, "fit-trajectory")?;
    let m = TrajectoryModel::load(&p)?;
    m.check_manifest(&manifest())?;
    Ok(m)
}

/// Realized trajectory per conversation id.
fn trajectories(model: &TrajectoryModel, rows: &[PanelRow]) -> Result<HashMap<String, f64>> {
    rows.iter().map(|r| Ok((r.id.clone(), model.score(&r.panel()?)))).collect()
}

fn truth_correlation(cfg: &PipelineConfig, scores: &HashMap<String, f64>, r: &mut Report) -> Result<()> {
    let Some(path) = &cfg.input.truth else {
        return Ok(());
    };
    let truth = synth::read_truth(path).map_err(located(path))?;
    let (x, y): (Vec<f64>, Vec<f64>) = truth
        .iter()
        .filter_map(|t| scores.get(&t.tlc_id).map(|s| (*s, t.factor)))
        .unzip();
    let rho = pearson(&x, &y);
    r.line("");
    r.kv("planted factor matched", json!(x.len()));
    r.kv("pearson r with planted factor", json!(rho));
    Ok(())
}

pub fn cmd_fit_trajectory(cfg: &PipelineConfig) -> Result<()> {
    let rows = load_panels(cfg)?;
    let panels = rows.iter().map(PanelRow::panel).collect::<Result<Vec<_>>>()?;
    let model = fit_trajectory(&panels)?;
    create_dir(&cfg.output_dir.join(MODELS_DIR))?;
    model.save(&model_path(cfg, "trajectory"))?;

    let mut r = Report::new("fit-trajectory");
    r.kv("conversations", json!(panels.len()));
    r.kv("zero-variance metrics", json!(model.zero_variance.join(",")));
    r.line("");
    explained_variance_table(&model, &mut r)?;
    r.line("");
    let first = model.signed_loadings(0);
    let rows_: Vec<Vec<String>> = METRIC_NAMES
        .iter()
        .zip(&first)
        .map(|(m, l)| vec![m.to_string(), fmt_f(*l)])
        .collect();
    for (m, l) in METRIC_NAMES.iter().zip(&first) {
        r.record("loading", json!({ "component": 1, "metric": m, "loading": l }));
    }
    r.table(&["metric", "pc1 loading"], &rows_);
    let scores = trajectories(&model, &rows)?;
    truth_correlation(cfg, &scores, &mut r)?;
    r.write(&reports_dir(cfg))
}

fn explained_variance_table(model: &TrajectoryModel, r: &mut Report) -> Result<()> {
    let shown = model.components().min(5);
    let mut rows = Vec::new();
    for k in 1..=shown {
        let ratio = model.explained_variance_ratio[k - 1];
        let cumulative = model.explained_variance(k)?;
        rows.push(vec![k.to_string(), fmt_f(ratio), fmt_f(cumulative)]);
        r.record("explained_variance", json!({ "component": k, "ratio": ratio, "cumulative": cumulative }));
    }
    r.table(&["component", "ratio", "cumulative"], &rows);
    Ok(())
}

fn load_embeddings(cfg: &PipelineConfig) -> Result<SubredditEmbeddings> {
    match &cfg.input.embeddings {
        Some(p) => SubredditEmbeddings::from_text(&read_text(p)?, &p.display().to_string(), cfg.seed),
        None => Ok(SubredditEmbeddings::hashed_only(cfg.seed)),
    }
}

fn feature_rows(convs: &[&Conversation], ctx: &PanelContext, bundle_features: &crate::forecast::FeatureModels) -> Result<Vec<Vec<f64>>> {
    convs
        .par_iter()
        .map(|c| build_features(&c.post, &c.tlc, ctx, bundle_features).map(|f| f.to_vec()))
        .collect()
}

pub fn cmd_train_forecasters(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let convs = load_conversations(cfg)?;
    let part = read_partition(cfg)?;
    let model = load_trajectory(cfg)?;
    let truth = trajectories(&model, &load_panels(cfg)?)?;
    let by_id: HashMap<&str, &Conversation> = convs.iter().map(|c| (c.id(), c)).collect();
    let pick = |ids: &[String]| -> Result<(Vec<&Conversation>, Vec<f64>)> {
        let cs: Vec<&Conversation> = ids.iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        let ys = cs
            .iter()
            .map(|c| {
                truth
                    .get(c.id())
                    .copied()
                    .ok_or_else(|| Error::Config(format!("no panel for conversation {}; rerun `score`", c.id())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((cs, ys))
    };
    let (train_c, train_y) = pick(&part.train)?;
    let (dev_c, dev_y) = pick(&part.dev)?;

    let genders = match &cfg.input.genders {
        Some(p) => parse_gender_lookup(&read_text(p)?, &p.display().to_string())?,
        None => BTreeMap::new(),
    };
    let owned: Vec<Conversation> = train_c.iter().map(|c| (*c).clone()).collect();
    let fm = fit_feature_models(&owned, &res.stopwords, cfg.lda, load_embeddings(cfg)?, genders, cfg.seed)?;
    let ctx = panel_context(cfg, res)?;
    let train_x = feature_rows(&train_c, &ctx, &fm)?;
    let dev_x = feature_rows(&dev_c, &ctx, &fm)?;
    let bundle = train_forecasters(fm, (&train_x, &train_y), (&dev_x, &dev_y), cfg.ridge.lambda, &cfg.gbt, cfg.seed)?;
    create_dir(&cfg.output_dir.join(MODELS_DIR))?;
    bundle.save(&model_path(cfg, "forecaster"))?;

    let mut r = Report::new("train-forecasters");
    r.kv("train rows", json!(train_x.len()));
    r.kv("dev rows", json!(dev_x.len()));
    r.kv("feature dimension", json!(bundle.feature_names.len()));
    r.kv("baseline mean", json!(bundle.baseline_mean));
    r.kv("ridge lambda", json!(bundle.ridge.lambda));
    r.kv("gbt rounds trained", json!(bundle.gbt.rounds_trained));
    r.kv("gbt trees kept", json!(bundle.gbt.trees.len()));
    r.kv("gbt max depth", json!(bundle.gbt.trees.iter().map(|t| t.depth()).max().unwrap_or(0)));
    if !dev_x.is_empty() {
        r.line("");
        let mut rows = Vec::new();
        for kind in ForecasterKind::ALL {
            let pred: Vec<f64> = dev_x.iter().map(|x| bundle.predict(kind, x)).collect();
            let mse = pred.iter().zip(&dev_y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / pred.len() as f64;
            rows.push(vec![kind.name().to_string(), fmt_f(mse)]);
            r.record("dev_mse", json!({ "forecaster": kind.name(), "mse": mse }));
        }
        r.table(&["forecaster", "dev mse"], &rows);
    }
    r.write(&reports_dir(cfg))
}

pub fn cmd_forecast(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let bp = model_path(cfg, "forecaster");
    upstream(&bp, "train --stage forecasters")?;
    let bundle = ForecastBundle::load(&bp)?;
    let names = feature_names(bundle.features.post_lda.topics(), bundle.features.tlc_lda.topics());
    if names != bundle.feature_names {
        return Err(Error::Manifest {
            expected: bundle.feature_names.clone(),
            found: names,
        });
    }
    let convs = load_conversations(cfg)?;
    let part = read_partition(cfg)?;
    let splits = split_of(&part);
    let model = load_trajectory(cfg)?;
    let truth = trajectories(&model, &load_panels(cfg)?)?;
    let ctx = panel_context(cfg, res)?;
    let refs: Vec<&Conversation> = convs.iter().collect();
    let xs = feature_rows(&refs, &ctx, &bundle.features)?;
    let mut rows = Vec::with_capacity(convs.len());
    for (c, x) in convs.iter().zip(&xs) {
        let Some(&t) = truth.get(c.id()) else {
            return Err(Error::Config(format!("no panel for conversation {}; rerun `score`", c.id())));
        };
        rows.push(ForecastRow {
            id: c.id().to_string(),
            post_id: c.post.id.clone(),
            subreddit: c.subreddit().to_string(),
            split: splits.get(c.id()).copied().unwrap_or("excluded").to_string(),
            truth: t,
            mean: bundle.predict(ForecasterKind::Mean, x),
            ridge: bundle.predict(ForecasterKind::Ridge, x),
            gbt: bundle.predict(ForecasterKind::Gbt, x),
        });
    }
    write_jsonl(&out(cfg, FORECASTS_FILE), &rows)?;

    let mut r = Report::new("forecast");
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for row in &rows {
        *counts.entry(row.split.as_str()).or_default() += 1;
    }
    let table: Vec<Vec<String>> = counts.iter().map(|(s, n)| vec![s.to_string(), n.to_string()]).collect();
    for (s, n) in &counts {
        r.record("split", json!({ "split": s, "forecasts": n }));
    }
    r.table(&["split", "forecasts"], &table);
    r.write(&reports_dir(cfg))
}

fn load_forecasts(cfg: &PipelineConfig) -> Result<Vec<ForecastRow>> {
    let p = out(cfg, FORECASTS_FILE);
    upstream(&p, "forecast")?;
    read_jsonl(&p)
}

/// Ranker inputs for one TLC: the boosted forecast first (the
/// initialization puts its weight there), then ridge.
fn ranker_features(f: &ForecastRow) -> Vec<f64> {
    vec![f.gbt, f.ridge]
}

fn by_forecast(choice_a: f64, choice_b: f64) -> Choice {
    rank_pair_by_trajectory(choice_a, choice_b)
}

fn usable_judgments(cfg: &PipelineConfig, known: &HashMap<&str, &ForecastRow>) -> Result<(Vec<PairJudgment>, usize)> {
    let p = required(&cfg.input.judgments, "input.judgments")?;
    let all = read_judgments(p).map_err(located(p))?;
    let total = all.len();
    let kept: Vec<PairJudgment> = all
        .into_iter()
        .filter(|j| known.contains_key(j.tlc_a.as_str()) && known.contains_key(j.tlc_b.as_str()))
        .collect();
    let dropped = total - kept.len();
    Ok((kept, dropped))
}

pub fn cmd_rank(cfg: &PipelineConfig) -> Result<()> {
    let forecasts = load_forecasts(cfg)?;
    let known: HashMap<&str, &ForecastRow> = forecasts.iter().map(|f| (f.id.as_str(), f)).collect();
    let (judgments, dropped) = usable_judgments(cfg, &known)?;
    let (train, dev, test) = split_judgments(&judgments, cfg.seed);
    let pair = |j: &PairJudgment| (ranker_features(known[j.tlc_a.as_str()]), ranker_features(known[j.tlc_b.as_str()]));
    let init = PairwiseRanker::from_trajectory(2);
    let labeled: Vec<(Vec<f64>, Vec<f64>, Choice)> = train
        .iter()
        .map(|j| {
            let (a, b) = pair(j);
            (a, b, j.choice)
        })
        .collect();
    let opts = RankerOptions {
        l2: cfg.ranker.l2,
        max_iter: cfg.ranker.max_iter,
    };
    let (ranker, status) = match fit_pairwise_ranker(&labeled, &init, &opts) {
        Ok(r) => (r, "fine-tuned".to_string()),
        Err(Error::Training(msg)) => (init.clone(), format!("initialization kept: {msg}")),
        Err(e) => return Err(e),
    };
    create_dir(&cfg.output_dir.join(MODELS_DIR))?;
    let rp = model_path(cfg, "ranker");
    std::fs::write(&rp, serde_json::to_string_pretty(&ranker).expect("ranker serializes") + "\n")
        .map_err(|e| Error::io(&rp, e))?;

    let mut rows = Vec::new();
    for (split, js) in [("train", &train), ("dev", &dev), ("test", &test)] {
        for j in js.iter() {
            let (fa, fb) = (known[j.tlc_a.as_str()], known[j.tlc_b.as_str()]);
            let (xa, xb) = pair(j);
            rows.push(RankingRow {
                post_id: j.post_id.clone(),
                tlc_a: j.tlc_a.clone(),
                tlc_b: j.tlc_b.clone(),
                annotator_id: j.annotator_id.clone(),
                split: split.to_string(),
                human: j.choice,
                oracle: (fa.truth != fb.truth).then(|| rank_pair_by_trajectory(fa.truth, fb.truth)),
                ridge: by_forecast(fa.ridge, fb.ridge),
                gbt: by_forecast(fa.gbt, fb.gbt),
                ranker: ranker.choose(&xa, &xb),
            });
        }
    }
    write_jsonl(&out(cfg, RANKINGS_FILE), &rows)?;

    let mut r = Report::new("rank");
    r.kv("judgments used", json!(judgments.len()));
    r.kv("judgments dropped", json!(dropped));
    r.kv("train pairs", json!(train.len()));
    r.kv("dev pairs", json!(dev.len()));
    r.kv("test pairs", json!(test.len()));
    r.kv("ranker", json!(status));
    r.kv("weight gbt", json!(ranker.weights[0]));
    r.kv("weight ridge", json!(ranker.weights[1]));
    r.write(&reports_dir(cfg))
}

fn canonical(j: &PairJudgment) -> PairJudgment {
    if j.tlc_a <= j.tlc_b {
        j.clone()
    } else {
        j.swapped()
    }
}

fn mcc_table(judgments: &[PairJudgment], panels: &HashMap<&str, &PanelRow>, r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    for (m, name) in METRIC_NAMES.iter().enumerate() {
        let mut t = [0u64; 4];
        for j in judgments {
            let (Some(a), Some(b)) = (panels.get(j.tlc_a.as_str()), panels.get(j.tlc_b.as_str())) else {
                continue;
            };
            if !a.defined[m] || !b.defined[m] || a.values[m] == b.values[m] {
                continue;
            }
            let metric_a = a.values[m] > b.values[m];
            let human_a = j.choice == Choice::A;
            let cell = match (metric_a, human_a) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            t[cell] += 1;
        }
        let n: u64 = t.iter().sum();
        let (coef, p) = if n == 0 {
            (None, None)
        } else {
            let c = mcc(t[0], t[1], t[2], t[3])?;
            (Some(c), Some(mcc_significance(c, n, METRIC_COUNT as u32)))
        };
        rows.push(vec![name.to_string(), n.to_string(), fmt_opt(coef), fmt_opt(p)]);
        r.record("mcc", json!({ "metric": name, "n": n, "mcc": coef, "p_bonferroni": p }));
    }
    r.table(&["metric", "n", "mcc", "p (bonferroni)"], &rows);
    Ok(())
}

fn agreement(judgments: &[PairJudgment], r: &mut Report) {
    let coders: BTreeSet<&str> = judgments.iter().map(|j| j.annotator_id.as_str()).collect();
    let coders: Vec<&str> = coders.into_iter().collect();
    let mut items: BTreeMap<(String, String), BTreeMap<&str, String>> = BTreeMap::new();
    for j in judgments {
        let c = canonical(j);
        let chosen = if c.choice == Choice::A { c.tlc_a.clone() } else { c.tlc_b.clone() };
        items
            .entry((c.tlc_a.clone(), c.tlc_b.clone()))
            .or_default()
            .insert(j.annotator_id.as_str(), chosen);
    }
    let keys: Vec<&(String, String)> = items.keys().collect();
    let ratings: Vec<Vec<Option<String>>> = coders
        .iter()
        .map(|coder| keys.iter().map(|k| items[*k].get(coder).cloned()).collect())
        .collect();
    let pairable = items.values().filter(|m| m.len() >= 2).count();
    r.kv("annotators", json!(coders.len()));
    r.kv("multiply judged pairs", json!(pairable));
    match krippendorff_alpha(&ratings) {
        Ok(a) => r.kv("krippendorff alpha", json!(a)),
        Err(_) => r.kv("krippendorff alpha", json!(null)),
    }
}

fn accuracy_table(rankings: &[RankingRow], r: &mut Report) {
    type Pick = fn(&RankingRow) -> Option<Choice>;
    let methods: [(&str, Pick); 5] = [
        ("oracle", |x| x.oracle),
        ("gbt", |x| Some(x.gbt)),
        ("ridge", |x| Some(x.ridge)),
        ("ranker", |x| Some(x.ranker)),
        ("constant-a", |_| Some(Choice::A)),
    ];
    let test: Vec<&RankingRow> = rankings.iter().filter(|x| x.split == "test").collect();
    let distinct: Vec<&RankingRow> = rankings.iter().filter(|x| x.oracle.is_some()).collect();
    let mut rows = Vec::new();
    for (name, pick) in methods {
        let against = |rows: &[&RankingRow], truth: fn(&RankingRow) -> Choice| {
            let (pred, gold): (Vec<Choice>, Vec<Choice>) =
                rows.iter().filter_map(|x| pick(x).map(|p| (p, truth(x)))).unzip();
            ranking_accuracy(&pred, &gold).ok()
        };
        let human = against(&test, |x| x.human);
        let traj = against(&distinct, |x| x.oracle.expect("filtered"));
        rows.push(vec![name.to_string(), fmt_opt(human), fmt_opt(traj)]);
        r.record(
            "accuracy",
            json!({ "method": name, "human_test": human, "trajectory": traj }),
        );
    }
    r.kv("test pairs", json!(test.len()));
    r.kv("pairs with distinct trajectories", json!(distinct.len()));
    r.table(&["method", "vs human (test)", "vs trajectory"], &rows);
}

pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<()> {
    let res = load_resources(cfg)?;
    let categories: HashMap<String, String> =
        res.categories.iter().map(|(s, c)| (s.to_lowercase(), c.clone())).collect();
    let model = load_trajectory(cfg)?;
    let panel_rows = load_panels(cfg)?;
    let forecasts = load_forecasts(cfg)?;
    let convs = load_conversations(cfg)?;
    let mut r = Report::new("evaluate");

    r.line("-- forecasting (test split) --");
    let test: Vec<&ForecastRow> = forecasts.iter().filter(|f| f.split == "test").collect();
    let truth: Vec<f64> = test.iter().map(|f| f.truth).collect();
    let mut rows = Vec::new();
    for kind in ForecasterKind::ALL {
        let pred: Vec<f64> = test
            .iter()
            .map(|f| match kind {
                ForecasterKind::Mean => f.mean,
                ForecasterKind::Ridge => f.ridge,
                ForecasterKind::Gbt => f.gbt,
            })
            .collect();
        let (mse, r2) = match evaluate_regression(&pred, &truth) {
            Ok(rep) => (Some(rep.mse), Some(rep.r2)),
            Err(_) if !pred.is_empty() => (
                Some(pred.iter().zip(&truth).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / pred.len() as f64),
                None,
            ),
            Err(_) => (None, None),
        };
        rows.push(vec![kind.name().to_string(), test.len().to_string(), fmt_opt(mse), fmt_opt(r2)]);
        r.record("regression", json!({ "forecaster": kind.name(), "n": test.len(), "mse": mse, "r2": r2 }));
    }
    r.table(&["forecaster", "n", "mse", "r2"], &rows);

    r.line("");
    r.line("-- explained variance --");
    explained_variance_table(&model, &mut r)?;

    r.line("");
    r.line("-- per-category error (gbt, test split) --");
    let errors: Vec<(String, f64)> = test.iter().map(|f| (f.subreddit.clone(), f.gbt - f.truth)).collect();
    let cats = category_mse(&errors, &categories);
    let cat_rows: Vec<Vec<String>> = cats
        .iter()
        .map(|c| vec![c.category.clone(), c.n.to_string(), fmt_f(c.mse), fmt_f(c.ks_d), fmt_f(c.ks_p)])
        .collect();
    for c in &cats {
        r.record("category", serde_json::to_value(c).expect("json"));
    }
    r.table(&["category", "n", "mse", "ks d", "ks p"], &cat_rows);

    r.line("");
    r.line("-- half split (gbt, test split) --");
    let test_ids: BTreeSet<&str> = test.iter().map(|f| f.id.as_str()).collect();
    let test_convs: Vec<Conversation> = convs.iter().filter(|c| test_ids.contains(c.id())).cloned().collect();
    let sq: HashMap<String, f64> = test.iter().map(|f| (f.id.clone(), (f.gbt - f.truth).powi(2))).collect();
    let ctx = panel_context(cfg, res)?;
    let half = half_split_analysis(&test_convs, &model, &ctx, &sq)?;
    r.kv("excluded (odd replies)", json!(half.excluded_odd));
    r.kv("excluded (no replies)", json!(half.excluded_empty));
    let half_rows: Vec<Vec<String>> = half
        .strata
        .iter()
        .map(|s| vec![format!("{:?}", s.stratum).to_lowercase(), s.n.to_string(), fmt_opt(s.mse)])
        .collect();
    for s in &half.strata {
        r.record("half_split", serde_json::to_value(s).expect("json"));
    }
    r.table(&["more prosocial half", "n", "mse"], &half_rows);
    match half.wilcoxon {
        Some((u, p)) => {
            r.kv("wilcoxon u (early vs late)", json!(u));
            r.kv("wilcoxon p", json!(p));
        }
        None => r.kv("wilcoxon u (early vs late)", json!(null)),
    }

    if cfg.input.judgments.is_some() {
        let known: HashMap<&str, &ForecastRow> = forecasts.iter().map(|f| (f.id.as_str(), f)).collect();
        let (judgments, _) = usable_judgments(cfg, &known)?;
        let panels: HashMap<&str, &PanelRow> = panel_rows.iter().map(|p| (p.id.as_str(), p)).collect();
        r.line("");
        r.line("-- metric agreement with human judgments --");
        mcc_table(&judgments, &panels, &mut r)?;
        r.line("");
        r.line("-- annotator agreement --");
        agreement(&judgments, &mut r);
        let rp = out(cfg, RANKINGS_FILE);
        if rp.is_file() {
            r.line("");
            r.line("-- ranking accuracy --");
            accuracy_table(&read_jsonl(&rp)?, &mut r);
        }
    }

    let scores = trajectories(&model, &panel_rows)?;
    truth_correlation(cfg, &scores, &mut r)?;
    r.write(&reports_dir(cfg))
}

/// Writes a synthetic corpus plus a ready-to-run config into `dir`.
pub fn cmd_synth(cfg: &PipelineConfig, dir: &Path, conversations: usize) -> Result<()> {
    let params = SynthParams {
        conversations,
        tlcs_per_post: cfg.synth.tlcs_per_post,
        seed: cfg.seed,
    };
    let corpus = synth::generate(&params);
    create_dir(dir)?;
    synth::write_corpus(&corpus, dir)?;
    let run = format!(
        "seed = {}\noutput_dir = \"out\"\n\n[input]\ncomments = \"comments.jsonl\"\nposts = \"posts.jsonl\"\n\
         judgments = \"judgments.jsonl\"\ntruth = \"truth.jsonl\"\n\n[toxicity]\noffline = true\n",
        cfg.seed
    );
    let rp = dir.join("run.toml");
    std::fs::write(&rp, run).map_err(|e| Error::io(&rp, e))?;
    let mut r = Report::new("synth");
    r.kv("seed", json!(cfg.seed));
    r.kv("posts", json!(corpus.posts.len()));
    r.kv("comments", json!(corpus.comments.len()));
    r.kv("conversations", json!(corpus.truth.len()));
    r.kv("judgments", json!(corpus.judgments.len()));
    r.write(&dir.join(REPORTS_DIR))
}
