use serde::{Deserialize, Serialize};

use crate::accommodation::conversation_accommodation;
use crate::corpus::{Comment, Conversation};
use crate::error::{Error, Result};
use crate::metrics::lexical::{
    classify_urls, count_gratitude_tokens, count_laughter, detect_compliments_tokens,
    has_first_person_tokens, LinkCounts,
};
use crate::metrics::structural_metrics;
use crate::resources::Resources;
use crate::scorers::{
    classify_text, toxicity_metrics, NgramLogisticModel, RegressorKind, TextRegressorHandle, ToxicityScorer,
};
use crate::textlex::tokenize;

pub const METRIC_COUNT: usize = 22;

/// Canonical metric order of every panel, model and report.
pub const METRIC_NAMES: [&str; METRIC_COUNT] = [
    "information_sharing",
    "links",
    "educational_links",
    "gratitude",
    "politeness",
    "accommodation",
    "community_score",
    "supportiveness",
    "subsequent_comments",
    "direct_replies",
    "depth",
    "sustained_partners",
    "sustained_turns",
    "compliments",
    "laughter",
    "personal_disclosure",
    "donations",
    "mentoring",
    "pct_nontoxic_untuned",
    "pct_nontoxic_tuned",
    "toxic_untuned",
    "toxic_tuned",
];

pub fn metric_index(name: &str) -> Option<usize> {
    METRIC_NAMES.iter().position(|n| *n == name)
}

/// Everything except the two toxic-reply counts.
pub fn is_prosocial(idx: usize) -> bool {
    !matches!(METRIC_NAMES[idx], "toxic_untuned" | "toxic_tuned")
}

pub fn manifest() -> Vec<String> {
    METRIC_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPanel {
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl MetricPanel {
    pub fn new(values: Vec<f64>, defined: Vec<bool>) -> Result<Self> {
        if values.len() != METRIC_COUNT || defined.len() != METRIC_COUNT {
            return Err(Error::Argument(format!(
                "panel needs {METRIC_COUNT} values and mask entries, got {} and {}",
                values.len(),
                defined.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("panel value is not finite".into()));
        }
        Ok(Self { values, defined })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        metric_index(name).map(|i| self.values[i])
    }
}

/// Scorers and resources needed to compute panels and per-comment signals.
pub struct PanelContext {
    pub resources: Resources,
    pub information: Option<NgramLogisticModel>,
    pub mentoring: Option<NgramLogisticModel>,
    pub politeness: TextRegressorHandle,
    pub supportiveness: TextRegressorHandle,
    pub toxicity: ToxicityScorer,
}

impl PanelContext {
    /// Lexicon-backed regressors and the given toxicity scorer.
    pub fn with_defaults(resources: Resources, toxicity: ToxicityScorer) -> Self {
        Self {
            politeness: TextRegressorHandle::lexicon(RegressorKind::Politeness, resources.politeness.clone()),
            supportiveness: TextRegressorHandle::lexicon(
                RegressorKind::Supportiveness,
                resources.supportiveness.clone(),
            ),
            resources,
            information: None,
            mentoring: None,
            toxicity,
        }
    }
}

/// Comment-level signals that panel metrics aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommentSignals {
    pub informative: bool,
    pub links: LinkCounts,
    pub gratitude: usize,
    pub politeness: f64,
    pub supportiveness: f64,
    pub compliments: usize,
    pub laughter: usize,
    pub disclosure: bool,
    pub mentoring: bool,
    pub toxicity: f64,
}

fn tag(metric: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| Error::Panel {
        metric,
        source: Box::new(e),
    }
}

pub fn comment_signals(text: &str, ctx: &PanelContext) -> Result<CommentSignals> {
    let tokens = tokenize(text);
    let links = classify_urls(&tokens.urls, &ctx.resources.domains);
    let classified = |m: &Option<NgramLogisticModel>| m.as_ref().is_some_and(|m| classify_text(m, text).1);
    Ok(CommentSignals {
        informative: classified(&ctx.information) || links.educational > 0,
        links,
        gratitude: count_gratitude_tokens(&tokens),
        politeness: ctx.politeness.score(text),
        supportiveness: ctx.supportiveness.score(text),
        compliments: detect_compliments_tokens(&tokens, &ctx.resources.sentiment),
        laughter: count_laughter(text),
        disclosure: has_first_person_tokens(&tokens),
        mentoring: classified(&ctx.mentoring),
        toxicity: ctx.toxicity.score(text).map_err(tag("toxicity"))?,
    })
}

fn reply_signals(replies: &[Comment], ctx: &PanelContext) -> Result<Vec<CommentSignals>> {
    replies.iter().map(|r| comment_signals(&r.body, ctx)).collect()
}

/// Computes all 22 metrics. Politeness and supportiveness are undefined
/// without replies; accommodation is undefined when no exchange with the
/// TLC author exists. Undefined entries hold 0.
pub fn assemble_panel(conv: &Conversation, ctx: &PanelContext) -> Result<MetricPanel> {
    let signals = reply_signals(conv.replies(), ctx)?;
    let n = signals.len();
    let count = |f: &dyn Fn(&CommentSignals) -> bool| signals.iter().filter(|s| f(s)).count() as f64;
    let sum = |f: &dyn Fn(&CommentSignals) -> usize| signals.iter().map(f).sum::<usize>() as f64;
    let avg = |f: &dyn Fn(&CommentSignals) -> f64| {
        if n == 0 {
            None
        } else {
            Some(signals.iter().map(f).sum::<f64>() / n as f64)
        }
    };
    let structural = structural_metrics(conv);
    let accommodation = conversation_accommodation(conv, &ctx.resources.markers);
    let tox: Vec<f64> = signals.iter().map(|s| s.toxicity).collect();
    let cfg = ctx.toxicity.config();
    let t = toxicity_metrics(&tox, cfg.untuned_threshold, cfg.tuned_threshold);

    let entries: [Option<f64>; METRIC_COUNT] = [
        Some(count(&|s| s.informative)),
        Some(sum(&|s| s.links.links)),
        Some(sum(&|s| s.links.educational)),
        Some(sum(&|s| s.gratitude)),
        avg(&|s| s.politeness),
        accommodation,
        Some(structural.community_score as f64),
        avg(&|s| s.supportiveness),
        Some(structural.subsequent_comments as f64),
        Some(structural.direct_replies as f64),
        Some(structural.depth as f64),
        Some(structural.sustained_partners as f64),
        Some(structural.sustained_turns as f64),
        Some(sum(&|s| s.compliments)),
        Some(sum(&|s| s.laughter)),
        Some(count(&|s| s.disclosure)),
        Some(sum(&|s| s.links.donation)),
        Some(count(&|s| s.mentoring)),
        Some(t.pct_nontoxic_untuned),
        Some(t.pct_nontoxic_tuned),
        Some(t.untuned_count as f64),
        Some(t.tuned_count as f64),
    ];
    MetricPanel::new(
        entries.iter().map(|e| e.unwrap_or(0.0)).collect(),
        entries.iter().map(Option::is_some).collect(),
    )
}

pub const TLC_BLOCK_NAMES: [&str; 15] = [
    "tlc_information_sharing",
    "tlc_links",
    "tlc_educational_links",
    "tlc_gratitude",
    "tlc_politeness",
    "tlc_supportiveness",
    "tlc_compliments",
    "tlc_laughter",
    "tlc_personal_disclosure",
    "tlc_donations",
    "tlc_mentoring",
    "tlc_pct_nontoxic_untuned",
    "tlc_pct_nontoxic_tuned",
    "tlc_toxic_untuned",
    "tlc_toxic_tuned",
];

/// The TLC's own text-level metrics in Table-1 units, as if the TLC were
/// the only reply. Structural, community and accommodation metrics need
/// replies and are excluded.
pub fn tlc_block(tlc_text: &str, ctx: &PanelContext) -> Result<[f64; 15]> {
    let s = comment_signals(tlc_text, ctx)?;
    let cfg = ctx.toxicity.config();
    let t = toxicity_metrics(&[s.toxicity], cfg.untuned_threshold, cfg.tuned_threshold);
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    Ok([
        b(s.informative),
        s.links.links as f64,
        s.links.educational as f64,
        s.gratitude as f64,
        s.politeness,
        s.supportiveness,
        s.compliments as f64,
        s.laughter as f64,
        b(s.disclosure),
        s.links.donation as f64,
        b(s.mentoring),
        t.pct_nontoxic_untuned,
        t.pct_nontoxic_tuned,
        t.untuned_count as f64,
        t.tuned_count as f64,
    ])
}
