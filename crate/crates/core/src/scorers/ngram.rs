use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ngram_counts;
use super::labeling::LabeledCorpus;
use crate::error::{Error, Result};
use crate::numeric::{lbfgs, sigmoid, softplus, LbfgsOptions};
use crate::textlex::tokenize;

pub const NGRAM_FORMAT: &str = "prosocial-ngram-logistic";
pub const NGRAM_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_MIN_FREQ_CANDIDATES: [usize; 5] = [100, 50, 25, 15, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct NgramLogisticModel {
    pub vocabulary: HashMap<String, usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub min_ngram_frequency: usize,
    pub decision_threshold: f64,
    pub cv_f1: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WireModel {
    format: String,
    version: u32,
    min_ngram_frequency: usize,
    decision_threshold: f64,
    bias: f64,
    cv_f1: Option<f64>,
    // n-gram -> weight, sorted for stable output
    weights: BTreeMap<String, f64>,
}

impl NgramLogisticModel {
    pub fn new(
        weights: BTreeMap<String, f64>,
        bias: f64,
        min_ngram_frequency: usize,
        decision_threshold: f64,
    ) -> Result<Self> {
        if !(decision_threshold > 0.0 && decision_threshold < 1.0) {
            return Err(Error::Config(format!(
                "decision threshold {decision_threshold} outside (0,1)"
            )));
        }
        let (vocabulary, weights) = weights
            .into_iter()
            .enumerate()
            .map(|(i, (g, w))| ((g, i), w))
            .unzip();
        Ok(Self {
            vocabulary,
            weights,
            bias,
            min_ngram_frequency,
            decision_threshold,
            cv_f1: None,
        })
    }

    pub fn probability(&self, text: &str) -> f64 {
        let counts = ngram_counts(&tokenize(text).tokens);
        let z: f64 = counts
            .iter()
            .filter_map(|(g, c)| self.vocabulary.get(g).map(|&i| self.weights[i] * c))
            .sum();
        sigmoid(z + self.bias)
    }

    pub fn to_text(&self) -> String {
        let mut weights = BTreeMap::new();
        for (g, &i) in &self.vocabulary {
            weights.insert(g.clone(), self.weights[i]);
        }
        let wire = WireModel {
            format: NGRAM_FORMAT.into(),
            version: NGRAM_VERSION,
            min_ngram_frequency: self.min_ngram_frequency,
            decision_threshold: self.decision_threshold,
            bias: self.bias,
            cv_f1: self.cv_f1,
            weights,
        };
        serde_json::to_string_pretty(&wire).expect("model serializes")
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let wire: WireModel =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
        if wire.format != NGRAM_FORMAT || wire.version != NGRAM_VERSION {
            return Err(Error::Config(format!(
                "{source}: expected {NGRAM_FORMAT} version {NGRAM_VERSION}"
            )));
        }
        let mut m = Self::new(wire.weights, wire.bias, wire.min_ngram_frequency, wire.decision_threshold)?;
        m.cv_f1 = wire.cv_f1;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::resources::read_text(path)?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// (probability, probability >= threshold)
pub fn classify_text(model: &NgramLogisticModel, text: &str) -> (f64, bool) {
    let p = model.probability(text);
    (p, p >= model.decision_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    pub min_freq_candidates: Vec<usize>,
    pub folds: usize,
    pub l2: f64,
    pub decision_threshold: f64,
    pub max_iter: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            min_freq_candidates: DEFAULT_MIN_FREQ_CANDIDATES.to_vec(),
            folds: 5,
            l2: 1.0,
            decision_threshold: DEFAULT_THRESHOLD,
            max_iter: 300,
        }
    }
}

/// Documents as sparse (global n-gram id, count) rows.
struct Interned {
    names: Vec<String>,
    docs: Vec<Vec<(usize, f64)>>,
}

fn intern(texts: &[String]) -> Interned {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names = Vec::new();
    let docs = texts
        .iter()
        .map(|t| {
            let counts: BTreeMap<String, f64> = ngram_counts(&tokenize(t).tokens).into_iter().collect();
            counts
                .into_iter()
                .map(|(g, c)| {
                    let next = names.len();
                    let id = *ids.entry(g.clone()).or_insert_with(|| {
                        names.push(g);
                        next
                    });
                    (id, c)
                })
                .collect()
        })
        .collect();
    Interned { names, docs }
}

/// Global ids kept at `min_freq`, mapped to dense columns (sorted by n-gram).
fn vocabulary(data: &Interned, rows: &[usize], min_freq: usize) -> HashMap<usize, usize> {
    let mut freq = vec![0.0; data.names.len()];
    for &r in rows {
        for &(g, c) in &data.docs[r] {
            freq[g] += c;
        }
    }
    let mut kept: Vec<usize> = (0..freq.len()).filter(|&g| freq[g] >= min_freq as f64).collect();
    kept.sort_by(|&a, &b| data.names[a].cmp(&data.names[b]));
    kept.into_iter().enumerate().map(|(col, g)| (g, col)).collect()
}

type Sparse = Vec<Vec<(usize, f64)>>;

fn project(data: &Interned, rows: &[usize], vocab: &HashMap<usize, usize>) -> Sparse {
    rows.iter()
        .map(|&r| {
            data.docs[r]
                .iter()
                .filter_map(|&(g, c)| vocab.get(&g).map(|&col| (col, c)))
                .collect()
        })
        .collect()
}

/// L2-regularized logistic regression; returns (weights, bias).
pub(crate) fn fit_logistic(x: &Sparse, y: &[bool], dim: usize, l2: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let objective = |theta: &[f64]| {
        let (w, b) = theta.split_at(dim);
        let mut grad = vec![0.0; dim + 1];
        let mut f = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let z = b[0] + row.iter().map(|&(j, c)| w[j] * c).sum::<f64>();
            let t = if label { 1.0 } else { 0.0 };
            f += softplus(z) - t * z;
            let r = sigmoid(z) - t;
            for &(j, c) in row {
                grad[j] += r * c;
            }
            grad[dim] += r;
        }
        for j in 0..dim {
            f += 0.5 * l2 * w[j] * w[j];
            grad[j] += l2 * w[j];
        }
        (f, grad)
    };
    let opts = LbfgsOptions {
        max_iter,
        ..LbfgsOptions::default()
    };
    let mut theta = lbfgs(objective, vec![0.0; dim + 1], &opts);
    let bias = theta.pop().expect("bias present");
    (theta, bias)
}

pub(crate) fn f1_score(pred: &[bool], truth: &[bool]) -> f64 {
    let tp = pred.iter().zip(truth).filter(|(p, t)| **p && **t).count() as f64;
    let fp = pred.iter().zip(truth).filter(|(p, t)| **p && !**t).count() as f64;
    let fneg = pred.iter().zip(truth).filter(|(p, t)| !**p && **t).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold_of[i] = k % folds;
        }
    }
    fold_of
}

fn fit_on(
    data: &Interned,
    rows: &[usize],
    labels: &[bool],
    min_freq: usize,
    opts: &TrainOptions,
) -> (HashMap<usize, usize>, Vec<f64>, f64) {
    let vocab = vocabulary(data, rows, min_freq);
    let x = project(data, rows, &vocab);
    let y: Vec<bool> = rows.iter().map(|&r| labels[r]).collect();
    let (w, b) = fit_logistic(&x, &y, vocab.len(), opts.l2, opts.max_iter);
    (vocab, w, b)
}

/// Picks the minimum n-gram frequency by cross-validated F1, then fits the
/// final model on the whole corpus.
pub fn train_ngram_classifier(corpus: &LabeledCorpus, opts: &TrainOptions, seed: u64) -> Result<NgramLogisticModel> {
    let labels = &corpus.labels;
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Training(format!(
            "corpus has a single class ({pos} positive of {})",
            labels.len()
        )));
    }
    if opts.min_freq_candidates.is_empty() || opts.folds < 2 {
        return Err(Error::Config("need min-frequency candidates and at least 2 folds".into()));
    }
    if !(opts.l2 >= 0.0 && opts.l2.is_finite()) {
        return Err(Error::Config(format!("l2 strength {} must be non-negative", opts.l2)));
    }
    let data = intern(&corpus.texts);
    let fold_of = stratified_folds(labels, opts.folds, seed);

    let jobs: Vec<(usize, usize)> = opts
        .min_freq_candidates
        .iter()
        .flat_map(|&m| (0..opts.folds).map(move |f| (m, f)))
        .collect();
    let scores: Vec<((usize, usize), f64)> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
            let (vocab, w, b) = fit_on(&data, &train, labels, m, opts);
            let x = project(&data, &test, &vocab);
            let pred: Vec<bool> = x
                .iter()
                .map(|row| sigmoid(b + row.iter().map(|&(j, c)| w[j] * c).sum::<f64>()) >= opts.decision_threshold)
                .collect();
            let truth: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            ((m, f), f1_score(&pred, &truth))
        })
        .collect();

    let mut best = (opts.min_freq_candidates[0], f64::NEG_INFINITY);
    for &m in &opts.min_freq_candidates {
        let folds: Vec<f64> = scores.iter().filter(|((mm, _), _)| *mm == m).map(|(_, s)| *s).collect();
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        if mean > best.1 {
            best = (m, mean);
        }
    }

    let all: Vec<usize> = (0..labels.len()).collect();
    let (vocab, w, b) = fit_on(&data, &all, labels, best.0, opts);
    let weights: BTreeMap<String, f64> = vocab
        .iter()
        .map(|(&g, &col)| (data.names[g].clone(), w[col]))
        .collect();
    let mut model = NgramLogisticModel::new(weights, b, best.0, opts.decision_threshold)?;
    model.cv_f1 = Some(best.1);
    Ok(model)
}
