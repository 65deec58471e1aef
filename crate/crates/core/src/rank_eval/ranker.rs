use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::select::split_sizes;
use crate::error::{Error, Result};
use crate::numeric::{dot, lbfgs, sigmoid, softplus, LbfgsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn flip(self) -> Self {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    AnyTime,
    Within5Min,
    MetricCoverage,
    NoReply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub post_id: String,
    pub tlc_a: String,
    pub tlc_b: String,
    pub choice: Choice,
    pub annotator_id: String,
    pub stratum: Stratum,
}

impl PairJudgment {
    pub fn swapped(&self) -> Self {
        Self {
            tlc_a: self.tlc_b.clone(),
            tlc_b: self.tlc_a.clone(),
            choice: self.choice.flip(),
            ..self.clone()
        }
    }
}

/// One judgment per line.
pub fn read_judgments(path: &Path) -> Result<Vec<PairJudgment>> {
    let text = crate::resources::read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let j: PairJudgment = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if j.tlc_a == j.tlc_b {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("pair compares {} with itself", j.tlc_a),
            });
        }
        out.push(j);
    }
    Ok(out)
}

pub fn write_judgments(path: &Path, judgments: &[PairJudgment]) -> Result<()> {
    let mut text = String::new();
    for j in judgments {
        text.push_str(&serde_json::to_string(j).expect("judgment serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Picks the higher trajectory; an exact tie picks A.
pub fn rank_pair_by_trajectory(a: f64, b: f64) -> Choice {
    if b > a {
        Choice::B
    } else {
        Choice::A
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSource {
    TrajectoryDifference,
    Random,
}

/// Logistic model over feature differences with no bias term, so swapping
/// A and B negates the margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRanker {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub init: InitSource,
}

impl PairwiseRanker {
    /// Starting point that puts unit weight on feature 0, taken to be the
    /// forecasted trajectory.
    pub fn from_trajectory(dim: usize) -> Self {
        let mut weights = vec![0.0; dim];
        if dim > 0 {
            weights[0] = 1.0;
        }
        Self {
            weights,
            bias: 0.0,
            init: InitSource::TrajectoryDifference,
        }
    }

    pub fn margin(&self, fa: &[f64], fb: &[f64]) -> f64 {
        let diff: Vec<f64> = fa.iter().zip(fb).map(|(a, b)| a - b).collect();
        dot(&self.weights, &diff) + self.bias
    }

    pub fn probability_a(&self, fa: &[f64], fb: &[f64]) -> f64 {
        sigmoid(self.margin(fa, fb))
    }

    pub fn choose(&self, fa: &[f64], fb: &[f64]) -> Choice {
        if self.probability_a(fa, fb) >= 0.5 {
            Choice::A
        } else {
            Choice::B
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankerOptions {
    pub l2: f64,
    pub max_iter: usize,
}

impl Default for RankerOptions {
    fn default() -> Self {
        Self { l2: 1e-2, max_iter: 200 }
    }
}

/// Fine-tunes `init` on labeled pairs `(features_a, features_b, choice)`.
pub fn fit_pairwise_ranker(
    pairs: &[(Vec<f64>, Vec<f64>, Choice)],
    init: &PairwiseRanker,
    opts: &RankerOptions,
) -> Result<PairwiseRanker> {
    let a_count = pairs.iter().filter(|p| p.2 == Choice::A).count();
    if a_count == 0 || a_count == pairs.len() {
        return Err(Error::Training("pairwise labels contain a single class".into()));
    }
    let dim = init.weights.len();
    let diffs: Vec<(Vec<f64>, f64)> = pairs
        .iter()
        .map(|(a, b, c)| {
            if a.len() != dim || b.len() != dim {
                return Err(Error::Argument(format!("pair features must have width {dim}")));
            }
            let y = if *c == Choice::A { 1.0 } else { -1.0 };
            Ok((a.iter().zip(b).map(|(x, z)| x - z).collect(), y))
        })
        .collect::<Result<_>>()?;
    let n = diffs.len() as f64;
    let l2 = opts.l2;
    let objective = |w: &[f64]| {
        let mut loss = 0.5 * l2 * dot(w, w);
        let mut grad: Vec<f64> = w.iter().map(|x| l2 * x).collect();
        for (d, y) in &diffs {
            let m = y * dot(w, d);
            loss += softplus(-m) / n;
            let s = -y * sigmoid(-m) / n;
            for (g, x) in grad.iter_mut().zip(d) {
                *g += s * x;
            }
        }
        (loss, grad)
    };
    let weights = lbfgs(
        objective,
        init.weights.clone(),
        &LbfgsOptions {
            max_iter: opts.max_iter,
            ..LbfgsOptions::default()
        },
    );
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("ranker weights diverged".into()));
    }
    Ok(PairwiseRanker {
        weights,
        bias: 0.0,
        init: init.init,
    })
}

/// 80/10/10 split within each sampling stratum.
pub fn split_judgments(
    judgments: &[PairJudgment],
    seed: u64,
) -> (Vec<PairJudgment>, Vec<PairJudgment>, Vec<PairJudgment>) {
    let mut by_stratum: BTreeMap<Stratum, Vec<&PairJudgment>> = BTreeMap::new();
    for j in judgments {
        by_stratum.entry(j.stratum).or_default().push(j);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut dev, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (_, mut group) in by_stratum {
        group.shuffle(&mut rng);
        let [a, b, _] = split_sizes(group.len(), [8, 1, 1]);
        for (i, j) in group.into_iter().enumerate() {
            let dest = if i < a {
                &mut train
            } else if i < a + b {
                &mut dev
            } else {
                &mut test
            };
            dest.push(j.clone());
        }
    }
    (train, dev, test)
}

/// Fraction of predictions that match the truth.
pub fn ranking_accuracy(predicted: &[Choice], truth: &[Choice]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::Argument(format!(
            "accuracy needs equal non-empty inputs, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}
