use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub eta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub rounds: usize,
    /// Rounds without validation improvement before stopping; `None`
    /// trains all rounds.
    pub early_stopping: Option<usize>,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            eta: 0.05,
            gamma: 1.0,
            lambda: 3.0,
            alpha: 1.0,
            max_depth: 4,
            min_child_weight: 1.0,
            subsample: 0.8,
            colsample: 0.8,
            rounds: 5000,
            early_stopping: Some(50),
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.eta > 0.0) || self.gamma < 0.0 || self.lambda < 0.0 || self.alpha < 0.0 {
            return Err(Error::Config("gbt needs eta > 0 and non-negative gamma, lambda, alpha".into()));
        }
        if self.max_depth == 0 || !unit(self.subsample) || !unit(self.colsample) || self.rounds == 0 {
            return Err(Error::Config(
                "gbt needs max_depth >= 1, rounds >= 1 and subsample, colsample in (0, 1]".into(),
            ));
        }
        if self.early_stopping == Some(0) {
            return Err(Error::Config("early_stopping must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Split feature; `None` for leaves.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Leaf output, already scaled by the learning rate.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Columns sampled for this round.
    pub columns: Vec<usize>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match n.feature {
                None => return n.value,
                Some(f) => i = if x[f] < n.threshold { n.left } else { n.right },
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + walk(t, t.nodes[i].left).max(walk(t, t.nodes[i].right)),
            }
        }
        walk(self, 0)
    }

    pub fn split_features(&self) -> Vec<usize> {
        self.nodes.iter().filter_map(|n| n.feature).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Rounds actually run, including the ones dropped after early stopping.
    pub rounds_trained: usize,
    pub train_mse: Vec<f64>,
    pub valid_mse: Vec<f64>,
}

impl GbtModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// L1 soft-thresholding of a gradient sum.
fn soft(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Structure score of a node with gradient sum `g` and hessian sum `h`.
pub fn node_score(g: f64, h: f64, p: &GbtParams) -> f64 {
    let t = soft(g, p.alpha);
    t * t / (h + p.lambda)
}

/// Second-order split gain, net of `gamma`.
pub fn split_gain(gl: f64, hl: f64, g: f64, h: f64, p: &GbtParams) -> f64 {
    0.5 * (node_score(gl, hl, p) + node_score(g - gl, h - hl, p) - node_score(g, h, p)) - p.gamma
}

pub fn leaf_weight(g: f64, h: f64, p: &GbtParams) -> f64 {
    -soft(g, p.alpha) / (h + p.lambda)
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo && m < hi {
        m
    } else {
        hi
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Frontier {
    node: usize,
    g: f64,
    h: f64,
}

/// Best split per frontier slot for one feature, scanning rows in
/// ascending feature order.
fn scan_feature(
    f: usize,
    order: &[usize],
    x: &[Vec<f64>],
    slot_of: &[Option<usize>],
    grad: &[f64],
    frontier: &[Frontier],
    p: &GbtParams,
) -> Vec<Option<Candidate>> {
    let k = frontier.len();
    let mut gl = vec![0.0; k];
    let mut hl = vec![0.0; k];
    let mut last: Vec<Option<f64>> = vec![None; k];
    let mut best: Vec<Option<Candidate>> = vec![None; k];
    for &r in order {
        let Some(s) = slot_of[r] else { continue };
        let v = x[r][f];
        if let Some(prev) = last[s] {
            if v > prev {
                let (g, h) = (frontier[s].g, frontier[s].h);
                if hl[s] >= p.min_child_weight && h - hl[s] >= p.min_child_weight {
                    let gain = split_gain(gl[s], hl[s], g, h, p);
                    if best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(Candidate {
                            gain,
                            feature: f,
                            threshold: midpoint(prev, v),
                        });
                    }
                }
            }
        }
        gl[s] += grad[r];
        hl[s] += 1.0;
        last[s] = Some(v);
    }
    best
}

fn build_tree(
    x: &[Vec<f64>],
    grad: &[f64],
    rows: &[usize],
    columns: Vec<usize>,
    sorted: &[Vec<usize>],
    p: &GbtParams,
) -> Tree {
    let leaf = |value: f64| TreeNode {
        feature: None,
        threshold: 0.0,
        left: 0,
        right: 0,
        value,
    };
    let mut node_of: Vec<Option<usize>> = vec![None; x.len()];
    let (mut g0, mut h0) = (0.0, 0.0);
    for &r in rows {
        node_of[r] = Some(0);
        g0 += grad[r];
        h0 += 1.0;
    }
    let mut nodes = vec![leaf(p.eta * leaf_weight(g0, h0, p))];
    let mut frontier = vec![Frontier { node: 0, g: g0, h: h0 }];
    for _depth in 0..p.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot_index = vec![usize::MAX; nodes.len()];
        for (s, fr) in frontier.iter().enumerate() {
            slot_index[fr.node] = s;
        }
        let slot_of: Vec<Option<usize>> = node_of
            .iter()
            .map(|n| n.and_then(|n| (slot_index[n] != usize::MAX).then(|| slot_index[n])))
            .collect();
        let per_feature: Vec<Vec<Option<Candidate>>> = columns
            .par_iter()
            .map(|&f| scan_feature(f, &sorted[f], x, &slot_of, grad, &frontier, p))
            .collect();
        let mut next = Vec::new();
        for (s, fr) in frontier.iter().enumerate() {
            let mut best: Option<Candidate> = None;
            for cands in &per_feature {
                if let Some(c) = cands[s] {
                    if best.is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            let Some(best) = best.filter(|c| c.gain > 0.0) else { continue };
            let (mut gl, mut hl) = (0.0, 0.0);
            for &r in rows {
                if node_of[r] == Some(fr.node) && x[r][best.feature] < best.threshold {
                    gl += grad[r];
                    hl += 1.0;
                }
            }
            let (gr, hr) = (fr.g - gl, fr.h - hl);
            let l = nodes.len();
            nodes.push(leaf(p.eta * leaf_weight(gl, hl, p)));
            nodes.push(leaf(p.eta * leaf_weight(gr, hr, p)));
            let n = &mut nodes[fr.node];
            n.feature = Some(best.feature);
            n.threshold = best.threshold;
            n.left = l;
            n.right = l + 1;
            n.value = 0.0;
            next.push(Frontier { node: l, g: gl, h: hl });
            next.push(Frontier { node: l + 1, g: gr, h: hr });
        }
        for &r in rows {
            let n = node_of[r].expect("sampled row");
            if let Some(f) = nodes[n].feature {
                node_of[r] = Some(if x[r][f] < nodes[n].threshold { nodes[n].left } else { nodes[n].right });
            }
        }
        frontier = next;
    }
    Tree { nodes, columns }
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64
}

fn check_matrix(x: &[Vec<f64>], y: &[f64], what: &str) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!("{what}: {} rows but {} targets", x.len(), y.len())));
    }
    let d = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Argument(format!("{what}: rows have different lengths")));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{what}: non-finite value")));
    }
    Ok(d)
}

/// Gradient-boosted regression trees with squared-error loss.
pub fn gbt_fit(
    x: &[Vec<f64>],
    y: &[f64],
    params: &GbtParams,
    valid: (&[Vec<f64>], &[f64]),
    seed: u64,
) -> Result<GbtModel> {
    params.validate()?;
    let d = check_matrix(x, y, "training set")?;
    if x.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    check_matrix(valid.0, valid.1, "validation set")?;
    if params.early_stopping.is_some() && valid.0.is_empty() {
        return Err(Error::Config("early stopping needs a non-empty validation set".into()));
    }
    if valid.0.iter().any(|r| r.len() != d) {
        return Err(Error::Argument("validation rows differ in width from training rows".into()));
    }
    let n = x.len();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let sorted: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let row_count = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let col_count = ((params.colsample * d as f64).round() as usize).clamp(d.min(1), d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_pred = vec![base_score; n];
    let mut valid_pred = vec![base_score; valid.0.len()];
    let mut trees = Vec::new();
    let mut train_hist = Vec::new();
    let mut valid_hist = Vec::new();
    let mut best = (if valid.0.is_empty() { f64::INFINITY } else { mse(&valid_pred, valid.1) }, 0usize);
    let mut rounds_trained = 0;
    for round in 1..=params.rounds {
        let grad: Vec<f64> = train_pred.iter().zip(y).map(|(p, t)| p - t).collect();
        let mut rows = sample(&mut rng, n, row_count).into_vec();
        rows.sort_unstable();
        let mut cols = sample(&mut rng, d, col_count).into_vec();
        cols.sort_unstable();
        let tree = build_tree(x, &grad, &rows, cols, &sorted, params);
        for (p, r) in train_pred.iter_mut().zip(x) {
            *p += tree.predict(r);
        }
        for (p, r) in valid_pred.iter_mut().zip(valid.0) {
            *p += tree.predict(r);
        }
        trees.push(tree);
        rounds_trained = round;
        train_hist.push(mse(&train_pred, y));
        if !valid.0.is_empty() {
            let v = mse(&valid_pred, valid.1);
            valid_hist.push(v);
            if v < best.0 {
                best = (v, round);
            }
        }
        if let Some(patience) = params.early_stopping {
            if round - best.1 >= patience {
                break;
            }
        }
    }
    if params.early_stopping.is_some() {
        trees.truncate(best.1);
    }
    Ok(GbtModel {
        params: *params,
        base_score,
        trees,
        rounds_trained,
        train_mse: train_hist,
        valid_mse: valid_hist,
    })
}
