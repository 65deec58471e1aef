use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textlex::{tokenize, StopWords};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub infer_sweeps: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            topics: 20,
            alpha: 2.5,
            beta: 0.01,
            sweeps: 1000,
            infer_sweeps: 100,
        }
    }
}

/// Topic model fitted by collapsed Gibbs sampling. Only the word-topic
/// counts are kept; document assignments are discarded after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub params: LdaParams,
    pub vocabulary: Vec<String>,
    /// topic-major counts, `topics × vocabulary.len()`
    pub word_topic: Vec<Vec<u32>>,
    pub topic_totals: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Lowercased non-stop-word tokens with at least one letter.
pub fn lda_tokens(text: &str, stopwords: &StopWords) -> Vec<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t) && t.chars().any(char::is_alphabetic))
        .collect()
}

fn sample(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

pub fn lda_fit(docs: &[Vec<String>], params: LdaParams, seed: u64) -> Result<LdaModel> {
    if params.topics == 0 || params.alpha <= 0.0 || params.beta <= 0.0 {
        return Err(Error::Config("LDA needs topics > 0, alpha > 0, beta > 0".into()));
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut vocabulary = Vec::new();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.iter()
                .map(|w| {
                    *index.entry(w.clone()).or_insert_with(|| {
                        vocabulary.push(w.clone());
                        vocabulary.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::Fit("LDA corpus has an empty vocabulary".into()));
    }
    let t = params.topics;
    let v = vocabulary.len();
    let vbeta = v as f64 * params.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nkw = vec![vec![0u32; v]; t];
    let mut nk = vec![0u64; t];
    let mut ndk: Vec<Vec<u32>> = vec![vec![0; t]; words.len()];
    let mut z: Vec<Vec<usize>> = words
        .iter()
        .enumerate()
        .map(|(d, ws)| {
            ws.iter()
                .map(|&w| {
                    let k = rng.gen_range(0..t);
                    nkw[k][w] += 1;
                    nk[k] += 1;
                    ndk[d][k] += 1;
                    k
                })
                .collect()
        })
        .collect();
    let mut p = vec![0.0; t];
    for _ in 0..params.sweeps {
        for (d, ws) in words.iter().enumerate() {
            for (i, &w) in ws.iter().enumerate() {
                let old = z[d][i];
                nkw[old][w] -= 1;
                nk[old] -= 1;
                ndk[d][old] -= 1;
                for k in 0..t {
                    p[k] = (ndk[d][k] as f64 + params.alpha) * (nkw[k][w] as f64 + params.beta)
                        / (nk[k] as f64 + vbeta);
                }
                let new = sample(&mut rng, &p);
                z[d][i] = new;
                nkw[new][w] += 1;
                nk[new] += 1;
                ndk[d][new] += 1;
            }
        }
    }
    Ok(LdaModel {
        params,
        vocabulary,
        word_topic: nkw,
        topic_totals: nk,
        index,
    })
}

impl LdaModel {
    pub fn topics(&self) -> usize {
        self.params.topics
    }

    /// Rebuilds the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Smoothed word distribution of topic `k`.
    pub fn topic_word_distribution(&self, k: usize) -> Vec<f64> {
        let v = self.vocabulary.len() as f64;
        let denom = self.topic_totals[k] as f64 + v * self.params.beta;
        self.word_topic[k].iter().map(|&c| (c as f64 + self.params.beta) / denom).collect()
    }

    /// Most frequent words of topic `k`.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<&str> {
        let mut ids: Vec<usize> = (0..self.vocabulary.len()).collect();
        ids.sort_by(|&a, &b| self.word_topic[k][b].cmp(&self.word_topic[k][a]).then(a.cmp(&b)));
        ids.into_iter().take(n).map(|i| self.vocabulary[i].as_str()).collect()
    }

    /// Fold-in Gibbs sampling with frozen word-topic counts. Unknown words
    /// are ignored; a document with no known words gets the uniform
    /// distribution.
    pub fn infer(&self, doc: &[String], seed: u64) -> Vec<f64> {
        let t = self.topics();
        let ws: Vec<usize> = doc.iter().filter_map(|w| self.word_id(w)).collect();
        if ws.is_empty() {
            return vec![1.0 / t as f64; t];
        }
        let vbeta = self.vocabulary.len() as f64 * self.params.beta;
        let phi = |k: usize, w: usize| {
            (self.word_topic[k][w] as f64 + self.params.beta) / (self.topic_totals[k] as f64 + vbeta)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ndk = vec![0u32; t];
        let mut z: Vec<usize> = ws
            .iter()
            .map(|_| {
                let k = rng.gen_range(0..t);
                ndk[k] += 1;
                k
            })
            .collect();
        let mut p = vec![0.0; t];
        let sweeps = self.params.infer_sweeps.max(1);
        let burn_in = sweeps / 2;
        let mut acc = vec![0.0; t];
        let mut kept = 0usize;
        for s in 0..sweeps {
            for (i, &w) in ws.iter().enumerate() {
                ndk[z[i]] -= 1;
                for k in 0..t {
                    p[k] = (ndk[k] as f64 + self.params.alpha) * phi(k, w);
                }
                z[i] = sample(&mut rng, &p);
                ndk[z[i]] += 1;
            }
            if s >= burn_in {
                kept += 1;
                for k in 0..t {
                    acc[k] += ndk[k] as f64;
                }
            }
        }
        let n = ws.len() as f64;
        let denom = n + t as f64 * self.params.alpha;
        acc.iter().map(|c| (c / kept as f64 + self.params.alpha) / denom).collect()
    }
}
