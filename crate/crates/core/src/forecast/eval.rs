use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::features::category_of;
use crate::corpus::Conversation;
use crate::error::{Error, Result};
use crate::rank_eval::wilcoxon_rank_sum;
use crate::trajectory::{assemble_panel, PanelContext, TrajectoryModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionReport {
    pub mse: f64,
    pub r2: f64,
}

pub fn evaluate_regression(pred: &[f64], truth: &[f64]) -> Result<RegressionReport> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "regression evaluation needs equal non-empty inputs, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let sst: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::Undefined("R² of a constant target".into()));
    }
    Ok(RegressionReport {
        mse: sse / n,
        r2: 1.0 - sse / sst,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic D.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail probability with the usual small-sample
/// correction of the scale factor.
fn kolmogorov_sf(lambda: f64) -> f64 {
    let a2 = -2.0 * lambda * lambda;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut prev = 0.0f64;
    for j in 1..=100 {
        let term = fac * (a2 * (j * j) as f64).exp();
        sum += term;
        if term.abs() <= 0.001 * prev || term.abs() <= 1e-8 * sum {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev = term.abs();
    }
    1.0
}

/// D and asymptotic two-sided p. Either sample empty gives (0, 1).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let d = ks_statistic(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let en = (n * m / (n + m)).sqrt();
    (d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRow {
    pub category: String,
    pub n: usize,
    pub mse: f64,
    pub ks_d: f64,
    pub ks_p: f64,
}

/// Per-category MSE and a KS test of each category's errors against all
/// other errors. Input is `(subreddit, signed error)` per conversation.
pub fn category_mse(errors: &[(String, f64)], categories: &HashMap<String, String>) -> Vec<CategoryRow> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (sub, _)) in errors.iter().enumerate() {
        groups.entry(category_of(categories, sub)).or_default().push(i);
    }
    groups
        .into_iter()
        .map(|(cat, idx)| {
            let inside: Vec<f64> = idx.iter().map(|&i| errors[i].1).collect();
            let mut mark = vec![false; errors.len()];
            idx.iter().for_each(|&i| mark[i] = true);
            let rest: Vec<f64> = errors.iter().zip(&mark).filter(|(_, &m)| !m).map(|(e, _)| e.1).collect();
            let (ks_d, ks_p) = ks_two_sample(&inside, &rest);
            CategoryRow {
                category: cat.to_string(),
                n: inside.len(),
                mse: inside.iter().map(|e| e * e).sum::<f64>() / inside.len() as f64,
                ks_d,
                ks_p,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfStratum {
    Early,
    Late,
    Even,
}

/// Trajectory of the first and second half of the replies in time order.
/// `None` for odd or empty conversations.
pub fn half_scores(conv: &Conversation, model: &TrajectoryModel, ctx: &PanelContext) -> Result<Option<(f64, f64)>> {
    let order = conv.replies_by_time();
    if order.is_empty() || order.len() % 2 == 1 {
        return Ok(None);
    }
    let (first, second) = order.split_at(order.len() / 2);
    let early = model.score(&assemble_panel(&conv.restrict(first), ctx)?);
    let late = model.score(&assemble_panel(&conv.restrict(second), ctx)?);
    Ok(Some((early, late)))
}

pub fn half_stratum(early: f64, late: f64) -> HalfStratum {
    const TIE: f64 = 1e-9;
    if early > late + TIE {
        HalfStratum::Early
    } else if late > early + TIE {
        HalfStratum::Late
    } else {
        HalfStratum::Even
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumRow {
    pub stratum: HalfStratum,
    pub n: usize,
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSplitReport {
    pub excluded_odd: usize,
    pub excluded_empty: usize,
    pub strata: Vec<StratumRow>,
    /// Rank-sum test of squared errors, early against late.
    pub wilcoxon: Option<(f64, f64)>,
}

/// `sq_errors` maps conversation id to the forecaster's squared error.
pub fn half_split_analysis(
    convs: &[Conversation],
    model: &TrajectoryModel,
    ctx: &PanelContext,
    sq_errors: &HashMap<String, f64>,
) -> Result<HalfSplitReport> {
    let mut excluded_odd = 0;
    let mut excluded_empty = 0;
    let mut by: BTreeMap<HalfStratum, Vec<f64>> = BTreeMap::new();
    for conv in convs {
        match conv.replies().len() {
            0 => excluded_empty += 1,
            n if n % 2 == 1 => excluded_odd += 1,
            _ => {
                let (e, l) = half_scores(conv, model, ctx)?.expect("even, non-empty");
                let err = sq_errors.get(conv.id()).copied();
                let entry = by.entry(half_stratum(e, l)).or_default();
                if let Some(err) = err {
                    entry.push(err);
                } else {
                    entry.push(f64::NAN);
                }
            }
        }
    }
    let strata = [HalfStratum::Early, HalfStratum::Late, HalfStratum::Even]
        .into_iter()
        .map(|s| {
            let v = by.get(&s).cloned().unwrap_or_default();
            let known: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
            StratumRow {
                stratum: s,
                n: v.len(),
                mse: (!known.is_empty()).then(|| known.iter().sum::<f64>() / known.len() as f64),
            }
        })
        .collect();
    let finite = |s: HalfStratum| -> Vec<f64> {
        by.get(&s).map(|v| v.iter().copied().filter(|x| x.is_finite()).collect()).unwrap_or_default()
    };
    let (early, late) = (finite(HalfStratum::Early), finite(HalfStratum::Late));
    let wilcoxon = if early.is_empty() || late.is_empty() {
        None
    } else {
        Some(wilcoxon_rank_sum(&early, &late)?)
    };
    Ok(HalfSplitReport {
        excluded_odd,
        excluded_empty,
        strata,
        wilcoxon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_examples() {
        let t = [1.0, 2.0, 3.0];
        let r = evaluate_regression(&[2.0, 2.0, 2.0], &t).unwrap();
        assert_eq!(r.r2, 0.0);
        let r = evaluate_regression(&t, &t).unwrap();
        assert_eq!((r.mse, r.r2), (0.0, 1.0));
        assert!(matches!(evaluate_regression(&[1.0], &[1.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).0, 1.0);
        let (d, p) = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!((d, p), (0.0, 1.0));
        let (d, p) = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[3.5, 10.0]);
        assert!((d - 0.75).abs() < 1e-12);
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn categories_default_to_uncategorized() {
        let cats: HashMap<String, String> = [("science".to_string(), "stem".to_string())].into();
        let rows = category_mse(
            &[("science".into(), 1.0), ("cats".into(), 2.0), ("Science".into(), -1.0)],
            &cats,
        );
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].category, "stem");
        assert_eq!((rows[0].n, rows[0].mse), (2, 1.0));
        assert_eq!(rows[1].category, "uncategorized");
    }

    #[test]
    fn strata_rule() {
        assert_eq!(half_stratum(2.0, 1.0), HalfStratum::Early);
        assert_eq!(half_stratum(1.0, 2.0), HalfStratum::Late);
        assert_eq!(half_stratum(1.0, 1.0), HalfStratum::Even);
    }
}
