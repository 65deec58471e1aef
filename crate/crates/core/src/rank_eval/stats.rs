use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Matthews correlation of the 2×2 table (a, b; c, d). A zero marginal
/// gives 0 by convention.
pub fn mcc(a: u64, b: u64, c: u64, d: u64) -> Result<f64> {
    if a + b + c + d == 0 {
        return Err(Error::Argument("contingency table is all zero".into()));
    }
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(((a * d - b * c) / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Bonferroni-corrected p-value of χ² = n·MCC² with one degree of freedom.
pub fn mcc_significance(mcc: f64, n: u64, tests: u32) -> f64 {
    let chi2 = n as f64 * mcc * mcc;
    // upper tail of χ²(1) is erfc(sqrt(x / 2))
    let p = erfc((chi2 / 2.0).sqrt());
    (p * tests.max(1) as f64).min(1.0)
}

/// Nominal Krippendorff's α. `ratings[coder][item]` is `None` when the
/// coder did not rate the item. Items with fewer than two ratings are not
/// pairable and are ignored.
pub fn krippendorff_alpha<T: Eq + Hash + Ord + Clone>(ratings: &[Vec<Option<T>>]) -> Result<f64> {
    let items = ratings.iter().map(Vec::len).max().unwrap_or(0);
    let mut o: BTreeMap<(T, T), f64> = BTreeMap::new();
    let mut pairable = 0usize;
    for u in 0..items {
        let vals: Vec<&T> = ratings.iter().filter_map(|r| r.get(u).and_then(Option::as_ref)).collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        pairable += 1;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    *o.entry((vals[i].clone(), vals[j].clone())).or_default() += 1.0 / (m - 1) as f64;
                }
            }
        }
    }
    if pairable == 0 {
        return Err(Error::Undefined("no item has two or more ratings".into()));
    }
    let mut marg: HashMap<&T, f64> = HashMap::new();
    for ((c, _), v) in &o {
        *marg.entry(c).or_default() += v;
    }
    let n: f64 = marg.values().sum();
    let observed: f64 = o.iter().filter(|((c, k), _)| c != k).map(|(_, v)| v).sum();
    let total_sq: f64 = marg.values().map(|v| v * v).sum();
    let expected = n * n - total_sq;
    if expected == 0.0 {
        return Err(Error::Undefined("only one label value is used".into()));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Mann-Whitney U of `x` against `y` with a two-sided p from the
/// tie-corrected normal approximation.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Argument("rank-sum test needs two non-empty samples".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("rank-sum test input is not finite".into()));
    }
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&all);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let rx: f64 = ranks[..x.len()].iter().sum();
    let u = rx - nx * (nx + 1.0) / 2.0;
    let n = nx + ny;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok((u, 1.0));
    }
    let z = (u - nx * ny / 2.0) / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((u, (2.0 * std.sf(z.abs())).min(1.0)))
}
