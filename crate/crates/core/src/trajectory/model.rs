use std::path::Path;

use serde::{Deserialize, Serialize};

use super::panel::{is_prosocial, manifest, MetricPanel, METRIC_COUNT};
use super::pca::symmetric_eigen;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "prosocial-trajectory";
pub const MODEL_VERSION: u32 = 1;

/// Per-column population mean and standard deviation; columns with zero
/// variance are inactive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn active(&self, j: usize) -> bool {
        self.stds[j] > 0.0
    }

    pub fn zero_variance(&self) -> Vec<usize> {
        (0..self.stds.len()).filter(|&j| !self.active(j)).collect()
    }

    /// z-scores; inactive columns map to 0.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, x)| if self.active(j) { (x - self.means[j]) / self.stds[j] } else { 0.0 })
            .collect()
    }
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    if rows.len() < 2 {
        return Err(Error::Fit(format!("standardizer needs at least 2 rows, got {}", rows.len())));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Fit("rows have different lengths".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in rows".into()));
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let stds = (0..d)
        .map(|j| {
            let var = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
            // exact-constant columns can leave rounding residue
            let scale = means[j].abs().max(1.0);
            if var.sqrt() <= 1e-12 * scale {
                0.0
            } else {
                var.sqrt()
            }
        })
        .collect();
    Ok(Standardizer { means, stds })
}

/// Principal components of already standardized rows over the given active
/// columns. Returns (eigenvalues, loadings rows in full width).
pub fn principal_components(z: &[Vec<f64>], active: &[usize], width: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if z.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in standardized rows".into()));
    }
    let n = z.len() as f64;
    let k = active.len();
    let mut cov = vec![vec![0.0; k]; k];
    for row in z {
        for a in 0..k {
            let x = row[active[a]];
            for b in a..k {
                cov[a][b] += x * row[active[b]];
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            cov[a][b] /= n;
            cov[b][a] = cov[a][b];
        }
    }
    let (values, vectors) = symmetric_eigen(&cov)?;
    let loadings = vectors
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; width];
            for (a, &j) in active.iter().enumerate() {
                full[j] = v[a];
            }
            full
        })
        .collect();
    Ok((values, loadings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModel {
    pub format: String,
    pub version: u32,
    pub metrics: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub zero_variance: Vec<String>,
    pub eigenvalues: Vec<f64>,
    pub loadings: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    pub sign_convention: Vec<f64>,
}

/// Standardizes the panels and fits PCA. Components are signed so that the
/// mean loading over prosocial metrics is non-negative.
pub fn fit_trajectory(panels: &[MetricPanel]) -> Result<TrajectoryModel> {
    let rows: Vec<Vec<f64>> = panels.iter().map(|p| p.values.clone()).collect();
    let std = fit_standardizer(&rows)?;
    let active: Vec<usize> = (0..METRIC_COUNT).filter(|&j| std.active(j)).collect();
    if active.is_empty() {
        return Err(Error::Fit("every metric has zero variance".into()));
    }
    let z: Vec<Vec<f64>> = rows.iter().map(|r| std.transform(r)).collect();
    let (eigenvalues, loadings) = principal_components(&z, &active, METRIC_COUNT)?;
    let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|e| e.max(0.0)).collect();
    let trace: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio = eigenvalues.iter().map(|e| if trace > 0.0 { e / trace } else { 0.0 }).collect();
    let prosocial: Vec<usize> = (0..METRIC_COUNT).filter(|&j| is_prosocial(j)).collect();
    let sign_convention = loadings
        .iter()
        .map(|row| {
            let m: f64 = prosocial.iter().map(|&j| row[j]).sum::<f64>() / prosocial.len() as f64;
            if m < 0.0 { -1.0 } else { 1.0 }
        })
        .collect();
    Ok(TrajectoryModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        metrics: manifest(),
        zero_variance: std.zero_variance().iter().map(|&j| manifest()[j].clone()).collect(),
        means: std.means,
        stds: std.stds,
        eigenvalues,
        loadings,
        explained_variance_ratio,
        sign_convention,
    })
}

impl TrajectoryModel {
    fn standardizer(&self) -> Standardizer {
        Standardizer {
            means: self.means.clone(),
            stds: self.stds.clone(),
        }
    }

    pub fn components(&self) -> usize {
        self.loadings.len()
    }

    /// Signed loading row of component `c`.
    pub fn signed_loadings(&self, c: usize) -> Vec<f64> {
        self.loadings[c].iter().map(|x| x * self.sign_convention[c]).collect()
    }

    pub fn check_manifest(&self, found: &[String]) -> Result<()> {
        if self.metrics != found {
            return Err(Error::Manifest {
                expected: self.metrics.clone(),
                found: found.to_vec(),
            });
        }
        Ok(())
    }

    pub fn project(&self, values: &[f64], component: usize) -> f64 {
        let z = self.standardizer().transform(values);
        self.sign_convention[component] * self.loadings[component].iter().zip(&z).map(|(l, x)| l * x).sum::<f64>()
    }

    /// First-component score of a panel.
    pub fn score(&self, panel: &MetricPanel) -> f64 {
        self.project(&panel.values, 0)
    }

    /// Sum of the top-`k` explained variance ratios.
    pub fn explained_variance(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.explained_variance_ratio.len() {
            return Err(Error::Argument(format!(
                "k = {k} outside 1..={}",
                self.explained_variance_ratio.len()
            )));
        }
        Ok(self.explained_variance_ratio[..k].iter().sum())
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Config(format!("{source}: expected {MODEL_FORMAT} version {MODEL_VERSION}")));
        }
        let width = m.metrics.len();
        let shapes_ok = m.means.len() == width
            && m.stds.len() == width
            && m.loadings.iter().all(|r| r.len() == width)
            && m.sign_convention.len() == m.loadings.len()
            && m.explained_variance_ratio.len() == m.loadings.len();
        if !shapes_ok || m.loadings.is_empty() {
            return Err(Error::Config(format!("{source}: inconsistent model dimensions")));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&crate::resources::read_text(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::pearson;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panels(rows: Vec<Vec<f64>>) -> Vec<MetricPanel> {
        rows.into_iter()
            .map(|r| MetricPanel::new(r, vec![true; METRIC_COUNT]).unwrap())
            .collect()
    }

    fn random_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let f: f64 = rng.gen_range(-2.0..2.0);
                (0..METRIC_COUNT)
                    .map(|j| {
                        let sign = if is_prosocial(j) { 1.0 } else { -1.0 };
                        sign * f * (1.0 + j as f64 * 0.1) + rng.gen_range(-0.5..0.5)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn standardizer_basics() {
        let s = fit_standardizer(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap();
        assert_eq!(s.means, vec![1.0, 5.0]);
        assert_eq!(s.stds, vec![1.0, 0.0]);
        assert_eq!(s.zero_variance(), vec![1]);
        assert!(fit_standardizer(&[vec![1.0]]).is_err());
        let rows = random_rows(50, 1);
        let s = fit_standardizer(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.transform(r)).collect();
        for j in 0..METRIC_COUNT {
            let col: Vec<f64> = z.iter().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / 50.0;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 50.0;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn perfectly_correlated_pair_is_rank_one() {
        let z = vec![vec![1.0, 2.0], vec![-1.0, -2.0], vec![0.5, 1.0]];
        let s = fit_standardizer(&z).unwrap();
        let zz: Vec<Vec<f64>> = z.iter().map(|r| s.transform(r)).collect();
        let (vals, _) = principal_components(&zz, &[0, 1], 2).unwrap();
        let ratio = vals[0] / vals.iter().sum::<f64>();
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_properties() {
        let rows = random_rows(200, 7);
        let m = fit_trajectory(&panels(rows.clone())).unwrap();
        // orthonormal loadings
        for a in 0..m.components() {
            for b in 0..m.components() {
                let d: f64 = m.loadings[a].iter().zip(&m.loadings[b]).map(|(x, y)| x * y).sum();
                assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        assert!((m.explained_variance(m.components()).unwrap() - 1.0).abs() < 1e-9);
        assert!(m.explained_variance(0).is_err());
        for k in 1..m.components() {
            assert!(m.explained_variance(k + 1).unwrap() >= m.explained_variance(k).unwrap());
        }
        // mean panel scores 0
        let mean = MetricPanel::new(m.means.clone(), vec![true; METRIC_COUNT]).unwrap();
        assert!(m.score(&mean).abs() < 1e-12);
        // sign convention and toxic loadings
        let l = m.signed_loadings(0);
        let prosocial_mean: f64 = (0..METRIC_COUNT).filter(|&j| is_prosocial(j)).map(|j| l[j]).sum::<f64>() / 20.0;
        assert!(prosocial_mean >= 0.0);
        assert!(l[20] <= 0.0 && l[21] <= 0.0);
        // the planted factor is recovered
        let scores: Vec<f64> = panels(rows.clone()).iter().map(|p| m.score(p)).collect();
        let factor: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        assert!(pearson(&scores, &factor).unwrap() > 0.9);
    }

    #[test]
    fn reconstruction_is_complete() {
        let rows = random_rows(60, 3);
        let m = fit_trajectory(&panels(rows.clone())).unwrap();
        let s = m.standardizer();
        for r in rows.iter().take(10) {
            let z = s.transform(r);
            let proj: Vec<f64> = (0..m.components()).map(|c| m.project(r, c)).collect();
            for j in 0..METRIC_COUNT {
                let back: f64 = (0..m.components()).map(|c| proj[c] * m.signed_loadings(c)[j]).sum();
                assert!((back - z[j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn linear_in_centered_panels() {
        let rows = random_rows(40, 5);
        let m = fit_trajectory(&panels(rows.clone())).unwrap();
        let centered = |r: &[f64]| -> Vec<f64> { r.iter().zip(&m.means).map(|(x, mu)| x - mu).collect() };
        let (a, b) = (centered(&rows[0]), centered(&rows[1]));
        let sum: Vec<f64> = a.iter().zip(&b).zip(&m.means).map(|((x, y), mu)| x + y + mu).collect();
        let with_mean = |c: &[f64]| -> Vec<f64> { c.iter().zip(&m.means).map(|(x, mu)| x + mu).collect() };
        let lhs = m.project(&with_mean(&a), 0) + m.project(&with_mean(&b), 0);
        assert!((lhs - m.project(&sum, 0)).abs() < 1e-9);
    }

    #[test]
    fn zero_variance_metric_gets_zero_loading() {
        let mut rows = random_rows(30, 2);
        for r in rows.iter_mut() {
            r[5] = 0.0;
        }
        let m = fit_trajectory(&panels(rows)).unwrap();
        assert_eq!(m.zero_variance, vec!["accommodation".to_string()]);
        assert!(m.loadings.iter().all(|l| l[5] == 0.0));
    }

    #[test]
    fn manifest_mismatch_and_round_trip() {
        let m = fit_trajectory(&panels(random_rows(20, 4))).unwrap();
        let back = TrajectoryModel::from_text(&m.to_text(), "m").unwrap();
        assert_eq!(back, m);
        let mut other = manifest();
        other.swap(0, 1);
        assert!(matches!(m.check_manifest(&other), Err(Error::Manifest { .. })));
        assert!(m.check_manifest(&manifest()).is_ok());
    }

    #[test]
    fn row_permutation_keeps_eigenvalues() {
        let rows = random_rows(50, 11);
        let m1 = fit_trajectory(&panels(rows.clone())).unwrap();
        let mut rev = rows;
        rev.reverse();
        let m2 = fit_trajectory(&panels(rev)).unwrap();
        for (a, b) in m1.eigenvalues.iter().zip(&m2.eigenvalues) {
            assert!((a - b).abs() < 1e-9);
        }
        for (ra, rb) in m1.loadings.iter().zip(&m2.loadings).take(3) {
            let d: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            assert!((d.abs() - 1.0).abs() < 1e-6);
        }
    }
}
