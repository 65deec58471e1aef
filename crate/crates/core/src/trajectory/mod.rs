//! Metric panels and the PCA-based prosocial trajectory score.

pub mod model;
pub mod panel;
pub mod pca;

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use model::{fit_standardizer, fit_trajectory, principal_components, Standardizer, TrajectoryModel};
pub use panel::{
    assemble_panel, comment_signals, is_prosocial, manifest, metric_index, tlc_block, CommentSignals,
    MetricPanel, PanelContext, METRIC_COUNT, METRIC_NAMES, TLC_BLOCK_NAMES,
};
pub use pca::symmetric_eigen;

use crate::error::{Error, Result};

pub const PANEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PanelHeader {
    schema_version: u32,
    metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub id: String,
    pub subreddit: String,
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl PanelRow {
    pub fn panel(&self) -> Result<MetricPanel> {
        MetricPanel::new(self.values.clone(), self.defined.clone())
    }
}

/// Header line with the metric manifest, then one row per conversation.
pub fn write_panels(path: &Path, rows: &[PanelRow]) -> Result<()> {
    let mut text = serde_json::to_string(&PanelHeader {
        schema_version: PANEL_SCHEMA_VERSION,
        metrics: manifest(),
    })
    .expect("header serializes");
    text.push('\n');
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("row serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Returns the file's manifest and rows.
pub fn read_panels(path: &Path) -> Result<(Vec<String>, Vec<PanelRow>)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{}: empty panel file", path.display()),
        })?
        .map_err(|e| Error::io(path, e))?;
    let header: PanelHeader = serde_json::from_str(&header).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.schema_version != PANEL_SCHEMA_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported panel schema_version {}", header.schema_version),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PanelRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        if row.values.len() != header.metrics.len() || row.defined.len() != header.metrics.len() {
            return Err(Error::Parse {
                line: i + 2,
                message: "row width differs from manifest".into(),
            });
        }
        rows.push(row);
    }
    Ok((header.metrics, rows))
}
