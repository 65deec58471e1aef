use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// A report written twice: as aligned text tables and as one JSON object
/// per line.
#[derive(Debug, Clone, Default)]
pub struct Report {
    name: String,
    text: String,
    records: Vec<Value>,
}

pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "undefined".into()
    } else {
        format!("{x:.6}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), fmt_f)
}

impl Report {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            text: format!("== {name} ==\n"),
            records: Vec::new(),
        }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    /// Adds a machine-readable record tagged with the report name and
    /// `kind`.
    pub fn record(&mut self, kind: &str, mut fields: Value) {
        if let Value::Object(m) = &mut fields {
            m.insert("report".into(), json!(self.name));
            m.insert("kind".into(), json!(kind));
        }
        self.records.push(fields);
    }

    /// Key/value pair in both renderings.
    pub fn kv(&mut self, key: &str, value: Value) {
        let shown = match &value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.as_f64().filter(|_| n.is_f64()).map_or_else(|| n.to_string(), fmt_f),
            Value::Null => "undefined".into(),
            other => other.to_string(),
        };
        self.line(format!("{key:<32} {shown}"));
        self.record("value", json!({ "key": key, "value": value }));
    }

    pub fn table(&mut self, headers: &[&str], rows: &[Vec<String>]) {
        let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
        for r in rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let render = |cells: &mut dyn Iterator<Item = &str>| {
            cells
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let head = render(&mut headers.iter().copied());
        self.line(&head);
        self.line("-".repeat(head.len()));
        for r in rows {
            let l = render(&mut r.iter().map(String::as_str));
            self.line(l);
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn records(&self) -> &[Value] {
        &self.records
    }

    /// Writes `<dir>/<name>.txt` and `<dir>/<name>.jsonl`, and echoes the
    /// text to stdout.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let txt = dir.join(format!("{}.txt", self.name));
        std::fs::write(&txt, &self.text).map_err(|e| Error::io(&txt, e))?;
        let mut lines = String::new();
        for r in &self.records {
            lines.push_str(&r.to_string());
            lines.push('\n');
        }
        let jl = dir.join(format!("{}.jsonl", self.name));
        std::fs::write(&jl, lines).map_err(|e| Error::io(&jl, e))?;
        print!("{}", self.text);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_rendering() {
        let mut r = Report::new("demo");
        r.kv("count", json!(3));
        r.kv("ratio", json!(0.5));
        r.table(&["a", "bb"], &[vec!["1".into(), "22".into()]]);
        assert!(r.text().contains("count                            3\n"));
        assert!(r.text().contains("ratio                            0.500000\n"));
        assert!(r.text().contains("a  bb\n-----\n1  22\n"));
        assert_eq!(r.records().len(), 2);
        assert_eq!(r.records()[0]["report"], "demo");
    }
}
