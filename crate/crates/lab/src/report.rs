//! Output directory: CSV tables, JSON reports and the MANIFEST describing
//! every file written there.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::LabError;

/// One CSV cell. Floats are written with 17 significant digits so that a
/// round trip reproduces the value bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A CSV column: name and meaning, both recorded in the MANIFEST.
pub type Column = (&'static str, &'static str);

pub struct OutputDir {
    root: PathBuf,
    hash: String,
    entries: BTreeMap<String, String>,
}

const MANIFEST: &str = "MANIFEST";

impl OutputDir {
    pub fn create(root: &Path, config_hash: &str) -> Result<Self, LabError> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), hash: config_hash.to_string(), entries: BTreeMap::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn csv(&mut self, name: &str, what: &str, columns: &[Column], rows: &[Vec<Cell>]) -> Result<(), LabError> {
        let mut w = csv::Writer::from_path(self.root.join(name)).map_err(|e| LabError::Io(e.to_string()))?;
        w.write_record(columns.iter().map(|c| c.0)).map_err(|e| LabError::Io(e.to_string()))?;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            w.write_record(row.iter().map(Cell::render)).map_err(|e| LabError::Io(e.to_string()))?;
        }
        w.flush()?;
        let mut text = format!("{what}\n  columns:\n");
        for (c, d) in columns {
            text.push_str(&format!("    {c}: {d}\n"));
        }
        self.entries.insert(name.to_string(), text);
        Ok(())
    }

    /// Write `body` (an object) with the config hash added under
    /// `config_hash`.
    pub fn json(&mut self, name: &str, what: &str, body: Value) -> Result<(), LabError> {
        let mut body = body;
        match &mut body {
            Value::Object(m) => {
                m.insert("config_hash".into(), json!(self.hash));
            }
            other => {
                body = json!({ "config_hash": self.hash, "value": other.take() });
            }
        }
        let text = serde_json::to_string_pretty(&body).map_err(|e| LabError::Io(e.to_string()))?;
        fs::write(self.root.join(name), text + "\n")?;
        self.entries.insert(name.to_string(), format!("{what}\n  format: JSON object, keys sorted; config_hash is the SHA-256 of the run config\n"));
        Ok(())
    }

    /// Merge this run's entries into the MANIFEST, keeping entries of other
    /// files already described there.
    pub fn finish(self) -> Result<PathBuf, LabError> {
        let path = self.root.join(MANIFEST);
        let mut all = fs::read_to_string(&path).map(|t| parse_manifest(&t)).unwrap_or_default();
        all.extend(self.entries);
        let mut out = String::from("# Files in this directory. CSV floats carry 17 significant digits.\n");
        for (name, text) in &all {
            out.push_str(&format!("\n[{name}]\n{text}"));
        }
        fs::write(&path, out)?;
        Ok(path)
    }
}

fn parse_manifest(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if let Some((n, t)) = current.take() {
                out.insert(n, t);
            }
            current = Some((name.to_string(), String::new()));
        } else if let Some((_, t)) = current.as_mut() {
            if !line.is_empty() {
                t.push_str(line);
                t.push('\n');
            }
        }
    }
    if let Some((n, t)) = current {
        out.insert(n, t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn manifest_accumulates_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = OutputDir::create(dir.path(), "abc").unwrap();
        o.csv("a.csv", "first table", &[("x", "abscissa")], &[vec![1.0.into()]]).unwrap();
        o.finish().unwrap();
        let mut o = OutputDir::create(dir.path(), "abc").unwrap();
        o.json("b.json", "a report", json!({"k": 1})).unwrap();
        o.finish().unwrap();
        let m = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert!(m.contains("[a.csv]") && m.contains("x: abscissa") && m.contains("[b.json]"));
        let b: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
        assert_eq!(b["config_hash"], "abc");
        let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(a, "x\n1.0000000000000000e0\n");
    }
}
