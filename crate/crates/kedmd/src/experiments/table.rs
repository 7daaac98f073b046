//! Result tables with provenance, emitted as CSV (canonical) or JSON.
//! Emission is byte-deterministic: fixed column order, floats at 17
//! significant digits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::OutputFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(v) => v.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        if let Ok(v) = s.parse::<i64>() {
            return Cell::Int(v);
        }
        if let Ok(v) = s.parse::<f64>() {
            return Cell::Float(v);
        }
        Cell::Text(s.to_string())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Provenance block carried by every table: enough to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config_diff: Vec<String>,
    pub paper_deviations: Vec<String>,
}

impl Provenance {
    pub fn new(config: &super::config::ExperimentConfig) -> Self {
        Self {
            config_hash: config.hash(),
            seed: config.run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_diff: config.diff_from_defaults(),
            paper_deviations: super::config::ExperimentConfig::paper_deviations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&str], provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn float(&self, row: usize, name: &str) -> f64 {
        match &self.rows[row][self.col(name)] {
            Cell::Float(v) => *v,
            Cell::Int(v) => *v as f64,
            Cell::Text(t) => panic!("column {name} holds text {t:?}"),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# table = {}\n", self.name));
        out.push_str(&format!("# config_hash = {}\n", self.provenance.config_hash));
        out.push_str(&format!("# seed = {}\n", self.provenance.seed));
        out.push_str(&format!("# version = {}\n", self.provenance.version));
        out.push_str(&format!(
            "# config_diff = {}\n",
            self.provenance.config_diff.join("; ")
        ));
        out.push_str(&format!(
            "# paper_deviations = {}\n",
            self.provenance.paper_deviations.join("; ")
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let rendered: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&rendered.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut name = String::new();
        let mut provenance = Provenance {
            config_hash: String::new(),
            seed: 0,
            version: String::new(),
            config_diff: Vec::new(),
            paper_deviations: Vec::new(),
        };
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.splitn(2, '=');
                let key = parts.next().unwrap_or("").trim();
                let val = parts.next().unwrap_or("").trim();
                match key {
                    "table" => name = val.to_string(),
                    "config_hash" => provenance.config_hash = val.to_string(),
                    "seed" => {
                        provenance.seed = val
                            .parse()
                            .map_err(|_| parse_err(format!("bad seed {val}")))?
                    }
                    "version" => provenance.version = val.to_string(),
                    "config_diff" => {
                        provenance.config_diff = if val.is_empty() {
                            Vec::new()
                        } else {
                            val.split("; ").map(str::to_string).collect()
                        }
                    }
                    "paper_deviations" => {
                        provenance.paper_deviations = if val.is_empty() {
                            Vec::new()
                        } else {
                            val.split("; ").map(str::to_string).collect()
                        }
                    }
                    _ => {}
                }
                continue;
            }
            match &columns {
                None => columns = Some(line.split(',').map(str::to_string).collect()),
                Some(cols) => {
                    let cells: Vec<Cell> = line.split(',').map(Cell::parse).collect();
                    if cells.len() != cols.len() {
                        return Err(parse_err(format!(
                            "expected {} cells, got {}",
                            cols.len(),
                            cells.len()
                        )));
                    }
                    rows.push(cells);
                }
            }
        }
        Ok(ResultTable {
            name,
            columns: columns.ok_or_else(|| parse_err("missing header".into()))?,
            rows,
            provenance,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json_str(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Write the table under `dir` as `<name>.<ext>`; returns the path.
    pub fn write(&self, dir: impl AsRef<Path>, format: OutputFormat) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (ext, body) = match format {
            OutputFormat::Csv => ("csv", self.to_csv_string()),
            OutputFormat::Json => ("json", self.to_json_string()),
        };
        let path = dir.join(format!("{}.{ext}", self.name));
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
