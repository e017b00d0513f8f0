use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::cli::Format;

/// Writes the files of one run and records them for the manifest.
pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<String>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, formats: &[Format]) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut formats = if formats.is_empty() {
            vec![Format::Csv, Format::Json, Format::Svg]
        } else {
            formats.to_vec()
        };
        formats.sort();
        formats.dedup();
        Ok(Self { dir, formats, written: Vec::new(), warnings: Vec::new() })
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        self.write(name, &table.render())
    }

    pub fn svg(&mut self, name: &str, doc: &str) -> Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        self.write(name, doc)
    }

    /// Writes `manifest.json`. Thread count and output directory are left
    /// out so identical experiments give identical manifests.
    pub fn finish(mut self, subcommand: &str, seed: u64, params: BTreeMap<&str, Value>) -> Result<()> {
        if self.written.is_empty() {
            self.warnings.push(format!("{subcommand} writes no files in the requested formats"));
        }
        let mut command = vec!["amdim".to_string(), format!("--seed={seed}")];
        for f in &self.formats {
            command.push(format!("--format={}", format_name(*f)));
        }
        command.push(subcommand.to_string());
        for (k, v) in &params {
            match v {
                Value::Bool(true) => command.push(format!("--{k}")),
                Value::Bool(false) => {}
                Value::String(s) => command.push(format!("--{k}={s}")),
                other => command.push(format!("--{k}={other}")),
            }
        }
        let manifest = serde_json::json!({
            "tool": "amdim",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "seed": seed,
            "parameters": params,
            "formats": self.formats.iter().map(|f| format_name(*f)).collect::<Vec<_>>(),
            "outputs": self.written,
            "warnings": self.warnings,
            "command": command,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push("manifest.json".into());
        Ok(())
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

/// A CSV cell.
pub enum Cell {
    Float(Option<f64>),
    Int(u64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(Some(x))
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match cell {
                    Cell::Float(Some(x)) => write_float(&mut s, *x),
                    Cell::Float(None) => {}
                    Cell::Int(n) => write!(s, "{n}").unwrap(),
                    Cell::Bool(b) => write!(s, "{b}").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// 17 significant digits, which round-trips every finite double.
fn write_float(s: &mut String, x: f64) {
    if x.is_finite() {
        write!(s, "{x:.16e}").unwrap();
    } else if x.is_nan() {
        s.push_str("NaN");
    } else if x > 0.0 {
        s.push_str("inf");
    } else {
        s.push_str("-inf");
    }
}
