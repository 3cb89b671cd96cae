//! Report files: CSV tables, sorted-key JSON, and the run manifest.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = concat!("qcl ", env!("CARGO_PKG_VERSION"));

/// A CSV cell. Floats are written with 17 significant digits; `None` stays
/// empty.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
    Opt(Option<f64>),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) | Cell::Opt(Some(x)) => format!("{x:.16e}"),
            Cell::Opt(None) => String::new(),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::S(if b { "pass" } else { "fail" }.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Opt(x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Writes report files into one directory and remembers what it wrote.
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, Vec<FileEntry>>,
}

/// Render a serializable value as pretty JSON with sorted keys.
pub fn sorted_json<T: Serialize>(value: &T) -> String {
    // `serde_json::Map` is ordered by key unless `preserve_order` is enabled
    let v: Value = serde_json::to_value(value).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write(&mut self, group: &str, name: &str, body: &[u8]) -> io::Result<()> {
        std::fs::write(self.root.join(name), body)?;
        let entries = self.files.entry(group.to_string()).or_default();
        entries.retain(|e| e.path != name);
        entries.push(FileEntry { path: name.to_string(), sha256: hex::encode(Sha256::digest(body)) });
        Ok(())
    }

    pub fn csv(&mut self, group: &str, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(Cell::render))?;
        }
        let body = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        self.write(group, name, &body)
    }

    pub fn json<T: Serialize>(&mut self, group: &str, name: &str, value: &T) -> io::Result<()> {
        self.write(group, name, sorted_json(value).as_bytes())
    }

    pub fn text(&mut self, group: &str, name: &str, body: &str) -> io::Result<()> {
        self.write(group, name, body.as_bytes())
    }

    pub fn files(&self) -> &BTreeMap<String, Vec<FileEntry>> {
        &self.files
    }
}

/// Outcome of one subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A gate refused to run the check.
    Refused,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub tool_version: String,
    pub command: String,
    pub exit_code: i32,
    pub files: BTreeMap<String, Vec<FileEntry>>,
    pub timings_ms: BTreeMap<String, u128>,
    pub summary: BTreeMap<String, Status>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(Cell::F(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::F(-2.5).render(), "-2.5000000000000000e0");
        assert_eq!(Cell::Opt(None).render(), "");
        let x = 0.123456789012345678f64;
        assert_eq!(Cell::F(x).render().parse::<f64>().unwrap(), x);
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut m = serde_json::Map::new();
        m.insert("zeta".into(), Value::from(1));
        m.insert("alpha".into(), Value::from(2));
        let s = sorted_json(&m);
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }

    #[test]
    fn files_are_recorded_with_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.csv("t", "a.csv", &["x", "y"], vec![vec![1usize.into(), 0.5.into()]]).unwrap();
        let body = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(body, "x,y\n1,5.0000000000000000e-1\n");
        let e = &out.files()["t"][0];
        assert_eq!(e.sha256, hex::encode(Sha256::digest(body.as_bytes())));
    }
}
