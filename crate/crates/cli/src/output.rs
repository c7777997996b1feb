//! Manifest lines, CSV tables and text reports.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub task: &'static str,
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# gibbs manifest config_sha256={} seed={} version={} task={}",
            self.config_sha256,
            self.seed,
            env!("CARGO_PKG_VERSION"),
            self.task
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits; enough to round-trip every f64.
pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(v) => f.write_str(&real(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "ragged table row");
        self.rows.push(row);
    }
}

/// Manifest line, header, then rows; LF line endings.
pub fn csv_string(table: &Table, manifest: &Manifest) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 cells");
    format!("{manifest}\n{body}")
}

/// Collects output files and writes them at the end.
#[derive(Debug)]
pub struct Outputs {
    pub dir: PathBuf,
    pub manifest: Manifest,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: PathBuf, manifest: Manifest) -> Self {
        Outputs {
            dir,
            manifest,
            files: Vec::new(),
        }
    }

    pub fn csv(&mut self, name: &str, table: &Table) {
        let text = csv_string(table, &self.manifest);
        self.files.push((name.to_string(), text));
    }

    pub fn report(&mut self, report: &Report) -> String {
        let text = format!("{}\n{}", self.manifest, report.text);
        self.files.push(("report.txt".to_string(), text.clone()));
        text
    }

    pub fn write(&self) -> CliResult<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let mut written = Vec::new();
        for (name, text) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Plain-text report; every number is tagged with its producing operation.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn heading(&mut self, s: &str) {
        let _ = writeln!(self.text, "## {s}");
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.text, "{}", s.as_ref());
    }

    pub fn real(&mut self, key: &str, v: f64, op: &str) {
        let _ = writeln!(self.text, "{key} = {}  [{op}]", real(v));
    }

    pub fn int(&mut self, key: &str, v: impl fmt::Display, op: &str) {
        let _ = writeln!(self.text, "{key} = {v}  [{op}]");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> Manifest {
        Manifest {
            config_sha256: "ab".into(),
            seed: 3,
            task: "thermo",
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["N", "partial_sum"]);
        let s = csv_string(&t, &manifest());
        assert!(s.ends_with("\nN,partial_sum\n"));
        assert!(s.starts_with("# gibbs manifest config_sha256=ab seed=3 version="));
        assert!(!s.contains('\r'));
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.0] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn quoting() {
        let mut t = Table::new(&["label"]);
        t.push(vec!["a,b".into()]);
        assert!(csv_string(&t, &manifest()).ends_with("\"a,b\"\n"));
    }
}
