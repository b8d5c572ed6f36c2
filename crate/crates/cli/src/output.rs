//! Result files: CSV tables with `#`-prefixed provenance headers and JSON
//! records. Floats are written in scientific notation with 17 significant
//! digits so that reruns compare bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance lines shared by every file of one run.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub vqe_seed: u64,
    pub noise_seed: u64,
}

impl Provenance {
    pub fn lines(&self) -> Vec<(String, String)> {
        vec![
            ("config_sha256".into(), self.config_sha256.clone()),
            ("vqe_seed".into(), self.vqe_seed.to_string()),
            ("noise_seed".into(), self.noise_seed.to_string()),
        ]
    }
}

pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn create(root: &Path, provenance: Provenance) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            provenance,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Opens a CSV table whose header carries the provenance lines followed
    /// by `extra` key-value pairs.
    pub fn csv(&self, name: &str, extra: &[(&str, String)], columns: &[&str]) -> std::io::Result<Table> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        for (k, v) in self.provenance.lines() {
            writeln!(w, "# {k}={v}")?;
        }
        for (k, v) in extra {
            writeln!(w, "# {k}={v}")?;
        }
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(columns).map_err(std::io::Error::other)?;
        Ok(Table {
            writer,
            width: columns.len(),
        })
    }

    /// Writes pretty JSON with the provenance folded in under `"provenance"`.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut v = serde_json::to_value(value).map_err(std::io::Error::other)?;
        if let serde_json::Value::Object(map) = &mut v {
            let prov: serde_json::Map<_, _> = self
                .provenance
                .lines()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect();
            map.insert("provenance".into(), serde_json::Value::Object(prov));
        }
        write_json(&self.path(name), &v)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::other)?;
    writeln!(w)?;
    w.flush()
}

pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
    width: usize,
}

impl Table {
    pub fn row(&mut self, cells: Vec<Cell>) -> std::io::Result<()> {
        assert_eq!(cells.len(), self.width, "row width");
        let rendered: Vec<String> = cells.iter().map(Cell::render).collect();
        self.writer.write_record(&rendered).map_err(std::io::Error::other)
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

/// A parsed CSV table: header comments as key-value pairs and the records.
#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let meta = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = reader
            .headers()
            .map_err(|e| format!("{}: {e}", path.display()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self { meta, columns, rows })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Result<usize, String> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| format!("missing column {name}"))
    }

    pub fn f64(&self, row: usize, col: usize) -> Result<f64, String> {
        self.rows[row][col]
            .parse()
            .map_err(|e| format!("row {row} column {}: {e}", self.columns[col]))
    }

    pub fn usize(&self, row: usize, col: usize) -> Result<usize, String> {
        self.rows[row][col]
            .parse()
            .map_err(|e| format!("row {row} column {}: {e}", self.columns[col]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(
            dir.path(),
            Provenance {
                config_sha256: "ab".into(),
                vqe_seed: 1,
                noise_seed: 2,
            },
        )
        .unwrap();
        let mut t = out.csv("t.csv", &[("eta", fmt_f64(0.05))], &["a", "b"]).unwrap();
        t.row(vec![1usize.into(), 0.25.into()]).unwrap();
        t.finish().unwrap();
        let p = ParsedTable::read(&out.path("t.csv")).unwrap();
        assert_eq!(p.meta("config_sha256"), Some("ab"));
        assert_eq!(p.meta("eta").unwrap().parse::<f64>().unwrap(), 0.05);
        assert_eq!(p.columns, vec!["a", "b"]);
        assert_eq!(p.f64(0, 1).unwrap(), 0.25);
    }
}
