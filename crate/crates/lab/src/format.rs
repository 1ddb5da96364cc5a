//! Byte-stable text output: floats, CSV tables, JSON documents and the
//! MANIFEST that lists every file of a run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// 17 significant digits in scientific notation, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Comma-separated table with a header row and LF line endings.
pub struct Csv {
    columns: usize,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(header.iter().map(|s| s.as_ref()))
            .expect("writing to a Vec cannot fail");
        Self {
            columns: header.len(),
            writer,
        }
    }

    /// Appends a row; panics on a column count mismatch, which is a bug in the caller.
    pub fn row(&mut self, cells: impl IntoIterator<Item = Cell>) {
        let record: Vec<String> = cells.into_iter().map(|c| c.render()).collect();
        assert_eq!(record.len(), self.columns, "row width does not match the header");
        self.writer.write_record(&record).expect("writing to a Vec cannot fail");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("writing to a Vec cannot fail")
    }
}

/// Parsed CSV: header and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| LabError::format(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(String::is_empty) {
            return Err(LabError::format(path, "empty file"));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| LabError::format(path, e.to_string()))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Parses a float cell written by [`float`] (or any `f64` literal).
pub fn parse_float(path: &Path, cell: &str) -> Result<f64> {
    cell.parse()
        .map_err(|_| LabError::format(path, format!("not a number: {cell:?}")))
}

// pretty printing with every float in the fixed 17-digit form
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Pretty JSON with fixed float formatting and a trailing newline.
/// Non-finite floats are written as `null`.
pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    serde::Serialize::serialize(value, &mut ser).expect("writing to a Vec cannot fail");
    out.push(b'\n');
    out
}

/// JSON number for a float; `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn num_list(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn opt_num_list(xs: &[Option<f64>]) -> Value {
    Value::Array(xs.iter().map(|x| opt_num(*x)).collect())
}

/// Whether every listed file was written.
#[derive(Debug, Clone, PartialEq)]
pub enum Completeness {
    Complete,
    Partial(String),
}

/// Output directory of one run. Every write is hashed into the MANIFEST.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<(String, String, usize)>,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
        Ok(Self {
            dir,
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
        let hash = sha256_hex(bytes);
        match self.entries.iter_mut().find(|e| e.0 == name) {
            Some(entry) => *entry = (name.to_string(), hash, bytes.len()),
            None => self.entries.push((name.to_string(), hash, bytes.len())),
        }
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<PathBuf> {
        self.write(name, &json_bytes(value))
    }

    pub fn write_csv(&mut self, name: &str, csv: Csv) -> Result<PathBuf> {
        self.write(name, &csv.into_bytes())
    }

    /// File names in write order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    /// Writes `MANIFEST`: a status line, then `sha256  bytes  name` per file.
    pub fn finish(self, status: Completeness) -> Result<PathBuf> {
        let mut text = match status {
            Completeness::Complete => String::from("status: complete\n"),
            Completeness::Partial(reason) => format!("status: partial ({})\n", reason.replace('\n', " ")),
        };
        for (name, hash, size) in &self.entries {
            let _ = writeln!(text, "{hash}  {size}  {name}");
        }
        let path = self.dir.join("MANIFEST");
        fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}
