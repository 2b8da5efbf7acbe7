//! CSV and manifest writers. Floats use 17 significant digits.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// `{:.16e}` formatting, which round-trips every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV with the given header and `f64` columns of equal length.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> io::Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let mut w = csv::Writer::from_writer(io::BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    let mut record = Vec::with_capacity(columns.len());
    for r in 0..rows {
        record.clear();
        record.extend(columns.iter().map(|c| fmt_f64(c[r])));
        w.write_record(&record)?;
    }
    w.flush()
}

/// Streams CSV rows of preformatted fields.
pub struct RowWriter {
    inner: csv::Writer<io::BufWriter<File>>,
}

impl RowWriter {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        let mut inner = csv::Writer::from_writer(io::BufWriter::new(File::create(path)?));
        inner.write_record(header)?;
        Ok(RowWriter { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(io::Error::from)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// `key = value` lines, in insertion order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn real(&mut self, key: impl Into<String>, v: f64) {
        self.push(key, fmt_f64(v));
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Writes the resolved configuration followed by the derived report as comments.
pub fn write_manifest(path: &Path, config_text: &str, report: &Report) -> io::Result<()> {
    let mut f = io::BufWriter::new(File::create(path)?);
    f.write_all(config_text.as_bytes())?;
    f.write_all(b"\n# derived\n")?;
    for (k, v) in &report.lines {
        writeln!(f, "# {k} = {v}")?;
    }
    f.flush()
}
