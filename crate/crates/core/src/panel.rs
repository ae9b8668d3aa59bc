//! Per-symbol measure panel: one row per interval, one column per measure.
//!
//! Missing cells are stored as NaN internally and surface as `None`; they
//! are never zero-filled. Two on-disk forms exist:
//!
//! * CSV, header `interval_start_ns,<measure names...>`, missing as an empty
//!   field, values in shortest round-trip decimal form.
//! * A columnar binary cache:
//!
//! ```text
//! magic    8 bytes  "TCPANEL\0"
//! version  u32 LE   1
//! symbol   u32 LE length + UTF-8 bytes
//! rows     u64 LE
//! cols     u64 LE
//! names    cols x (u32 LE length + UTF-8 bytes)
//! starts   rows x i64 LE
//! values   cols x rows x f64 LE, column-major, NaN = missing
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Timestamp;

pub const PANEL_MAGIC: &[u8; 8] = b"TCPANEL\0";
pub const PANEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePanel {
    pub symbol: String,
    interval_start: Vec<Timestamp>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl MeasurePanel {
    /// All-missing panel.
    pub fn new(symbol: impl Into<String>, interval_start: Vec<Timestamp>, names: Vec<String>) -> Self {
        let rows = interval_start.len();
        let columns = vec![vec![f64::NAN; rows]; names.len()];
        MeasurePanel {
            symbol: symbol.into(),
            interval_start,
            names,
            columns,
        }
    }

    pub fn from_columns(
        symbol: impl Into<String>,
        interval_start: Vec<Timestamp>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if columns.len() != names.len()
            || columns.iter().any(|c| c.len() != interval_start.len())
        {
            return Err(Error::Data("panel shape mismatch".into()));
        }
        let columns = columns
            .into_iter()
            .map(|c| c.into_iter().map(|v| if v.is_finite() { v } else { f64::NAN }).collect())
            .collect();
        Ok(MeasurePanel {
            symbol: symbol.into(),
            interval_start,
            names,
            columns,
        })
    }

    pub fn rows(&self) -> usize {
        self.interval_start.len()
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn interval_start(&self) -> &[Timestamp] {
        &self.interval_start
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.columns[col][row];
        v.is_finite().then_some(v)
    }

    /// Stores a value; non-finite values are stored as missing.
    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        self.columns[col][row] = value.filter(|v| v.is_finite()).unwrap_or(f64::NAN);
    }

    /// Raw column with NaN marking missing cells.
    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.column(i))
    }

    /// Fraction of non-missing cells in a column.
    pub fn coverage(&self, col: usize) -> f64 {
        if self.rows() == 0 {
            return 0.0;
        }
        let present = self.columns[col].iter().filter(|v| v.is_finite()).count();
        present as f64 / self.rows() as f64
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        self.write_csv_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "interval_start_ns")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        let mut line = String::new();
        for (row, start) in self.interval_start.iter().enumerate() {
            line.clear();
            line.push_str(&start.to_string());
            for col in &self.columns {
                line.push(',');
                let v = col[row];
                if v.is_finite() {
                    line.push_str(&v.to_string());
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, symbol: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("interval_start_ns") {
            return Err(Error::Header {
                path: path.to_path_buf(),
                expected: "interval_start_ns,<measures>".into(),
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut starts = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for row in rdr.records() {
            let row = row?;
            let bad = |what: &str| {
                Error::Data(format!(
                    "{}: line {}: bad {what}",
                    path.display(),
                    row.position().map_or(0, |p| p.line())
                ))
            };
            starts.push(row[0].parse::<i64>().map_err(|_| bad("interval start"))?);
            for (i, col) in columns.iter_mut().enumerate() {
                let s = row.get(i + 1).ok_or_else(|| bad("row length"))?;
                col.push(if s.is_empty() {
                    f64::NAN
                } else {
                    s.parse::<f64>().map_err(|_| bad("value"))?
                });
            }
        }
        MeasurePanel::from_columns(symbol, starts, names, columns)
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        self.write_binary_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_binary_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())
        }
        w.write_all(PANEL_MAGIC)?;
        w.write_all(&PANEL_VERSION.to_le_bytes())?;
        put_str(w, &self.symbol)?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.cols() as u64).to_le_bytes())?;
        for n in &self.names {
            put_str(w, n)?;
        }
        for t in &self.interval_start {
            w.write_all(&t.to_le_bytes())?;
        }
        for col in &self.columns {
            for v in col {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary_from(&mut BufReader::new(file))
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn read_binary_from<R: Read>(r: &mut R) -> std::result::Result<Self, String> {
        fn take<const N: usize, R: Read>(r: &mut R) -> std::result::Result<[u8; N], String> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf).map_err(|e| e.to_string())?;
            Ok(buf)
        }
        fn take_str<R: Read>(r: &mut R) -> std::result::Result<String, String> {
            let len = u32::from_le_bytes(take::<4, R>(r)?) as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(|e| e.to_string())?;
            String::from_utf8(buf).map_err(|e| e.to_string())
        }
        if &take::<8, R>(r)? != PANEL_MAGIC {
            return Err("not a panel cache (bad magic)".into());
        }
        let version = u32::from_le_bytes(take::<4, R>(r)?);
        if version != PANEL_VERSION {
            return Err(format!("unsupported panel cache version {version}"));
        }
        let symbol = take_str(r)?;
        let rows = u64::from_le_bytes(take::<8, R>(r)?) as usize;
        let cols = u64::from_le_bytes(take::<8, R>(r)?) as usize;
        let names = (0..cols).map(|_| take_str(r)).collect::<std::result::Result<Vec<_>, _>>()?;
        let mut starts = Vec::with_capacity(rows);
        for _ in 0..rows {
            starts.push(i64::from_le_bytes(take::<8, R>(r)?));
        }
        let mut columns = Vec::with_capacity(cols);
        for _ in 0..cols {
            let mut col = Vec::with_capacity(rows);
            for _ in 0..rows {
                col.push(f64::from_le_bytes(take::<8, R>(r)?));
            }
            columns.push(col);
        }
        MeasurePanel::from_columns(symbol, starts, names, columns).map_err(|e| e.to_string())
    }
}
