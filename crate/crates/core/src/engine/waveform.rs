//! Column-oriented simulation output with CSV and binary encodings.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic    4 bytes  "OTWF"
//! version  u8       1
//! ncols    u32      number of columns including the axis
//! nrows    u64
//! names    ncols × (u16 byte length, UTF-8 bytes); axis first
//! data     ncols × nrows f64, column-major, axis first
//! ```

use std::io::{Read, Write};

use thiserror::Error;

pub const BINARY_MAGIC: &[u8; 4] = b"OTWF";
pub const BINARY_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("axis must be strictly monotone: {prev} then {next}")]
    NonMonotone { prev: f64, next: f64 },
    #[error("row has {got} values, expected {want}")]
    RowLength { got: usize, want: usize },
    #[error("bad waveform file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    axis_name: String,
    axis: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Waveform {
    pub fn new(axis_name: impl Into<String>, names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        Self { axis_name: axis_name.into(), axis: Vec::new(), names, columns }
    }

    /// Appends a row. The axis must keep moving in one direction.
    pub fn push_row(&mut self, x: f64, values: Vec<f64>) -> Result<(), WaveformError> {
        if values.len() != self.names.len() {
            return Err(WaveformError::RowLength { got: values.len(), want: self.names.len() });
        }
        let n = self.axis.len();
        if n >= 1 {
            let prev = self.axis[n - 1];
            let ok = if n >= 2 { (x - prev) * (prev - self.axis[n - 2]) > 0.0 } else { x != prev && !x.is_nan() };
            if !ok {
                return Err(WaveformError::NonMonotone { prev, next: x });
            }
        }
        self.axis.push(x);
        for (col, v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
        Ok(())
    }

    pub fn axis_name(&self) -> &str {
        &self.axis_name
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let key = name.to_ascii_lowercase();
        self.names.iter().position(|n| *n == key).map(|i| self.columns[i].as_slice())
    }

    /// Voltage column of a node (`v(name)`).
    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        self.column(&format!("v({node})"))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), WaveformError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(std::iter::once(self.axis_name.as_str()).chain(self.names.iter().map(String::as_str)))?;
        for i in 0..self.len() {
            let row = std::iter::once(self.axis[i]).chain(self.columns.iter().map(|c| c[i]));
            out.write_record(row.map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, WaveformError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let mut it = headers.iter();
        let axis_name = it.next().ok_or_else(|| WaveformError::Format("empty header".into()))?;
        let mut wf = Waveform::new(axis_name, it.map(String::from).collect());
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| WaveformError::Format(format!("bad number '{s}'"))))
                .collect::<Result<_, _>>()?;
            let (x, rest) = vals.split_first().ok_or_else(|| WaveformError::Format("empty row".into()))?;
            wf.push_row(*x, rest.to_vec())?;
        }
        Ok(wf)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), WaveformError> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&[BINARY_VERSION])?;
        let ncols =
            u32::try_from(self.names.len() + 1).map_err(|_| WaveformError::Format("too many columns".into()))?;
        w.write_all(&ncols.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for name in std::iter::once(&self.axis_name).chain(&self.names) {
            let len = u16::try_from(name.len()).map_err(|_| WaveformError::Format(format!("name too long: {name}")))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
        }
        for col in std::iter::once(&self.axis).chain(&self.columns) {
            for v in col {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, WaveformError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(WaveformError::Format("bad magic".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        if b1[0] != BINARY_VERSION {
            return Err(WaveformError::Format(format!("unsupported version {}", b1[0])));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let ncols = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let nrows = u64::from_le_bytes(b8) as usize;
        if ncols == 0 {
            return Err(WaveformError::Format("no axis column".into()));
        }
        let mut names = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2)?;
            let mut s = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut s)?;
            names.push(String::from_utf8(s).map_err(|_| WaveformError::Format("name not UTF-8".into()))?);
        }
        let mut cols = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let mut col = Vec::with_capacity(nrows);
            for _ in 0..nrows {
                r.read_exact(&mut b8)?;
                col.push(f64::from_le_bytes(b8));
            }
            cols.push(col);
        }
        let axis_name = names.remove(0);
        let axis = cols.remove(0);
        let mut wf = Waveform::new(axis_name, names);
        for (i, x) in axis.into_iter().enumerate() {
            wf.push_row(x, cols.iter().map(|c| c[i]).collect())?;
        }
        Ok(wf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Waveform {
        let mut wf = Waveform::new("time", vec!["v(a)".into(), "i(v1)".into()]);
        wf.push_row(0.0, vec![1.0, -1e-3]).unwrap();
        wf.push_row(1e-6, vec![0.1 + 0.2, 2.5e-300]).unwrap();
        wf
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let wf = sample();
        let bytes = wf.to_binary();
        assert_eq!(&bytes[..4], b"OTWF");
        assert_eq!(bytes[4], 1);
        assert_eq!(Waveform::read_binary(bytes.as_slice()).unwrap(), wf);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let wf = sample();
        let text = wf.to_csv_string();
        assert!(text.starts_with("time,v(a),i(v1)\n"));
        assert_eq!(Waveform::read_csv(text.as_bytes()).unwrap(), wf);
    }

    #[test]
    fn rejects_direction_change() {
        let mut wf = Waveform::new("v1", vec![]);
        wf.push_row(0.0, vec![]).unwrap();
        wf.push_row(1.0, vec![]).unwrap();
        assert!(wf.push_row(0.5, vec![]).is_err());
        let mut down = Waveform::new("v1", vec![]);
        down.push_row(1.0, vec![]).unwrap();
        down.push_row(0.0, vec![]).unwrap();
        assert!(down.push_row(0.0, vec![]).is_err());
    }
}
