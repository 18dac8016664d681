//! Per-iteration trace records and their CSV serialization.
//!
//! The CSV layout is the external contract: the header is exactly
//! `iter,epoch,eta,theta,f_value,m_norm,dual_step_norm,cert_residual,stationarity_proxy,wall_ns`
//! and floats are written with 17 significant digits in scientific
//! notation (round-trip exact for f64), locale-independent. Reruns of the
//! same seeded configuration produce byte-identical files except for the
//! wall_ns column.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "iter,epoch,eta,theta,f_value,m_norm,dual_step_norm,cert_residual,stationarity_proxy,wall_ns";

/// One row per iteration (or per configured stride).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub epoch: u64,
    pub eta: f64,
    pub theta: f64,
    pub f_value: f64,
    pub m_norm: f64,
    pub dual_step_norm: f64,
    pub cert_residual: f64,
    pub stationarity_proxy: f64,
    pub wall_ns: u128,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl TraceRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.epoch,
            fmt_float(self.eta),
            fmt_float(self.theta),
            fmt_float(self.f_value),
            fmt_float(self.m_norm),
            fmt_float(self.dual_step_norm),
            fmt_float(self.cert_residual),
            fmt_float(self.stationarity_proxy),
            self.wall_ns
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::TraceParse(format!(
                "expected 10 fields, found {}: {line:?}",
                fields.len()
            )));
        }
        let parse_u64 = |s: &str, name: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::TraceParse(format!("{name}: {e}")))
        };
        let parse_f64 = |s: &str, name: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::TraceParse(format!("{name}: {e}")))
        };
        Ok(TraceRecord {
            iter: parse_u64(fields[0], "iter")?,
            epoch: parse_u64(fields[1], "epoch")?,
            eta: parse_f64(fields[2], "eta")?,
            theta: parse_f64(fields[3], "theta")?,
            f_value: parse_f64(fields[4], "f_value")?,
            m_norm: parse_f64(fields[5], "m_norm")?,
            dual_step_norm: parse_f64(fields[6], "dual_step_norm")?,
            cert_residual: parse_f64(fields[7], "cert_residual")?,
            stationarity_proxy: parse_f64(fields[8], "stationarity_proxy")?,
            wall_ns: fields[9]
                .parse::<u128>()
                .map_err(|e| Error::TraceParse(format!("wall_ns: {e}")))?,
        })
    }
}

/// Destination for trace records during a run.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()>;
    fn flush(&mut self) -> Result<()>;
}

/// In-memory sink.
#[derive(Default)]
pub struct VecSink {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for VecSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.records.push(*rec);
        Ok(())
    }
    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Append-only CSV file sink, flushed every `FLUSH_EVERY` records so an
/// aborted run still leaves a usable partial trace.
pub struct CsvSink {
    writer: BufWriter<File>,
    pending: usize,
}

const FLUSH_EVERY: usize = 100;

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{TRACE_HEADER}")?;
        Ok(CsvSink { writer, pending: 0 })
    }
}

impl TraceSink for CsvSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        writeln!(self.writer, "{}", rec.to_csv_line())?;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.writer.flush()?;
            self.pending = 0;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Fan-out sink: records to both, used to keep an in-memory copy while
/// streaming to disk.
pub struct TeeSink<'a> {
    pub first: &'a mut dyn TraceSink,
    pub second: &'a mut dyn TraceSink,
}

impl TraceSink for TeeSink<'_> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.first.record(rec)?;
        self.second.record(rec)
    }
    fn flush(&mut self) -> Result<()> {
        self.first.flush()?;
        self.second.flush()
    }
}

/// Read a full trace file, validating the header.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::TraceParse("empty trace file".into()))??;
    if header != TRACE_HEADER {
        return Err(Error::TraceParse(format!(
            "unexpected header: {header:?}"
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        records.push(TraceRecord::from_csv_line(&line)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(iter: u64) -> TraceRecord {
        TraceRecord {
            iter,
            epoch: iter / 10,
            eta: 0.1,
            theta: 0.05,
            f_value: 1.0 / (iter as f64 + 1.0),
            m_norm: 0.25,
            dual_step_norm: 1e-3,
            cert_residual: 1e-15,
            stationarity_proxy: 0.125,
            wall_ns: 123456789,
        }
    }

    #[test]
    fn csv_line_round_trip_is_exact() {
        let rec = TraceRecord {
            f_value: std::f64::consts::PI * 1e-7,
            eta: 0.1 + 1e-17,
            ..sample(3)
        };
        let back = TraceRecord::from_csv_line(&rec.to_csv_line()).unwrap();
        assert_eq!(rec, back);
        assert_eq!(rec.f_value.to_bits(), back.f_value.to_bits());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut sink = CsvSink::create(&path).unwrap();
        let recs: Vec<TraceRecord> = (0..250).map(sample).collect();
        for r in &recs {
            sink.record(r).unwrap();
        }
        sink.flush().unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(recs, back);
    }

    #[test]
    fn header_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "iter,hello\n").unwrap();
        assert!(read_trace(&path).is_err());
    }
}
