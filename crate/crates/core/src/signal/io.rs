//! Signal file formats.
//!
//! CSV: header `t_s,y`, one sample per row.
//! Binary: `sample_rate: f64`, `count: u64`, then `count` × `f64`, all
//! little-endian.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

pub fn write_csv<W: Write>(sig: &SampledSignal, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_s", "y"])?;
    for (i, y) in sig.samples.iter().enumerate() {
        let t = i as f64 / sig.sample_rate;
        w.write_record([t.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t_s,y` CSV; the sample rate is recovered from the first two
/// timestamps.
pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<SampledSignal> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let err = |line: usize, message: String| Error::Parse {
        file: source.to_string(),
        line,
        message,
    };
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["t_s", "y"] {
        return Err(err(1, "expected header `t_s,y`".into()));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| s.parse::<f64>().map_err(|e| err(line, format!("`{s}`: {e}")));
        if rec.len() != 2 {
            return Err(err(line, format!("expected 2 fields, got {}", rec.len())));
        }
        times.push(parse(&rec[0])?);
        samples.push(parse(&rec[1])?);
    }
    if times.len() < 2 || times[1] <= times[0] {
        return Err(err(2, "need at least two increasing timestamps".into()));
    }
    SampledSignal::new(1.0 / (times[1] - times[0]), samples)
}

pub fn write_binary<W: Write>(sig: &SampledSignal, mut writer: W) -> Result<()> {
    writer.write_all(&sig.sample_rate.to_le_bytes())?;
    writer.write_all(&(sig.samples.len() as u64).to_le_bytes())?;
    for y in &sig.samples {
        writer.write_all(&y.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(reader: R) -> Result<SampledSignal> {
    let mut r = BufReader::new(reader);
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let sample_rate = f64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word) as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 28));
    for _ in 0..count {
        r.read_exact(&mut word)?;
        samples.push(f64::from_le_bytes(word));
    }
    if !r.fill_buf()?.is_empty() {
        return Err(Error::SignalTooShort(
            "binary signal has trailing bytes after the declared sample count".into(),
        ));
    }
    SampledSignal::new(sample_rate, samples)
}
