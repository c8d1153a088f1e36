//! Flat `key = value` circuit description. Blank lines and `#` comments are
//! ignored; omitted keys keep their [`CircuitParams::default`] values.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{CircuitParams, MatchingTopology};
use crate::error::{Error, Result};

pub fn read_config<R: Read>(reader: R, source: &str) -> Result<CircuitParams> {
    let mut c = CircuitParams::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let parse_err = |message: String| Error::Parse {
            file: source.to_string(),
            line: lineno,
            message,
        };
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key = value, got {text:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "topology" {
            c.topology = match value {
                "series_first" => MatchingTopology::SeriesFirst,
                "shunt_first" => MatchingTopology::ShuntFirst,
                _ => return Err(parse_err(format!("unknown topology {value:?}"))),
            };
            continue;
        }
        let v: f64 = value
            .parse()
            .map_err(|_| parse_err(format!("{key}: not a number: {value:?}")))?;
        match key {
            "r_ant_ohm" => c.r_ant = v,
            "c1_f" => c.c1 = v,
            "l1_h" => c.l1 = v,
            "is_a" => c.diode.i_s = v,
            "n" => c.diode.n = v,
            "vt_v" => c.diode.v_t = v,
            "c2_f" => c.c2 = v,
            "rload_ohm" => c.r_load = v,
            "freq_scale" => c.freq_scale = v,
            "breakdown_v" => c.breakdown_v = v,
            _ => return Err(parse_err(format!("unknown key {key:?}"))),
        }
    }
    c.validate().map_err(|e| Error::Parse {
        file: source.to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<CircuitParams> {
    read_config(fs::File::open(path)?, &path.display().to_string())
}

pub fn write_config<W: Write>(c: &CircuitParams, mut out: W) -> Result<()> {
    let topology = match c.topology {
        MatchingTopology::SeriesFirst => "series_first",
        MatchingTopology::ShuntFirst => "shunt_first",
    };
    writeln!(out, "r_ant_ohm = {:e}", c.r_ant)?;
    writeln!(out, "c1_f = {:e}", c.c1)?;
    writeln!(out, "l1_h = {:e}", c.l1)?;
    writeln!(out, "is_a = {:e}", c.diode.i_s)?;
    writeln!(out, "n = {}", c.diode.n)?;
    writeln!(out, "vt_v = {}", c.diode.v_t)?;
    writeln!(out, "c2_f = {:e}", c.c2)?;
    writeln!(out, "rload_ohm = {:e}", c.r_load)?;
    writeln!(out, "freq_scale = {}", c.freq_scale)?;
    writeln!(out, "topology = {topology}")?;
    writeln!(out, "breakdown_v = {}", c.breakdown_v)?;
    Ok(())
}
