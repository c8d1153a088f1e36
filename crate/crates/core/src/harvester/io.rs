use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harvester::{FitDataset, LogPolyFitModel};
use crate::units::dbm_to_watts;

#[derive(Clone, Copy)]
enum PowerUnit {
    Dbm,
    Watt,
}

/// Reads `prf_dbm,pdc_dbm` or `prf_w,pdc_w` CSV. `source` is used in error
/// messages only.
pub fn read_fit_dataset<R: Read>(reader: R, source: &str) -> Result<FitDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: usize, message: String| Error::Parse {
        file: source.to_string(),
        line,
        message,
    };
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let unit = match cols.as_slice() {
        ["prf_dbm", "pdc_dbm"] => PowerUnit::Dbm,
        ["prf_w", "pdc_w"] => PowerUnit::Watt,
        _ => {
            return Err(parse_err(
                1,
                format!("expected header `prf_dbm,pdc_dbm` or `prf_w,pdc_w`, got `{}`", cols.join(",")),
            ))
        }
    };
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", record.len())));
        }
        let mut vals = [0.0; 2];
        for (v, field) in vals.iter_mut().zip(record.iter()) {
            *v = field
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("`{field}`: {e}")))?;
        }
        let (p_rf, p_dc) = match unit {
            PowerUnit::Dbm => (dbm_to_watts(vals[0]), dbm_to_watts(vals[1])),
            PowerUnit::Watt => (vals[0], vals[1]),
        };
        if !(p_rf > 0.0 && p_dc > 0.0) {
            return Err(parse_err(line, "powers must be strictly positive".into()));
        }
        points.push((p_rf, p_dc));
    }
    FitDataset::new(points)
}

pub fn load_fit_dataset(path: &Path) -> Result<FitDataset> {
    let file = std::fs::File::open(path)?;
    read_fit_dataset(file, &path.display().to_string())
}

pub fn write_model<W: Write>(model: &LogPolyFitModel, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, model)?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<LogPolyFitModel> {
    let model: LogPolyFitModel = serde_json::from_reader(reader)?;
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<LogPolyFitModel> {
    read_model(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_and_watt_headers() {
        let d = read_fit_dataset("prf_dbm,pdc_dbm\n-20,-30\n-10,-15\n".as_bytes(), "t").unwrap();
        assert!((d.points()[0].0 - 1e-5).abs() < 1e-18);
        assert!((d.points()[0].1 - 1e-6).abs() < 1e-19);
        let w = read_fit_dataset("prf_w,pdc_w\n1e-5,1e-6\n".as_bytes(), "t").unwrap();
        assert_eq!(w.points(), &[(1e-5, 1e-6)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_fit_dataset("prf_w,pdc_w\n1e-5,1e-6\n2e-5,abc\n".as_bytes(), "data.csv").unwrap_err();
        match err {
            Error::Parse { line, file, .. } => {
                assert_eq!(line, 3);
                assert_eq!(file, "data.csv");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_fit_dataset("x,y\n1,2\n".as_bytes(), "t").is_err());
        assert!(read_fit_dataset("prf_w,pdc_w\n0,1e-6\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn model_json_fields() {
        let m = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3e-4))
            .unwrap()
            .with_sensitivity(3e-7)
            .unwrap();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["degree", "a", "b", "c", "valid_range_w", "p_rf_min_w"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }
}
