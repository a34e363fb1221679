use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::BenchRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "rate",
    "k",
    "seed",
    "rel_error",
    "wall_time_ms",
    "rows_touched",
    "cols_touched",
    "all_access",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!(
                "unknown output format `{s}` (expected csv or json)"
            ))),
        }
    }
}

/// Reals with 17 significant digits; non-finite values become JSON `null`
/// and read back as NaN.
pub(crate) mod real17 {
    use serde::de::Deserializer;
    use serde::ser::{Error as _, Serializer};
    use serde::{Deserialize, Serialize};
    use serde_json::value::RawValue;

    pub fn format(v: f64) -> String {
        if v.is_finite() {
            format!("{v:.16e}")
        } else {
            "null".to_string()
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(format(*v))
            .map_err(S::Error::custom)?
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Writes `records` as CSV (header first) or as a JSON array.
pub fn write_records(records: &[BenchRecord], format: OutputFormat, out: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.write_record([
                    r.method.clone(),
                    real17::format(r.sampling_rate),
                    r.k.to_string(),
                    r.seed.to_string(),
                    real17::format(r.rel_error),
                    real17::format(r.wall_time_ms),
                    r.rows_touched.to_string(),
                    r.cols_touched.to_string(),
                    r.all_access.to_string(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            let mut ser = serde_json::Serializer::pretty(&mut out);
            records.serialize(&mut ser)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn emit(records: &[BenchRecord], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_records(records, format, f)
}

pub fn read_records_json(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(err: f64) -> BenchRecord {
        BenchRecord {
            method: "cabs-wkmeans".into(),
            sampling_rate: 0.1 + 0.2,
            k: 17,
            seed: u64::MAX,
            rel_error: err,
            wall_time_ms: 1.0 / 3.0,
            rows_touched: 34,
            cols_touched: 30,
            all_access: false,
        }
    }

    fn csv_text(records: &[BenchRecord]) -> String {
        let mut buf = Vec::new();
        write_records(records, OutputFormat::Csv, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_shapes() {
        let empty = csv_text(&[]);
        assert_eq!(
            empty,
            "method,rate,k,seed,rel_error,wall_time_ms,rows_touched,cols_touched,all_access\n"
        );
        let one = csv_text(&[record(0.25)]);
        let lines: Vec<&str> = one.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[8], "false");
    }

    #[test]
    fn json_round_trip() {
        let recs = vec![record(0.123_456_789_012_345_68), record(f64::NAN)];
        let f = tempfile::NamedTempFile::new().unwrap();
        emit(&recs, OutputFormat::Json, f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.contains("\"rate\""));
        assert!(text.contains("null"));
        let back = read_records_json(f.path()).unwrap();
        assert_eq!(back[0], recs[0]);
        assert!(back[1].rel_error.is_nan());
    }
}
