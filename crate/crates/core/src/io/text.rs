use std::path::Path;

use crate::error::{Error, Result};
use crate::matcore::DenseMat;

/// Dense matrix from a headerless CSV of numbers, one matrix row per record.
pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<DenseMat> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .iter()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("bad number `{tok}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMat::from_rows(&rows).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        std::fs::write(f.path(), "1, 2.5\n# skipped\n-3,4e-2\n").unwrap();
        let m = read_csv_matrix(f.path()).unwrap();
        assert_eq!(m.values(), &[1.0, 2.5, -3.0, 0.04]);
        std::fs::write(f.path(), "1,2\n3,oops\n").unwrap();
        assert!(matches!(read_csv_matrix(f.path()), Err(Error::Parse { line: 2, .. })));
        std::fs::write(f.path(), "1,2\n3\n").unwrap();
        assert!(read_csv_matrix(f.path()).is_err());
    }
}
