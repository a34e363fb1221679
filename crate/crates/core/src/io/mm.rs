use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::LoadedMatrix;
use crate::error::{Error, Result};
use crate::matcore::{DenseMat, SparseMat};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Lines<R> {
    inner: R,
    buf: String,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is neither blank nor a comment.
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let t = self.buf.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.line, t.to_string())));
        }
    }
}

/// Reads a Matrix Market file. Coordinate files become sparse, array files
/// dense. Symmetric and skew-symmetric storage is expanded; repeated
/// coordinates are summed.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let fail = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = Lines {
        inner: BufReader::new(File::open(path)?),
        buf: String::new(),
        line: 0,
    };

    lines.buf.clear();
    lines.inner.read_line(&mut lines.buf)?;
    lines.line = 1;
    let header: Vec<String> = lines.buf.split_whitespace().map(str::to_ascii_lowercase).collect();
    if header.len() != 5 || header[0] != "%%matrixmarket" || header[1] != "matrix" {
        return Err(fail(
            1,
            "expected `%%MatrixMarket matrix <format> <field> <symmetry>`".into(),
        ));
    }
    let layout = match header[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(fail(1, format!("unsupported format `{other}`"))),
    };
    let field = match header[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(fail(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match header[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(fail(1, format!("unsupported symmetry `{other}`"))),
    };

    let (size_line, size) = lines
        .next_data()?
        .ok_or_else(|| fail(lines.line, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| fail(size_line, format!("bad size `{t}`")))
        })
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(fail(
            size_line,
            format!("expected {want} size fields, found {}", dims.len()),
        ));
    }
    let (m, n) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && m != n {
        return Err(fail(size_line, "symmetric storage requires a square matrix".into()));
    }

    let value = |line: usize, tok: Option<&str>| -> Result<f64> {
        let tok = tok.ok_or_else(|| fail(line, "missing value".into()))?;
        let v = match field {
            Field::Integer => tok
                .parse::<i64>()
                .map(|v| v as f64)
                .map_err(|_| fail(line, format!("bad integer `{tok}`")))?,
            _ => tok
                .parse::<f64>()
                .map_err(|_| fail(line, format!("bad real `{tok}`")))?,
        };
        if !v.is_finite() {
            return Err(fail(line, format!("non-finite value `{tok}`")));
        }
        Ok(v)
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            let mut seen = 0;
            while let Some((line, text)) = lines.next_data()? {
                seen += 1;
                if seen > nnz {
                    return Err(fail(line, format!("more than the declared {nnz} entries")));
                }
                let mut toks = text.split_whitespace();
                let mut index = |what: &str, bound: usize| -> Result<usize> {
                    let tok = toks.next().ok_or_else(|| fail(line, format!("missing {what} index")))?;
                    let i: usize = tok
                        .parse()
                        .map_err(|_| fail(line, format!("bad {what} index `{tok}`")))?;
                    if i == 0 || i > bound {
                        return Err(fail(line, format!("{what} index {i} outside 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let i = index("row", m)?;
                let j = index("column", n)?;
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    value(line, toks.next())?
                };
                if toks.next().is_some() {
                    return Err(fail(line, "trailing fields".into()));
                }
                match symmetry {
                    Symmetry::General => *acc.entry((i, j)).or_default() += v,
                    Symmetry::Symmetric => {
                        *acc.entry((i, j)).or_default() += v;
                        if i != j {
                            *acc.entry((j, i)).or_default() += v;
                        }
                    }
                    Symmetry::Skew => {
                        if i == j {
                            return Err(fail(line, "skew-symmetric matrix with a diagonal entry".into()));
                        }
                        *acc.entry((i, j)).or_default() += v;
                        *acc.entry((j, i)).or_default() -= v;
                    }
                }
            }
            if seen != nnz {
                return Err(fail(lines.line, format!("declared {nnz} entries, found {seen}")));
            }
            let triplets = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
            Ok(LoadedMatrix::Sparse(SparseMat::from_triplets(m, n, triplets)?))
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            let mut cells = Vec::with_capacity(m * n);
            for j in 0..n {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..m {
                    cells.push((i, j));
                }
            }
            let mut data = vec![0.0; m * n];
            let mut next = cells.into_iter();
            while let Some((line, text)) = lines.next_data()? {
                for tok in text.split_whitespace() {
                    let (i, j) = next
                        .next()
                        .ok_or_else(|| fail(line, "more values than the matrix holds".into()))?;
                    let v = value(line, Some(tok))?;
                    data[i * n + j] = v;
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => data[j * n + i] = v,
                        Symmetry::Skew => data[j * n + i] = -v,
                    }
                }
            }
            if next.next().is_some() {
                return Err(fail(lines.line, "fewer values than the matrix holds".into()));
            }
            Ok(LoadedMatrix::Dense(DenseMat::from_row_major(m, n, data)?))
        }
    }
}

/// Writes sparse matrices as `coordinate real general` and dense ones as
/// `array real general`, with shortest round-trip decimal values.
pub fn write_matrix_market(path: impl AsRef<Path>, matrix: &LoadedMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match matrix {
        LoadedMatrix::Sparse(s) => {
            writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(out, "{} {} {}", s.rows(), s.cols(), s.nnz())?;
            for &(i, j, v) in s.entries() {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        LoadedMatrix::Dense(d) => {
            writeln!(out, "%%MatrixMarket matrix array real general")?;
            writeln!(out, "{} {}", d.rows(), d.cols())?;
            for j in 0..d.cols() {
                for i in 0..d.rows() {
                    writeln!(out, "{:e}", d.get(i, j))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}
