use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matcore::DenseMat;

/// Reads `rows: u64 LE`, `cols: u64 LE`, then `rows * cols` little-endian
/// `f64` values in row-major order.
pub fn read_dense_binary(path: impl AsRef<Path>) -> Result<DenseMat> {
    let path = path.as_ref();
    let fail = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    let mut r = BufReader::new(File::open(path)?);
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(|_| fail("truncated header".into()))?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(|_| fail("truncated header".into()))?;
    let cols = u64::from_le_bytes(word) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| fail(format!("{rows}x{cols} overflows")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(fail(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseMat::from_row_major(rows, cols, values)
}

pub fn write_dense_binary(path: impl AsRef<Path>, m: &DenseMat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
