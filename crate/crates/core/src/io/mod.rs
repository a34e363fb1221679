//! Matrix files, synthetic generators and the benchmark harness.

mod bench;
mod binary;
mod emit;
mod mm;
mod synth;
mod text;

pub use bench::{bench_run, k_for_rate, BenchRecord, DataKind, DataSource, DatasetSpec, Method, METHODS};
pub use binary::{read_dense_binary, write_dense_binary};
pub use emit::{emit, read_records_json, write_records, OutputFormat, CSV_HEADER};
pub use mm::{read_matrix_market, write_matrix_market};
pub use synth::Recipe;
pub use text::read_csv_matrix;

use std::path::Path;

use crate::error::{Error, Result};
use crate::matcore::{DenseMat, MatrixSource, SparseMat};

/// A matrix as it was stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedMatrix {
    Dense(DenseMat),
    Sparse(SparseMat),
}

impl LoadedMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            LoadedMatrix::Dense(d) => d.shape(),
            LoadedMatrix::Sparse(s) => s.shape(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, LoadedMatrix::Sparse(_))
    }

    pub fn to_dense(&self) -> DenseMat {
        match self {
            LoadedMatrix::Dense(d) => d.clone(),
            LoadedMatrix::Sparse(s) => DenseMat::from_array(s.to_dense()).expect("sparse entries are finite"),
        }
    }

    pub fn into_source(self) -> MatrixSource {
        match self {
            LoadedMatrix::Dense(d) => MatrixSource::dense(d),
            LoadedMatrix::Sparse(s) => MatrixSource::sparse(s),
        }
    }
}

/// Loads `.mtx`/`.mm` (Matrix Market), `.bin` (dense binary) or `.csv`.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "mtx" | "mm" => read_matrix_market(path),
        "bin" => read_dense_binary(path).map(LoadedMatrix::Dense),
        "csv" => read_csv_matrix(path).map(LoadedMatrix::Dense),
        _ => Err(Error::invalid(format!(
            "cannot infer matrix format of {} (expected .mtx, .mm, .bin or .csv)",
            path.display()
        ))),
    }
}
