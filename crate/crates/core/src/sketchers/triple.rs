use ndarray::Axis;

use crate::error::{Error, Result};
use crate::matcore::{DenseMat, IndexSet, MatrixSource, Select};

/// Sampled columns `C = A[:, cols]`, rows `R = A[rows, :]` and their
/// intersection `W = A[rows, cols]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTriple {
    pub c: DenseMat,
    pub r: DenseMat,
    pub w: DenseMat,
    pub row_idx: IndexSet,
    pub col_idx: IndexSet,
}

impl SampledTriple {
    /// Reads the sampled rows and columns from `source`. `W` is cut out of
    /// `C`, so it agrees bit for bit with both `C` and `R`.
    pub fn sample(source: &MatrixSource, rows: &IndexSet, cols: &IndexSet) -> Result<Self> {
        let c = source.extract(Select::All, Select::Only(cols))?;
        let r = source.extract(Select::Only(rows), Select::All)?;
        let w = DenseMat::from_array(c.as_array().select(Axis(0), rows.as_slice()))?;
        Ok(Self {
            c,
            r,
            w,
            row_idx: rows.clone(),
            col_idx: cols.clone(),
        })
    }

    /// Shape of the matrix the triple was drawn from.
    pub fn source_shape(&self) -> (usize, usize) {
        (self.c.rows(), self.r.cols())
    }

    pub(crate) fn check(&self) -> Result<()> {
        let (kr, kc) = (self.row_idx.len(), self.col_idx.len());
        if self.c.cols() != kc || self.r.rows() != kr || self.w.shape() != (kr, kc) {
            return Err(Error::dims(format!(
                "triple with {kr} rows and {kc} columns has C {:?}, R {:?}, W {:?}",
                self.c.shape(),
                self.r.shape(),
                self.w.shape()
            )));
        }
        if self.row_idx.domain_size() != self.c.rows() || self.col_idx.domain_size() != self.r.cols() {
            return Err(Error::dims("index domains do not match C and R"));
        }
        Ok(())
    }
}
