use ndarray::{Array2, ArrayViewMut2};

use crate::error::{Error, Result};

/// Sparse matrix stored as `(row, col, value)` triplets sorted by `(col, row)`.
///
/// Column and row offsets are precomputed so that both column and row
/// extraction cost time proportional to the entries touched.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    col_ptr: Vec<usize>,
    // Positions into `entries`, grouped by row (each group in column order).
    row_order: Vec<usize>,
    row_ptr: Vec<usize>,
}

impl SparseMat {
    /// Builds from triplets in any order. Duplicate `(row, col)` pairs and
    /// out-of-range indices are rejected; explicit zeros are kept.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, v) in &entries {
            if i >= rows {
                return Err(Error::IndexOutOfRange { index: i, domain: rows });
            }
            if j >= cols {
                return Err(Error::IndexOutOfRange { index: j, domain: cols });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (j, i));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid(format!(
                "duplicate sparse entry ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_ptr = vec![0usize; rows + 1];
        for &(i, j, _) in &entries {
            col_ptr[j + 1] += 1;
            row_ptr[i + 1] += 1;
        }
        for p in 0..cols {
            col_ptr[p + 1] += col_ptr[p];
        }
        for p in 0..rows {
            row_ptr[p + 1] += row_ptr[p];
        }
        let mut next = row_ptr.clone();
        let mut row_order = vec![0usize; entries.len()];
        // Entries are column-major, so each row group fills in column order.
        for (pos, &(i, _, _)) in entries.iter().enumerate() {
            row_order[next[i]] = pos;
            next[i] += 1;
        }

        Ok(Self {
            rows,
            cols,
            entries,
            col_ptr,
            row_order,
            row_ptr,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
    }

    pub fn column(&self, j: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.row_order[self.row_ptr[i]..self.row_ptr[i + 1]]
            .iter()
            .map(|&p| self.entries[p])
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for &(i, j, v) in &self.entries {
            out[[i, j]] = v;
        }
        out
    }

    /// Writes `A[rows, cols]` into `out`, iterating over whichever axis
    /// selection is smaller.
    pub(crate) fn fill_block(&self, rows: &[usize], cols: &[usize], mut out: ArrayViewMut2<f64>) {
        out.fill(0.0);
        if cols.len() <= rows.len() {
            let mut pos = vec![usize::MAX; self.rows];
            for (a, &i) in rows.iter().enumerate() {
                pos[i] = a;
            }
            for (b, &j) in cols.iter().enumerate() {
                for &(i, _, v) in self.column(j) {
                    if pos[i] != usize::MAX {
                        out[[pos[i], b]] = v;
                    }
                }
            }
        } else {
            let mut pos = vec![usize::MAX; self.cols];
            for (b, &j) in cols.iter().enumerate() {
                pos[j] = b;
            }
            for (a, &i) in rows.iter().enumerate() {
                for (_, j, v) in self.row(i) {
                    if pos[j] != usize::MAX {
                        out[[a, pos[j]]] = v;
                    }
                }
            }
        }
    }
}
