//! Read-only matrix sources with access accounting.
//!
//! Every sketcher reads its input through [`MatrixSource::extract`], which
//! records the distinct rows and columns whose entries were materialized.
//! Whole-matrix reads (quadratic baselines, exact error evaluation) set the
//! `all` flag instead. The logs are what the linear-access checks assert on.

use std::collections::BTreeSet;
use std::fmt::Debug;
use std::sync::{Arc, Mutex};

use ndarray::{Array2, ArrayViewMut2};

use super::{DenseMat, Select, SparseMat};
use crate::error::Result;
use crate::rng;

/// Entry-on-demand matrix that is never materialized as a whole.
pub trait EntryGenerator: Debug + Send + Sync {
    fn shape(&self) -> (usize, usize);

    /// Writes `A[rows, cols]` into `out` (shape `rows.len() x cols.len()`).
    fn fill_block(&self, rows: &[usize], cols: &[usize], out: ArrayViewMut2<f64>);
}

/// `A = L Rᵀ + σ N` with `N` standard normal, evaluated entry by entry.
///
/// The noise at `(i, j)` depends only on `(seed, i, j)`, so any two reads of
/// the same entry agree.
#[derive(Clone, Debug)]
pub struct LowRankGenerator {
    pub left: Array2<f64>,
    pub right: Array2<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl EntryGenerator for LowRankGenerator {
    fn shape(&self) -> (usize, usize) {
        (self.left.nrows(), self.right.nrows())
    }

    fn fill_block(&self, rows: &[usize], cols: &[usize], mut out: ArrayViewMut2<f64>) {
        let l = self.left.select(ndarray::Axis(0), rows);
        let r = self.right.select(ndarray::Axis(0), cols);
        out.assign(&l.dot(&r.t()));
        if self.sigma != 0.0 {
            for (a, &i) in rows.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    out[[a, b]] += self.sigma * rng::entry_normal(self.seed, i, j);
                }
            }
        }
    }
}

#[derive(Debug)]
pub enum Backing {
    Dense(DenseMat),
    Sparse(SparseMat),
    Generator(Box<dyn EntryGenerator>),
}

impl Backing {
    fn shape(&self) -> (usize, usize) {
        match self {
            Backing::Dense(d) => d.shape(),
            Backing::Sparse(s) => s.shape(),
            Backing::Generator(g) => g.shape(),
        }
    }

    fn fill_block(&self, rows: &[usize], cols: &[usize], mut out: ArrayViewMut2<f64>) {
        match self {
            Backing::Dense(d) => {
                let a = d.view();
                for (r, &i) in rows.iter().enumerate() {
                    let src = a.row(i);
                    let mut dst = out.row_mut(r);
                    for (c, &j) in cols.iter().enumerate() {
                        dst[c] = src[j];
                    }
                }
            }
            Backing::Sparse(s) => s.fill_block(rows, cols, out),
            Backing::Generator(g) => g.fill_block(rows, cols, out),
        }
    }
}

/// Distinct rows and columns read so far.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessLog {
    pub rows: BTreeSet<usize>,
    pub cols: BTreeSet<usize>,
    pub all: bool,
}

impl AccessLog {
    pub fn rows_touched(&self) -> usize {
        self.rows.len()
    }

    pub fn cols_touched(&self) -> usize {
        self.cols.len()
    }

    /// Upper bound on the number of entries materialized, given the source
    /// shape: every logged row is `n` entries, every logged column `m`.
    pub fn entries_bound(&self, m: usize, n: usize) -> usize {
        if self.all {
            m * n
        } else {
            self.rows.len() * n + self.cols.len() * m
        }
    }
}

/// A read-only `m x n` matrix that logs which rows and columns are read.
///
/// Cloning via [`MatrixSource::fresh`] shares the backing data but starts a
/// new, empty log.
#[derive(Debug)]
pub struct MatrixSource {
    backing: Arc<Backing>,
    log: Mutex<AccessLog>,
}

impl MatrixSource {
    pub fn new(backing: Backing) -> Self {
        Self {
            backing: Arc::new(backing),
            log: Mutex::new(AccessLog::default()),
        }
    }

    pub fn dense(m: DenseMat) -> Self {
        Self::new(Backing::Dense(m))
    }

    pub fn sparse(m: SparseMat) -> Self {
        Self::new(Backing::Sparse(m))
    }

    pub fn generator(g: impl EntryGenerator + 'static) -> Self {
        Self::new(Backing::Generator(Box::new(g)))
    }

    pub fn fresh(&self) -> Self {
        Self {
            backing: Arc::clone(&self.backing),
            log: Mutex::new(AccessLog::default()),
        }
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn shape(&self) -> (usize, usize) {
        self.backing.shape()
    }

    pub fn rows(&self) -> usize {
        self.shape().0
    }

    pub fn cols(&self) -> usize {
        self.shape().1
    }

    /// Dense copy of `A[rows, cols]` in the order given.
    ///
    /// A selected row set is logged as row accesses and a selected column
    /// set as column accesses; selecting everything on both axes sets the
    /// `all` flag.
    pub fn extract(&self, rows: Select<'_>, cols: Select<'_>) -> Result<DenseMat> {
        let (m, n) = self.shape();
        let row_ids = rows.resolve(m)?;
        let col_ids = cols.resolve(n)?;
        {
            let mut log = self.log.lock().expect("access log poisoned");
            match (rows, cols) {
                (Select::All, Select::All) => log.all = true,
                _ => {
                    if let Select::Only(r) = rows {
                        log.rows.extend(r.iter());
                    }
                    if let Select::Only(c) = cols {
                        log.cols.extend(c.iter());
                    }
                }
            }
        }
        let mut out = Array2::zeros((row_ids.len(), col_ids.len()));
        self.backing.fill_block(&row_ids, &col_ids, out.view_mut());
        DenseMat::from_array(out)
    }

    /// The whole matrix. Sets the `all` flag.
    pub fn read_full(&self) -> DenseMat {
        self.extract(Select::All, Select::All)
            .expect("full selection is always in range")
    }

    /// Columns `j0..j1` over all rows, for evaluation passes. Sets the `all`
    /// flag rather than logging columns individually.
    pub(crate) fn evaluation_block(&self, j0: usize, j1: usize) -> Array2<f64> {
        self.log.lock().expect("access log poisoned").all = true;
        let rows: Vec<usize> = (0..self.rows()).collect();
        let cols: Vec<usize> = (j0..j1).collect();
        let mut out = Array2::zeros((rows.len(), cols.len()));
        self.backing.fill_block(&rows, &cols, out.view_mut());
        out
    }

    pub fn access(&self) -> AccessLog {
        self.log.lock().expect("access log poisoned").clone()
    }

    pub fn reset_access(&self) {
        *self.log.lock().expect("access log poisoned") = AccessLog::default();
    }
}
