use ndarray::{s, Array1, Array2, Axis};

use super::{FrobNorm, MatrixSource};
use crate::error::{Error, Result};

/// Column block width used when streaming an exact error evaluation.
pub const ERROR_BLOCK_COLS: usize = 256;

/// Low-rank factorization `A ≈ U diag(s) Vᵀ`.
///
/// Components are kept in descending order of `s`. When `orthonormal` is
/// set, `U` and `V` have orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    u: Array2<f64>,
    s: Array1<f64>,
    v: Array2<f64>,
    orthonormal: bool,
}

impl Sketch {
    /// Validates shapes and signs, then sorts components by descending `s`
    /// (stable, so equal values keep their order).
    pub fn new(u: Array2<f64>, s: Array1<f64>, v: Array2<f64>, orthonormal: bool) -> Result<Self> {
        let r = s.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(Error::dims(format!(
                "factor ranks disagree: U has {}, S has {r}, V has {}",
                u.ncols(),
                v.ncols()
            )));
        }
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::invalid(format!(
                "singular value {bad} is not finite and nonnegative"
            )));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("sketch factor has non-finite entries"));
        }
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Ok(Self { u, s, v, orthonormal });
        }
        Ok(Self {
            u: u.select(Axis(1), &order),
            s: order.iter().map(|&i| s[i]).collect(),
            v: v.select(Axis(1), &order),
            orthonormal,
        })
    }

    /// The rank-0 sketch of an `m x n` matrix.
    pub fn zero(m: usize, n: usize) -> Self {
        Self {
            u: Array2::zeros((m, 0)),
            s: Array1::zeros(0),
            v: Array2::zeros((n, 0)),
            orthonormal: true,
        }
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn s(&self) -> &Array1<f64> {
        &self.s
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.nrows())
    }

    /// `U diag(s)`.
    pub fn us(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (mut c, &sv) in us.columns_mut().into_iter().zip(self.s.iter()) {
            c *= sv;
        }
        us
    }

    /// Rows `i0..i1` of the reconstruction against columns `j0..j1`.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Array2<f64> {
        let mut us = self.u.slice(s![rows, ..]).to_owned();
        for (mut c, &sv) in us.columns_mut().into_iter().zip(self.s.iter()) {
            c *= sv;
        }
        us.dot(&self.v.slice(s![cols, ..]).t())
    }

    /// Dense `U diag(s) Vᵀ`. Quadratic in size; for tests and small inputs.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.us().dot(&self.v.t())
    }

    /// Keeps the first `r` components.
    pub fn truncated(&self, r: usize) -> Self {
        let r = r.min(self.rank());
        Self {
            u: self.u.slice(s![.., ..r]).to_owned(),
            s: self.s.slice(s![..r]).to_owned(),
            v: self.v.slice(s![.., ..r]).to_owned(),
            orthonormal: self.orthonormal,
        }
    }
}

/// `‖A − U S Vᵀ‖_F / ‖A‖_F`, streamed over column blocks of
/// [`ERROR_BLOCK_COLS`] so the reconstruction is never held in full.
///
/// This reads every entry of `A` and therefore sets the source's `all` flag.
pub fn relative_error(source: &MatrixSource, sk: &Sketch) -> Result<f64> {
    let (m, n) = source.shape();
    if sk.shape() != (m, n) {
        return Err(Error::dims(format!("sketch is {:?}, source is {m}x{n}", sk.shape())));
    }
    let us = sk.us();
    let mut resid = 0.0;
    let mut total = 0.0;
    let mut j0 = 0;
    while j0 < n {
        let j1 = (j0 + ERROR_BLOCK_COLS).min(n);
        let a = source.evaluation_block(j0, j1);
        let approx = us.dot(&sk.v.slice(s![j0..j1, ..]).t());
        total += a.iter().map(|x| x * x).sum::<f64>();
        resid += (&a - &approx).frob_norm().powi(2);
        j0 = j1;
    }
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((resid / total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{thin_svd, DenseMat};
    use ndarray::array;

    #[test]
    fn new_sorts_and_validates() {
        let sk = Sketch::new(
            array![[1.0, 0.0], [0.0, 1.0]],
            array![1.0, 3.0],
            array![[1.0, 0.0], [0.0, 1.0]],
            true,
        )
        .unwrap();
        assert_eq!(sk.s().to_vec(), vec![3.0, 1.0]);
        assert_eq!(sk.u().column(0).to_vec(), vec![0.0, 1.0]);
        assert!(Sketch::new(array![[1.0]], array![-1.0], array![[1.0]], false).is_err());
        assert!(Sketch::new(array![[1.0, 2.0]], array![1.0], array![[1.0]], false).is_err());
    }

    #[test]
    fn exact_and_zero_sketches() {
        let a = array![[1.0, 2.0, 0.5], [3.0, -4.0, 1.0]];
        let src = MatrixSource::dense(DenseMat::from_array(a.clone()).unwrap());
        let svd = thin_svd(a.view()).unwrap();
        let exact = Sketch::new(svd.u, svd.s, svd.v, true).unwrap();
        assert!(relative_error(&src, &exact).unwrap() < 1e-12);
        assert!(src.access().all);
        let zero = Sketch::zero(2, 3);
        assert!((relative_error(&src, &zero).unwrap() - 1.0).abs() < 1e-15);
        let zero_s = Sketch::new(array![[1.0], [0.0]], array![0.0], array![[1.0], [0.0], [0.0]], true).unwrap();
        assert!((relative_error(&src, &zero_s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_minus_top_triplet_is_zero() {
        let a = array![[1.0], [2.0], [3.0]].dot(&array![[4.0, -1.0, 0.5, 2.0]]);
        let svd = thin_svd(a.view()).unwrap();
        let top = Sketch::new(svd.u, svd.s, svd.v, true).unwrap().truncated(1);
        let src = MatrixSource::dense(DenseMat::from_array(a).unwrap());
        assert!(relative_error(&src, &top).unwrap() < 1e-10);
    }

    #[test]
    fn zero_matrix_has_undefined_relative_error() {
        let src = MatrixSource::dense(DenseMat::zeros(2, 2));
        assert!(matches!(
            relative_error(&src, &Sketch::zero(2, 2)),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn streaming_matches_dense_across_block_boundary() {
        let (m, n) = (3, ERROR_BLOCK_COLS + 7);
        let a = Array2::from_shape_fn((m, n), |(i, j)| ((i * 31 + j * 7) % 13) as f64 - 6.0);
        let src = MatrixSource::dense(DenseMat::from_array(a.clone()).unwrap());
        let svd = thin_svd(a.view()).unwrap();
        let sk = Sketch::new(svd.u, svd.s, svd.v, true).unwrap().truncated(1);
        let direct = (&a - &sk.reconstruct()).frob_norm() / a.frob_norm();
        assert!((relative_error(&src, &sk).unwrap() - direct).abs() < 1e-13);
    }
}
