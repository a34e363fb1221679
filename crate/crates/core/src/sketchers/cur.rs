use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::matcore::{
    pinv_truncated, qr_thin, thin_svd, DenseMat, IndexSet, MatrixSource, RankSpec, Select, Sketch, DEFAULT_RANK_TOL,
};
use crate::rng;
use crate::samplers::uniform_indices;

/// Target-to-base sampling ratio used by [`sketch_cur`] in benchmarks.
pub const SKETCH_CUR_MULTIPLIER: usize = 3;

/// `A ≈ C · U_mid · R`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurFactors {
    pub c: DenseMat,
    pub u_mid: Array2<f64>,
    pub r: DenseMat,
}

impl CurFactors {
    pub fn reconstruct(&self) -> Array2<f64> {
        self.c.view().dot(&self.u_mid).dot(&self.r.view())
    }

    /// Orthonormal sketch of `C U_mid R` via QR of both outer factors.
    pub fn into_sketch(self) -> Result<Sketch> {
        let (qc, rc) = qr_thin(self.c.view());
        let (qr, rr) = qr_thin(self.r.view().t());
        let core = rc.dot(&self.u_mid).dot(&rr.t());
        let svd = thin_svd(core.view())?;
        Sketch::new(qc.dot(&svd.u), svd.s, qr.dot(&svd.v), true)
    }
}

/// Base columns and rows with the middle factor fitted on a target
/// sub-grid: `U_mid = C̄† M R̄†`.
pub fn br_cur(
    source: &MatrixSource,
    base_rows: &IndexSet,
    base_cols: &IndexSet,
    target_rows: &IndexSet,
    target_cols: &IndexSet,
) -> Result<CurFactors> {
    if target_rows.is_empty() || target_cols.is_empty() {
        return Err(Error::invalid("target row and column sets must be non-empty"));
    }
    let c = source.extract(Select::All, Select::Only(base_cols))?;
    let r = source.extract(Select::Only(base_rows), Select::All)?;
    let m = source.extract(Select::Only(target_rows), Select::Only(target_cols))?;
    let c_bar = c.as_array().select(Axis(0), target_rows.as_slice());
    let r_bar = r.as_array().select(Axis(1), target_cols.as_slice());
    let c_pinv = pinv_truncated(c_bar.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?;
    let r_pinv = pinv_truncated(r_bar.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?;
    let u_mid = c_pinv.dot(&m.view()).dot(&r_pinv);
    Ok(CurFactors { c, u_mid, r })
}

/// BR-CUR with independent uniform targets `multiplier` times the size of
/// the base sets.
pub fn sketch_cur(
    source: &MatrixSource,
    base_rows: &IndexSet,
    base_cols: &IndexSet,
    multiplier: usize,
    seed: u64,
) -> Result<CurFactors> {
    let (m, n) = source.shape();
    let target_rows = uniform_indices(m, multiplier * base_rows.len(), rng::derive(seed, 0))?;
    let target_cols = uniform_indices(n, multiplier * base_cols.len(), rng::derive(seed, 1))?;
    br_cur(source, base_rows, base_cols, &target_rows, &target_cols)
}

/// The Frobenius-optimal middle factor `C† A R†`. Reads all of `A`.
pub fn cur_full(source: &MatrixSource, c: &DenseMat, r: &DenseMat) -> Result<Array2<f64>> {
    let (m, n) = source.shape();
    if c.rows() != m || r.cols() != n {
        return Err(Error::dims(format!(
            "C is {:?} and R is {:?} for a {m}x{n} source",
            c.shape(),
            r.shape()
        )));
    }
    let a = source.read_full();
    let c_pinv = pinv_truncated(c.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?;
    let r_pinv = pinv_truncated(r.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?;
    Ok(c_pinv.dot(&a.view()).dot(&r_pinv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{frob_norm, relative_error};
    use crate::rng::seeded;
    use crate::sketchers::{pseudo_skeleton, SampledTriple};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, rng: &mut crate::rng::Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal))
    }

    fn source(a: &Array2<f64>) -> MatrixSource {
        MatrixSource::dense(DenseMat::from_array(a.clone()).unwrap())
    }

    fn set(v: Vec<usize>, n: usize) -> IndexSet {
        IndexSet::new(v, n).unwrap()
    }

    #[test]
    fn full_base_and_target_is_exact() {
        let mut rng = seeded(1);
        let a = gaussian(6, 5, &mut rng);
        let src = source(&a);
        let (rows, cols) = (IndexSet::full(6), IndexSet::full(5));
        let f = br_cur(&src, &rows, &cols, &rows, &cols).unwrap();
        assert!(frob_norm(&(f.reconstruct() - &a)) < 1e-8);
        let sk = f.into_sketch().unwrap();
        assert!(relative_error(&src, &sk).unwrap() < 1e-8);
    }

    #[test]
    fn empty_targets_rejected() {
        let src = source(&Array2::eye(3));
        let some = set(vec![0], 3);
        let none = set(vec![], 3);
        assert!(br_cur(&src, &some, &some, &none, &some).is_err());
        assert!(br_cur(&src, &some, &some, &some, &none).is_err());
    }

    #[test]
    fn shared_base_and_target_reduce_to_pseudo_skeleton() {
        let mut rng = seeded(2);
        let a = gaussian(8, 2, &mut rng).dot(&gaussian(2, 6, &mut rng));
        let src = source(&a);
        let (rows, cols) = (set(vec![1, 6], 8), set(vec![0, 4], 6));
        let f = br_cur(&src, &rows, &cols, &rows, &cols).unwrap();
        let ps = pseudo_skeleton(&SampledTriple::sample(&src, &rows, &cols).unwrap(), RankSpec::Auto).unwrap();
        assert!(frob_norm(&(f.reconstruct() - ps.reconstruct())) < 1e-8);
    }

    #[test]
    fn sketch_cur_targets_and_recovery() {
        let mut rng = seeded(3);
        let a = gaussian(30, 2, &mut rng).dot(&gaussian(2, 30, &mut rng));
        let src = source(&a);
        let mut hits = 0;
        for seed in 0..50u64 {
            let rows = uniform_indices(30, 2, rng::derive(seed, 10)).unwrap();
            let cols = uniform_indices(30, 2, rng::derive(seed, 11)).unwrap();
            src.reset_access();
            let f = sketch_cur(&src, &rows, &cols, 3, seed).unwrap();
            let log = src.access();
            assert!(log.rows_touched() <= 2 + 6 && log.cols_touched() <= 2 + 6);
            if frob_norm(&(f.reconstruct() - &a)) < 1e-6 * frob_norm(&a) {
                hits += 1;
            }
        }
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn sketch_cur_with_coincident_targets_is_pseudo_skeleton() {
        let mut rng = seeded(4);
        let a = gaussian(10, 3, &mut rng).dot(&gaussian(3, 9, &mut rng)) + gaussian(10, 9, &mut rng) * 0.1;
        let src = source(&a);
        let seed = 17;
        let rows = uniform_indices(10, 3, rng::derive(seed, 0)).unwrap();
        let cols = uniform_indices(9, 3, rng::derive(seed, 1)).unwrap();
        let f = sketch_cur(&src, &rows, &cols, 1, seed).unwrap();
        let ps = pseudo_skeleton(&SampledTriple::sample(&src, &rows, &cols).unwrap(), RankSpec::Auto).unwrap();
        assert!(frob_norm(&(f.reconstruct() - ps.reconstruct())) < 1e-8 * frob_norm(&a));
    }

    #[test]
    fn cur_full_is_optimal() {
        let mut rng = seeded(5);
        let a = gaussian(7, 6, &mut rng);
        let src = source(&a);
        let c = DenseMat::from_array(a.select(Axis(1), &[0, 2, 3])).unwrap();
        let r = DenseMat::from_array(a.select(Axis(0), &[1, 4])).unwrap();
        let u = cur_full(&src, &c, &r).unwrap();
        assert!(src.access().all);
        let best = frob_norm(&(&a - &c.view().dot(&u).dot(&r.view())));
        for _ in 0..100 {
            let x = &u + &gaussian(3, 2, &mut rng);
            let e = frob_norm(&(&a - &c.view().dot(&x).dot(&r.view())));
            assert!(best <= e + 1e-12);
        }
        let sq = gaussian(4, 4, &mut rng);
        let sq_src = source(&sq);
        let full = DenseMat::from_array(sq.clone()).unwrap();
        let u = cur_full(&sq_src, &full, &full).unwrap();
        assert!(frob_norm(&(full.view().dot(&u).dot(&full.view()) - &sq)) < 1e-8);
        let one = ndarray::array![[1.0], [3.0]].dot(&ndarray::array![[2.0, -1.0, 4.0]]);
        let one_src = source(&one);
        let c = DenseMat::from_array(one.select(Axis(1), &[0])).unwrap();
        let r = DenseMat::from_array(one.select(Axis(0), &[0])).unwrap();
        let u = cur_full(&one_src, &c, &r).unwrap();
        assert!(frob_norm(&(c.view().dot(&u).dot(&r.view()) - &one)) < 1e-12);
    }
}
