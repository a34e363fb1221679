use cabs::io::Recipe;
use cabs::matcore::{frob_norm, relative_error, thin_svd};
use cabs::{DenseMat, Error, IndexSet, MatrixSource, Select, Sketch, SparseMat};
use ndarray::s;
use proptest::prelude::*;

#[test]
fn index_sets_reject_bad_input() {
    assert!(matches!(
        IndexSet::new(vec![0, 3], 3),
        Err(Error::IndexOutOfRange { index: 3, domain: 3 })
    ));
    assert!(matches!(
        IndexSet::new(vec![1, 1], 3),
        Err(Error::DuplicateIndex { index: 1 })
    ));
    let s = IndexSet::new(vec![4, 0, 2], 5).unwrap();
    assert_eq!(s.sorted().as_slice(), &[0, 2, 4]);
    assert_eq!(s.without(&IndexSet::new(vec![2], 5).unwrap()).as_slice(), &[4, 0]);
}

#[test]
fn sparse_matrices_validate_and_extract() {
    assert!(SparseMat::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    assert!(SparseMat::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    let sp = SparseMat::from_triplets(3, 4, vec![(2, 3, 5.0), (0, 1, -1.0), (1, 1, 0.0)]).unwrap();
    assert_eq!(sp.nnz(), 3);
    let src = MatrixSource::sparse(sp.clone());
    let rows = IndexSet::new(vec![2, 0], 3).unwrap();
    let cols = IndexSet::new(vec![3, 1], 4).unwrap();
    let block = src.extract(Select::Only(&rows), Select::Only(&cols)).unwrap();
    assert_eq!(block.values(), &[5.0, 0.0, 0.0, -1.0]);
    let log = src.access();
    assert!(!log.all);
    assert_eq!((log.rows_touched(), log.cols_touched()), (2, 2));
    assert_eq!(src.read_full().into_array(), sp.to_dense());
    assert!(src.access().all);
    src.reset_access();
    assert!(!src.access().all);
}

#[test]
fn non_finite_dense_input_is_rejected() {
    assert!(DenseMat::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
    assert!(DenseMat::from_row_major(2, 2, vec![1.0]).is_err());
}

#[test]
fn relative_error_of_zero_matrix_is_an_error() {
    let src = MatrixSource::dense(DenseMat::zeros(3, 3));
    assert!(matches!(
        relative_error(&src, &Sketch::zero(3, 3)),
        Err(Error::ZeroNorm)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn streamed_error_matches_dense_formula(m in 2usize..300, n in 2usize..600, r in 1usize..4, seed: u64) {
        let a = Recipe::Lowrank { m, n, r: 3, noise: 0.5, seed }.generate().unwrap().to_dense();
        let svd = thin_svd(a.view()).unwrap();
        let r = r.min(svd.s.len());
        let sk = Sketch::new(
            svd.u.slice(s![.., ..r]).to_owned(),
            svd.s.slice(s![..r]).to_owned(),
            svd.v.slice(s![.., ..r]).to_owned(),
            true,
        )
        .unwrap();
        let src = MatrixSource::dense(a.clone());
        let streamed = relative_error(&src, &sk).unwrap();
        let direct = frob_norm(&(sk.reconstruct() - a.as_array())) / frob_norm(&a);
        prop_assert!((streamed - direct).abs() < 1e-12);
    }

    #[test]
    fn sketch_truncation_keeps_leading_triplets(keep in 0usize..8, seed: u64) {
        let a = Recipe::Lowrank { m: 12, n: 10, r: 6, noise: 0.0, seed }.generate().unwrap().to_dense();
        let svd = thin_svd(a.view()).unwrap();
        let sk = Sketch::new(svd.u.clone(), svd.s.clone(), svd.v.clone(), true).unwrap();
        let t = sk.truncated(keep);
        prop_assert_eq!(t.rank(), keep.min(sk.rank()));
        prop_assert_eq!(t.s().as_slice().unwrap(), &sk.s().as_slice().unwrap()[..t.rank()]);
    }

    #[test]
    fn extraction_agrees_across_backings(m in 1usize..20, n in 1usize..20, density in 0.0f64..1.0, seed: u64) {
        let sparse = Recipe::SparseLowrank { m, n, r: 2, density, seed }.generate().unwrap();
        let dense = MatrixSource::dense(sparse.to_dense());
        let sparse = sparse.into_source();
        let rows = IndexSet::new((0..m).rev().step_by(2).collect(), m).unwrap();
        let cols = IndexSet::new((0..n).step_by(3).collect(), n).unwrap();
        prop_assert_eq!(
            sparse.extract(Select::Only(&rows), Select::Only(&cols)).unwrap(),
            dense.extract(Select::Only(&rows), Select::Only(&cols)).unwrap()
        );
        prop_assert_eq!(sparse.extract(Select::All, Select::Only(&cols)).unwrap(), dense.extract(Select::All, Select::Only(&cols)).unwrap());
    }
}
