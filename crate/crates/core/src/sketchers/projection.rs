use ndarray::{s, Array2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{qr_thin, thin_svd, MatrixSource, Sketch};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomProjectionConfig {
    /// Target rank.
    pub k: usize,
    /// Oversampling.
    pub p: usize,
    /// Power iterations.
    pub q: usize,
}

impl RandomProjectionConfig {
    pub fn new(k: usize, p: usize, q: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("random projection rank must be at least 1"));
        }
        Ok(Self { k, p, q })
    }
}

/// Randomized range finder with `q` re-orthogonalized power iterations.
/// Reads all of `A`.
pub fn random_projection_sketch(source: &MatrixSource, cfg: RandomProjectionConfig, seed: u64) -> Result<Sketch> {
    if cfg.k == 0 {
        return Err(Error::invalid("random projection rank must be at least 1"));
    }
    let a = source.read_full().into_array();
    let (_, n) = a.dim();
    let width = cfg.k + cfg.p;
    let mut rng = rng::seeded(seed);
    let omega = Array2::from_shape_simple_fn((n, width), || rng.sample::<f64, _>(StandardNormal));
    let (mut q, _) = qr_thin(a.dot(&omega).view());
    for _ in 0..cfg.q {
        let (z, _) = qr_thin(a.t().dot(&q).view());
        q = qr_thin(a.dot(&z).view()).0;
    }
    let b = q.t().dot(&a);
    let svd = thin_svd(b.view())?;
    let r = cfg.k.min(svd.s.len());
    Sketch::new(
        q.dot(&svd.u.slice(s![.., ..r])),
        svd.s.slice(s![..r]).to_owned(),
        svd.v.slice(s![.., ..r]).to_owned(),
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{relative_error, DenseMat};

    fn gaussian(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng::seeded(seed);
        Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal))
    }

    fn source(a: Array2<f64>) -> MatrixSource {
        MatrixSource::dense(DenseMat::from_array(a).unwrap())
    }

    #[test]
    fn exact_rank_is_captured() {
        let src = source(gaussian(40, 5, 1).dot(&gaussian(5, 30, 2)));
        let sk = random_projection_sketch(&src, RandomProjectionConfig::new(5, 2, 0).unwrap(), 3).unwrap();
        assert!(relative_error(&src, &sk).unwrap() < 1e-8);
        assert!(src.access().all);
    }

    #[test]
    fn full_width_matches_truncated_svd() {
        let a = gaussian(20, 12, 4);
        let svd = thin_svd(a.view()).unwrap();
        let k = 4;
        let tail: f64 = svd.s.iter().skip(k).map(|s| s * s).sum();
        let total: f64 = svd.s.iter().map(|s| s * s).sum();
        let src = source(a);
        let sk = random_projection_sketch(&src, RandomProjectionConfig::new(k, 8, 0).unwrap(), 5).unwrap();
        assert!((relative_error(&src, &sk).unwrap() - (tail / total).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_helps() {
        let a = gaussian(120, 10, 6).dot(&gaussian(10, 100, 7)) + gaussian(120, 100, 8) * 0.5;
        let src = source(a);
        let mut better = 0;
        for seed in 0..20 {
            let e0 = relative_error(
                &src,
                &random_projection_sketch(&src, RandomProjectionConfig::new(10, 2, 0).unwrap(), seed).unwrap(),
            )
            .unwrap();
            let e1 = relative_error(
                &src,
                &random_projection_sketch(&src, RandomProjectionConfig::new(10, 2, 1).unwrap(), seed).unwrap(),
            )
            .unwrap();
            if e1 <= e0 {
                better += 1;
            }
        }
        assert!(better >= 16, "{better}/20");
    }
}
