use ndarray::ArrayView2;
use rand::seq::index;

use crate::error::{Error, Result};
use crate::matcore::IndexSet;
use crate::rng;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// `ℓ_i = ‖F_i‖² / r` for a factor with orthonormal columns.
pub fn leverage_scores(f: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let r = f.ncols();
    let gram = f.t().dot(&f);
    let mut deviation: f64 = 0.0;
    for ((i, j), &g) in gram.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        deviation = deviation.max((g - target).abs());
    }
    if deviation.is_nan() || deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    if r == 0 {
        return Ok(vec![0.0; f.nrows()]);
    }
    Ok(f.rows().into_iter().map(|row| row.dot(&row) / r as f64).collect())
}

/// `k` rows drawn without replacement with probability proportional to
/// their leverage scores. Once the nonzero scores are exhausted the
/// remainder is filled uniformly from the zero-score rows.
pub fn leverage_sample(f: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<IndexSet> {
    let n = f.nrows();
    if k > n {
        return Err(Error::TooManySamples {
            requested: k,
            available: n,
        });
    }
    let scores = leverage_scores(f)?;
    let positive: Vec<usize> = (0..n).filter(|&i| scores[i] > 0.0).collect();
    let mut rng = rng::seeded(seed);
    let take = k.min(positive.len());
    let drawn = index::sample_weighted(&mut rng, positive.len(), |p| scores[positive[p]], take)
        .map_err(|e| Error::invalid(format!("leverage sampling failed: {e}")))?;
    let mut picked: Vec<usize> = drawn.into_iter().map(|p| positive[p]).collect();
    if picked.len() < k {
        let rest: Vec<usize> = (0..n).filter(|&i| scores[i] <= 0.0).collect();
        let fill = index::sample(&mut rng, rest.len(), k - picked.len());
        picked.extend(fill.into_iter().map(|p| rest[p]));
    }
    picked.sort_unstable();
    IndexSet::new(picked, n)
}
