use crate::error::{Error, Result};
use crate::matcore::IndexSet;

/// Indices of the `k` largest weights (ties go to the lower index),
/// returned in ascending order.
pub fn hard_threshold_select(weights: &[f64], k: usize) -> Result<IndexSet> {
    let n = weights.len();
    if k > n {
        return Err(Error::TooManySamples {
            requested: k,
            available: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    IndexSet::new(top, n)
}
