use rand::seq::index;

use crate::error::{Error, Result};
use crate::matcore::IndexSet;
use crate::rng;

/// `k` distinct indices from `0..domain_size`, uniform without replacement,
/// returned in ascending order.
pub fn uniform_indices(domain_size: usize, k: usize, seed: u64) -> Result<IndexSet> {
    if k > domain_size {
        return Err(Error::TooManySamples {
            requested: k,
            available: domain_size,
        });
    }
    let mut rng = rng::seeded(seed);
    let mut picked = index::sample(&mut rng, domain_size, k).into_vec();
    picked.sort_unstable();
    IndexSet::new(picked, domain_size)
}
