//! Row and column selection strategies.
//!
//! Every sampler returns an [`IndexSet`](crate::IndexSet) and is a pure
//! function of its inputs and seed.

mod encoding;
mod kmeans;
mod leverage;
mod threshold;
mod uniform;
mod weight;

pub use encoding::{encoding_error, nearest_assignment};
pub use kmeans::{weighted_kmeans, KmeansResult, DEFAULT_KMEANS_ITERS};
pub use leverage::{leverage_sample, leverage_scores};
pub use threshold::hard_threshold_select;
pub use uniform::uniform_indices;
pub use weight::{weights_from_embedding, WeightFn};

use ndarray::Array2;

/// Row and column embeddings `P = U S^½`, `Q = V S^½` of a sketch.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingPair {
    pub p: Array2<f64>,
    pub q: Array2<f64>,
}

impl EmbeddingPair {
    pub fn from_sketch(sk: &crate::Sketch) -> Self {
        let root: Vec<f64> = sk.s().iter().map(|s| s.sqrt()).collect();
        let scale = |f: &Array2<f64>| {
            let mut out = f.clone();
            for (mut c, &r) in out.columns_mut().into_iter().zip(&root) {
                c *= r;
            }
            out
        };
        Self {
            p: scale(sk.u()),
            q: scale(sk.v()),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.ncols()
    }
}
