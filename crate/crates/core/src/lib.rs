//! Linear-cost matrix sketching by cascaded bilateral sampling.
//!
//! The crate samples a small number of rows and columns of an `m x n` matrix,
//! builds a cheap pilot sketch from a uniform sample, clusters the pilot's
//! row and column embeddings with weighted k-means, and re-sketches from the
//! resulting representatives. Only `O(m + n)` entries are ever read.
//!
//! Module map:
//!
//! * [`matcore`]: matrix storage, access-logged sources and the small dense
//!   kernels (thin SVD, truncated pseudo-inverse, norms).
//! * [`samplers`]: uniform, weighted k-means, leverage and hard-threshold selection.
//! * [`sketchers`]: pseudo-skeleton, stabilized sketching, Nyström, CUR variants,
//!   random projection and orthogonalization.
//! * [`pipeline`]: the two-round cascade.
//! * [`diagnostics`]: encoding errors, error bounds and the correlation experiment.
//! * [`io`]: file formats, synthetic generators and the benchmark harness.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod matcore;
pub mod pipeline;
pub mod rng;
pub mod samplers;
pub mod sketchers;

pub use error::{Error, Result};
pub use matcore::{DenseMat, IndexSet, MatrixSource, RankSpec, Select, Sketch, SparseMat};
pub use pipeline::{cabs_run, CabsConfig, CabsOutcome, FollowupVariant, RankSelection};
pub use samplers::WeightFn;
