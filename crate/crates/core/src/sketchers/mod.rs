//! Decompositions that turn sampled rows and columns into a [`Sketch`](crate::Sketch).

mod cur;
mod orthogonalize;
mod projection;
mod skeleton;
mod triple;

pub use cur::{br_cur, cur_full, sketch_cur, CurFactors, SKETCH_CUR_MULTIPLIER};
pub use orthogonalize::orthogonalize;
pub use projection::{random_projection_sketch, RandomProjectionConfig};
pub use skeleton::{nystrom, pseudo_skeleton, stabilized_sketch};
pub use triple::SampledTriple;

/// Relative column-norm level below which an extrapolated singular vector
/// counts as zero.
pub(crate) const ZERO_NORM_TOL: f64 = 1e-14;
