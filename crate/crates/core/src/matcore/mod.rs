//! Matrix storage, access-logged sources and the dense kernels everything
//! else is built from.

mod dense;
mod index;
mod linalg;
mod sketch;
mod source;
mod sparse;

pub use dense::DenseMat;
pub use index::{IndexSet, Select};
pub use linalg::{frob_norm, pinv_truncated, qr_thin, thin_svd, FrobNorm, RankSpec, Svd, DEFAULT_RANK_TOL};
pub use sketch::{relative_error, Sketch, ERROR_BLOCK_COLS};
pub use source::{AccessLog, Backing, EntryGenerator, LowRankGenerator, MatrixSource};
pub use sparse::SparseMat;
