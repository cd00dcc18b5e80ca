//! Fast nearest-neighbor-preserving embeddings.
//!
//! A sparse randomized linear map `Φ = P·H·D` from `R^d` to `R^k`, where `D` is a
//! random sign diagonal, `H` the normalized Walsh-Hadamard transform and `P` a
//! sparse Gaussian projection with sparsity `q`. The target dimension `k` is sized
//! by the doubling constant of the dataset rather than its cardinality, so the
//! embedding preserves approximate nearest neighbors in far fewer dimensions than
//! a distance-preserving Johnson-Lindenstrauss map would need.
//!
//! Besides sampling and applying the map, the crate evaluates the analytic tail
//! bounds behind the construction ([`bounds`]) and checks each of them by
//! Monte-Carlo simulation ([`verification`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod fjlt;
pub mod fwht;
pub mod io;
pub mod metric;
pub mod model;
pub mod synthetic;
pub mod verification;

pub use error::{Error, Result};
pub use fjlt::{FjltTransform, GaussianTransform, LinearEmbedding, SignDiagonal, SparseProjection};
pub use metric::{DoublingEstimate, NnTable};
pub use model::{make_dataset, select_params, Constants, DataSet, EmbedParams, RngSeed};
