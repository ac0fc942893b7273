//! Sparse pairwise comparison matrix (PCM) completion and ranking.
//!
//! Three solvers share one data model ([`pcm::ComparisonSet`] in,
//! [`pcm::ScoreVector`] / [`pcm::DensePcm`] out):
//!
//! - [`lls`]: log-least-squares on the comparison-graph Laplacian,
//! - [`btl`]: Bradley-Terry-Luce maximum likelihood from win counts,
//! - [`embed`]: a trainable message-passing embedding model with a
//!   triangle-consistency penalty, plus the sparse mini-batch trainer in
//!   [`scale`].
//!
//! [`bench`] generates synthetic data and runs the benchmark grids.

// `!(x <= tol)` is used on purpose so that NaN fails validation checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod io;
pub mod pcm;
pub mod lls;
pub mod btl;
pub mod embed;
pub mod scale;
pub mod bench;

pub use error::{Error, Result};
pub use pcm::{ComparisonSet, DensePcm, ObservationMode, ScoreVector};
