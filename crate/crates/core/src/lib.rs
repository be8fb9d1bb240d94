//! Trigram representations from two consecutive SVDs, with diagnostics for
//! how concentrated ("focal") the information in each dimension is.
//!
//! The pipeline tokenizes a corpus, builds left/right context vectors for
//! words, concatenates them into trigram vectors, reduces those with a
//! truncated SVD and finally rotates the result with a second, full-rank
//! SVD. [`diagnostics`] compares representations by column correlations,
//! single-dimension threshold classifiers and the focality measure.

pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod persist;
pub mod svdstack;
pub mod vectors;

pub use error::{Error, ErrorClass, Result};
