//! Truncated SVD, the first-stage embedding, the second-stage rotation and
//! the one- and two-layer trigram pipelines.

mod embed;
mod pipeline;
mod truncated;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

pub use embed::{svd1_embed, svd2_coordinates, svd2_rotate};
pub use pipeline::{pipeline_1layer, pipeline_2layer, PipelineConfig, PipelineOutput};
pub use truncated::{canonicalize_signs, truncated_svd, SvdMethod, SvdOptions};

/// Rank-`k` factors `U · diag(s) · Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// n×k, orthonormal columns.
    pub u: Array2<f64>,
    /// Non-increasing, non-negative.
    pub s: Array1<f64>,
    /// d×k, orthonormal columns.
    pub v: Array2<f64>,
    pub canonical_signs: bool,
}

impl SvdFactors {
    pub fn k(&self) -> usize {
        self.s.len()
    }

    /// `U · diag(s)`: the object coordinates.
    pub fn scaled_u(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (mut col, &sigma) in us.axis_iter_mut(Axis(1)).zip(&self.s) {
            col *= sigma;
        }
        us
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        crate::linalg::matmul(self.scaled_u().view(), self.v.t())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Svd1,
    Svd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Layer {
    #[serde(rename = "1layer")]
    #[value(name = "1layer")]
    One,
    #[serde(rename = "2layer")]
    #[value(name = "2layer")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objects {
    Words,
    Trigrams,
}

/// Where a representation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: Stage,
    pub layer: Layer,
    pub objects: Objects,
}

/// Row-unit-norm object embeddings. Zero rows are allowed and stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub matrix: Array2<f64>,
    pub provenance: Provenance,
    pub row_labels: Vec<String>,
}

impl Representation {
    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Columns whose entries are all equal (in particular all-zero columns
    /// left by a rank-deficient rotation).
    pub fn constant_columns(&self) -> Vec<usize> {
        self.matrix
            .axis_iter(Axis(1))
            .enumerate()
            .filter(|(_, c)| c.iter().all(|&v| v == c[0]))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Derives an independent stream seed from a run seed (splitmix64).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
