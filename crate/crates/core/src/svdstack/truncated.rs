use ndarray::{s, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SvdFactors;
use crate::error::{Error, Result};
use crate::linalg::{self, ThinSvd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdMethod {
    /// Dense when `min(n, d) <= dense_limit`, randomized otherwise.
    #[default]
    Auto,
    Dense,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub method: SvdMethod,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            method: SvdMethod::Auto,
            oversampling: 10,
            power_iterations: 2,
            dense_limit: 512,
            seed: 0,
        }
    }
}

impl SvdOptions {
    pub fn with_seed(self, seed: u64) -> Self {
        SvdOptions { seed, ..self }
    }

    fn use_dense(&self, n: usize, d: usize) -> bool {
        match self.method {
            SvdMethod::Auto => n.min(d) <= self.dense_limit,
            SvdMethod::Dense => true,
            SvdMethod::Randomized => false,
        }
    }
}

/// Top-`k` singular triplets of `c`, with canonical column signs.
///
/// Small problems go through a dense QR + Jacobi decomposition. Larger ones
/// use a seeded Gaussian range finder with `oversampling` extra columns and
/// `power_iterations` re-orthonormalized subspace iterations, followed by a
/// dense decomposition of the projected matrix.
pub fn truncated_svd(c: ArrayView2<f64>, k: usize, opts: &SvdOptions) -> Result<SvdFactors> {
    let (n, d) = c.dim();
    let max = n.min(d);
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    linalg::check_finite(c)?;
    let full = if opts.use_dense(n, d) {
        linalg::thin_svd(c)
    } else {
        randomized(c, k, opts)
    };
    let factors = SvdFactors {
        u: full.u.slice(s![.., ..k]).to_owned(),
        s: full.s.slice(s![..k]).to_owned(),
        v: full.v.slice(s![.., ..k]).to_owned(),
        canonical_signs: false,
    };
    Ok(canonicalize_signs(factors))
}

fn orthonormal_basis(m: Array2<f64>) -> Array2<f64> {
    linalg::householder_qr(m.view()).0
}

fn randomized(a: ArrayView2<f64>, k: usize, opts: &SvdOptions) -> ThinSvd {
    let (n, d) = a.dim();
    let width = (k + opts.oversampling).min(n.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = Array2::from_shape_simple_fn((d, width), || rng.sample::<f64, _>(StandardNormal));

    let mut q = orthonormal_basis(linalg::matmul(a, omega.view()));
    for _ in 0..opts.power_iterations {
        let z = orthonormal_basis(linalg::matmul(a.t(), q.view()));
        q = orthonormal_basis(linalg::matmul(a, z.view()));
    }
    // B = Qᵀ A, decomposed through its transpose Aᵀ Q (d × width, tall).
    let bt = linalg::matmul(a.t(), q.view());
    let inner = linalg::thin_svd(bt.view());
    ThinSvd { u: linalg::matmul(q.view(), inner.v.view()), s: inner.s, v: inner.u }
}

/// Flips `U[:, j]` and `V[:, j]` whenever the largest-magnitude entry of
/// `V[:, j]` is negative (first such entry on ties).
pub fn canonicalize_signs(mut f: SvdFactors) -> SvdFactors {
    for j in 0..f.k() {
        let col = f.v.column(j);
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            f.v.column_mut(j).mapv_inplace(|x| -x);
            f.u.column_mut(j).mapv_inplace(|x| -x);
        }
    }
    f.canonical_signs = true;
    f
}
