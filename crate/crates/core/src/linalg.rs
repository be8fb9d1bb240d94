//! Dense kernels: Householder QR, one-sided Jacobi SVD, blocked products
//! and row normalization. All arithmetic is `f64`.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per task for the parallel product.
const ROW_CHUNK: usize = 4096;

/// Fails on the first NaN or infinite entry.
pub fn check_finite(m: ArrayView2<f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// L2 norm of every row.
pub fn row_norms(m: ArrayView2<f64>) -> Array1<f64> {
    m.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}

/// Scales every non-zero row to unit L2 norm in place. Returns the indices
/// of all-zero rows, which are left untouched.
pub fn normalize_rows_in_place(m: &mut Array2<f64>) -> Vec<usize> {
    let mut zero = Vec::new();
    for (i, mut row) in m.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            zero.push(i);
        }
    }
    zero
}

/// `a · b`, split over row blocks of `a`.
///
/// Each output entry is accumulated in the same order however the rows are
/// split, so the result does not depend on the thread count.
pub fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let (n, _) = a.dim();
    let mut out = Array2::<f64>::zeros((n, b.ncols()));
    if n <= ROW_CHUNK {
        ndarray::linalg::general_mat_mul(1.0, &a, &b, 0.0, &mut out);
        return out;
    }
    out.axis_chunks_iter_mut(Axis(0), ROW_CHUNK)
        .into_par_iter()
        .zip(a.axis_chunks_iter(Axis(0), ROW_CHUNK).into_par_iter())
        .for_each(|(mut o, blk)| {
            ndarray::linalg::general_mat_mul(1.0, &blk, &b, 0.0, &mut o);
        });
    out
}

/// Thin QR of a tall matrix (`n >= m`): returns `Q` (n×m, orthonormal
/// columns) and upper-triangular `R` (m×m).
pub fn householder_qr(a: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (n, m) = a.dim();
    assert!(n >= m, "householder_qr needs a tall matrix, got {n}x{m}");
    // Columns of `a` become contiguous rows of `w`.
    let mut w: Array2<f64> = a.t().as_standard_layout().into_owned();
    let mut betas = vec![0.0; m];
    let mut r = Array2::<f64>::zeros((m, m));

    for j in 0..m {
        let (head, mut tail) = w.view_mut().split_at(Axis(0), j + 1);
        let mut v = head.slice_move(s![j, j..]);
        let vs = v.as_slice_mut().expect("contiguous row");
        let norm = dot(vs, vs).sqrt();
        if norm == 0.0 {
            betas[j] = 0.0;
            r[[j, j]] = 0.0;
        } else {
            let alpha = if vs[0] > 0.0 { -norm } else { norm };
            vs[0] -= alpha;
            let vnorm2 = dot(vs, vs);
            betas[j] = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
            r[[j, j]] = alpha;
        }
        let beta = betas[j];
        let vs: &[f64] = vs;
        if beta != 0.0 {
            tail.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
                let rs = &mut row.as_slice_mut().expect("contiguous row")[j..];
                let t = beta * dot(vs, rs);
                axpy(-t, vs, rs);
            });
        }
        for i in (j + 1)..m {
            r[[j, i]] = w[[i, j]];
        }
    }

    // Accumulate Q = H_0 ... H_{m-1} [I; 0] backwards. Rows of `qt` are the
    // columns of Q.
    let mut qt = Array2::<f64>::zeros((m, n));
    for i in 0..m {
        qt[[i, i]] = 1.0;
    }
    for j in (0..m).rev() {
        let beta = betas[j];
        if beta == 0.0 {
            continue;
        }
        let v = w.slice(s![j, j..]);
        let vs = v.as_slice().expect("contiguous row");
        qt.slice_mut(s![j.., ..])
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .for_each(|mut row| {
                let rs = &mut row.as_slice_mut().expect("contiguous row")[j..];
                let t = beta * dot(vs, rs);
                if t != 0.0 {
                    axpy(-t, vs, rs);
                }
            });
    }
    (qt.reversed_axes().as_standard_layout().into_owned(), r)
}

/// A thin singular value decomposition `A = U · diag(s) · Vᵀ` with singular
/// values sorted non-increasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Columns are rotated pairwise until every pair is orthogonal to within
/// `m·ε` relative to the product of their norms.
pub fn jacobi_svd(a: ArrayView2<f64>) -> ThinSvd {
    let (rows, m) = a.dim();
    assert_eq!(rows, m, "jacobi_svd expects a square matrix");
    let mut g: Array2<f64> = a.t().as_standard_layout().into_owned();
    let mut v = Array2::<f64>::eye(m);
    let tol = (m.max(1) as f64) * f64::EPSILON;

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let (gp, gq) = two_rows(&mut g, p, q);
                let alpha = dot(gp, gp);
                let beta = dot(gq, gq);
                let gamma = dot(gp, gq);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate(gp, gq, c, sn);
                let (vp, vq) = two_rows(&mut v, p, q);
                rotate(vp, vq, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = g.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = Array2::<f64>::zeros((m, m));
    let mut vs = Array2::<f64>::zeros((m, m));
    let mut s = Array1::<f64>::zeros(m);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        vs.row_mut(dst).assign(&v.row(src));
        if sigma > f64::MIN_POSITIVE * 1e10 {
            s[dst] = sigma;
            u.column_mut(dst).assign(&g.row(src).mapv(|x| x / sigma));
        } else {
            deficient.push(dst);
        }
    }
    complete_orthonormal(&mut u, &deficient);
    ThinSvd { u, s, v: vs.reversed_axes().as_standard_layout().into_owned() }
}

fn two_rows(m: &mut Array2<f64>, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let ncols = m.ncols();
    let data = m.as_slice_mut().expect("standard layout");
    let (lo, hi) = data.split_at_mut(q * ncols);
    (&mut lo[p * ncols..(p + 1) * ncols], &mut hi[..ncols])
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, using Gram-Schmidt on the canonical basis.
fn complete_orthonormal(u: &mut Array2<f64>, columns: &[usize]) {
    if columns.is_empty() {
        return;
    }
    let n = u.nrows();
    let mut filled: Vec<bool> = vec![true; u.ncols()];
    for &c in columns {
        filled[c] = false;
        u.column_mut(c).fill(0.0);
    }
    let mut basis = 0;
    for &c in columns {
        loop {
            assert!(basis < n, "cannot complete orthonormal basis");
            let mut cand = Array1::<f64>::zeros(n);
            cand[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for (j, done) in filled.iter().enumerate() {
                    if *done {
                        let col = u.column(j);
                        let proj = col.dot(&cand);
                        cand.scaled_add(-proj, &col);
                    }
                }
            }
            let norm = cand.dot(&cand).sqrt();
            if norm > 0.5 {
                u.column_mut(c).assign(&(cand / norm));
                filled[c] = true;
                break;
            }
        }
    }
}

/// Thin SVD of any matrix via Householder QR followed by Jacobi on the
/// triangular factor. Returns `min(n, d)` triplets.
pub fn thin_svd(a: ArrayView2<f64>) -> ThinSvd {
    let (n, d) = a.dim();
    if n >= d {
        let (q, r) = householder_qr(a);
        let inner = jacobi_svd(r.view());
        ThinSvd { u: matmul(q.view(), inner.u.view()), s: inner.s, v: inner.v }
    } else {
        let t = thin_svd(a.t());
        ThinSvd { u: t.v, s: t.s, v: t.u }
    }
}

/// Largest absolute entry of `AᵀA − I`.
pub fn orthogonality_residual(a: ArrayView2<f64>) -> f64 {
    let gram = matmul(a.t(), a);
    let mut worst = 0.0f64;
    Zip::indexed(&gram).for_each(|(i, j), &g| {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((g - target).abs());
    });
    worst
}
