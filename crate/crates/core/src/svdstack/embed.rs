use super::{truncated_svd, Provenance, Representation, Stage, SvdMethod, SvdOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::vectors::CountMatrix;

/// Tolerance on row norms accepted as unit length.
pub(crate) const UNIT_TOL: f64 = 1e-10;

/// First stage: rows of `U · diag(S)` from the rank-`k` SVD of `c`, each
/// scaled to unit length.
pub fn svd1_embed(
    c: &CountMatrix,
    k: usize,
    provenance: Provenance,
    opts: &SvdOptions,
) -> Result<Representation> {
    let factors = truncated_svd(c.values.view(), k, opts)?;
    let mut matrix = factors.scaled_u();
    linalg::normalize_rows_in_place(&mut matrix);
    Ok(Representation {
        matrix,
        provenance: Provenance { stage: Stage::Svd1, ..provenance },
        row_labels: c.row_labels.clone(),
    })
}

/// Second stage: a full-rank SVD `C′ = U′S′V′ᵀ` of the unit-normalized
/// first-stage matrix, re-expressed as rows of `U′ · diag(S′)` and
/// normalized again. Dimensionality is unchanged; dimensions with a zero
/// singular value come out as zero columns.
pub fn svd2_rotate(rep: &Representation) -> Result<Representation> {
    linalg::check_finite(rep.matrix.view())?;
    for (row, norm) in linalg::row_norms(rep.matrix.view()).iter().enumerate() {
        if *norm != 0.0 && (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized { row, norm: *norm });
        }
    }
    let mut matrix = svd2_coordinates(rep)?;
    linalg::normalize_rows_in_place(&mut matrix);
    Ok(Representation {
        matrix,
        provenance: Provenance { stage: Stage::Svd2, ..rep.provenance },
        row_labels: rep.row_labels.clone(),
    })
}

/// `U′ · diag(S′)` before the final normalization. Its rows have the same
/// Gram matrix as the input rows.
pub fn svd2_coordinates(rep: &Representation) -> Result<ndarray::Array2<f64>> {
    let (n, k) = rep.matrix.dim();
    if n < k {
        return Err(Error::TooFewRows { needed: k, got: n });
    }
    let opts = SvdOptions { method: SvdMethod::Dense, ..Default::default() };
    Ok(truncated_svd(rep.matrix.view(), k, &opts)?.scaled_u())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svdstack::{Layer, Objects};
    use crate::vectors::MatrixState;
    use ndarray::{array, Array2};

    fn prov() -> Provenance {
        Provenance { stage: Stage::Svd1, layer: Layer::One, objects: Objects::Trigrams }
    }

    fn labelled(values: Array2<f64>) -> CountMatrix {
        let rows = (0..values.nrows()).map(|i| i.to_string()).collect();
        let cols = (0..values.ncols()).map(|i| i.to_string()).collect();
        CountMatrix::new(values, rows, cols, MatrixState::RAW).unwrap()
    }

    #[test]
    fn svd1_rows_are_unit_and_labelled() {
        let c = labelled(array![[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [2.0, 0.0, 1.0], [1.0, 1.0, 1.0]]);
        let rep = svd1_embed(&c, 2, prov(), &SvdOptions::default()).unwrap();
        assert_eq!(rep.matrix.dim(), (4, 2));
        assert_eq!(rep.provenance.stage, Stage::Svd1);
        assert_eq!(rep.row_labels, c.row_labels);
        for n in linalg::row_norms(rep.matrix.view()) {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_svd1_preserves_row_geometry() {
        let c = labelled(array![[0.6, 0.8], [-0.8, 0.6], [1.0, 0.0]]);
        let rep = svd1_embed(&c, 2, prov(), &SvdOptions::default()).unwrap();
        let g_in = c.values.dot(&c.values.t());
        let g_out = rep.matrix.dot(&rep.matrix.t());
        assert!(g_in.iter().zip(&g_out).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn svd2_requires_unit_rows() {
        let rep = Representation {
            matrix: array![[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            provenance: prov(),
            row_labels: vec!["a".into(), "b".into(), "c".into()],
        };
        assert!(matches!(svd2_rotate(&rep), Err(Error::NotNormalized { row: 0, .. })));
    }

    #[test]
    fn svd2_keeps_zero_dimensions_for_rank_deficient_input() {
        let rep = Representation {
            matrix: array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.8, 0.0], [0.0, 0.0, 0.0]],
            provenance: prov(),
            row_labels: (0..4).map(|i| i.to_string()).collect(),
        };
        let out = svd2_rotate(&rep).unwrap();
        assert_eq!(out.k(), 3);
        assert_eq!(out.provenance.stage, Stage::Svd2);
        assert!(out.matrix.column(2).iter().all(|v| v.abs() < 1e-15));
        assert!(out.matrix.row(3).iter().all(|&v| v == 0.0));
    }
}
