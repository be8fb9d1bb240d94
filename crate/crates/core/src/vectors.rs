//! Left/right context counts, tf-idf weighting and assembly of the word and
//! trigram input matrices.

use std::collections::HashMap;

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedCorpus, TrigramSample, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg;
use crate::svdstack::Representation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Raw integer counts.
    None,
    TfIdf,
    /// Concatenated embeddings; neither counts nor tf-idf weights.
    Embedding,
}

/// Weighting and normalization state of a [`CountMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixState {
    pub weighting: Weighting,
    pub normalized: bool,
}

impl MatrixState {
    pub const RAW: MatrixState = MatrixState { weighting: Weighting::None, normalized: false };
    pub const TFIDF: MatrixState = MatrixState { weighting: Weighting::TfIdf, normalized: false };
    pub const TFIDF_NORMALIZED: MatrixState =
        MatrixState { weighting: Weighting::TfIdf, normalized: true };

    pub fn name(&self) -> &'static str {
        match (self.weighting, self.normalized) {
            (Weighting::None, false) => "raw",
            (Weighting::None, true) => "normalized",
            (Weighting::TfIdf, false) => "tfidf",
            (Weighting::TfIdf, true) => "tfidf+normalized",
            (Weighting::Embedding, false) => "embedding",
            (Weighting::Embedding, true) => "embedding+normalized",
        }
    }
}

/// Dense object-by-feature matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    pub values: Array2<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub state: MatrixState,
}

impl CountMatrix {
    pub fn new(
        values: Array2<f64>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        state: MatrixState,
    ) -> Result<Self> {
        if values.nrows() != row_labels.len() || values.ncols() != col_labels.len() {
            return Err(Error::Shape(format!(
                "{}x{} values with {} row and {} column labels",
                values.nrows(),
                values.ncols(),
                row_labels.len(),
                col_labels.len()
            )));
        }
        Ok(CountMatrix { values, row_labels, col_labels, state })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        self.values
            .axis_iter(Axis(0))
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Inverse document frequency formula used by [`apply_tfidf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TfIdfVariant {
    /// `tf · ln(n / df)`
    #[default]
    Standard,
    /// `tf · (ln((1 + n) / (1 + df)) + 1)`
    Smooth,
}

/// Column-wise tf-idf, with `df_j` the number of rows with a positive entry
/// in column `j`. Columns with `df_j = 0` stay zero.
pub fn apply_tfidf(m: &CountMatrix, variant: TfIdfVariant) -> Result<CountMatrix> {
    if m.state != MatrixState::RAW {
        return Err(Error::WrongState { expected: "raw", found: m.state.name() });
    }
    let n = m.nrows() as f64;
    let idf: Vec<f64> = m
        .values
        .axis_iter(Axis(1))
        .map(|col| {
            let df = col.iter().filter(|&&v| v > 0.0).count() as f64;
            if df == 0.0 {
                0.0
            } else {
                match variant {
                    TfIdfVariant::Standard => (n / df).ln(),
                    TfIdfVariant::Smooth => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
                }
            }
        })
        .collect();
    let mut values = m.values.clone();
    for mut row in values.axis_iter_mut(Axis(0)) {
        for (v, w) in row.iter_mut().zip(&idf) {
            *v *= w;
        }
    }
    Ok(CountMatrix { values, state: MatrixState::TFIDF, ..m.clone() })
}

/// Result of [`normalize_rows`]: the normalized matrix and its zero rows.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub matrix: CountMatrix,
    pub zero_rows: Vec<usize>,
}

pub fn normalize_rows(m: &CountMatrix) -> Normalized {
    let mut values = m.values.clone();
    let zero_rows = linalg::normalize_rows_in_place(&mut values);
    let state = MatrixState { normalized: true, ..m.state };
    Normalized { matrix: CountMatrix { values, state, ..m.clone() }, zero_rows }
}

/// Left and right neighbour counts for every vocabulary word.
///
/// `left.values[[w, i]]` is the number of times the rank-`i + 1` word occurs
/// immediately before word `w` within a sentence; `right` is symmetric.
/// Rows follow vocabulary rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct WordContextVectors {
    pub left: CountMatrix,
    pub right: CountMatrix,
    pub r: usize,
}

pub fn build_context_counts(
    corpus: &TokenizedCorpus,
    vocab: &Vocabulary,
    r: usize,
) -> Result<WordContextVectors> {
    if r > vocab.len() {
        return Err(Error::ContextTooWide { r, vocab: vocab.len() });
    }
    let nv = vocab.len();
    let mut left = Array2::<f64>::zeros((nv, r));
    let mut right = Array2::<f64>::zeros((nv, r));
    for sentence in &corpus.sentences {
        let ids: Vec<usize> = sentence
            .iter()
            .map(|w| vocab.index_of(w).ok_or_else(|| Error::UnknownWord(w.clone())))
            .collect::<Result<_>>()?;
        for pair in ids.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            // a is immediately left of b.
            if a < r {
                left[[b, a]] += 1.0;
            }
            if b < r {
                right[[a, b]] += 1.0;
            }
        }
    }
    let rows: Vec<String> = vocab.words().to_vec();
    let context = &vocab.words()[..r];
    let left_cols = context.iter().map(|w| format!("L:{w}")).collect();
    let right_cols = context.iter().map(|w| format!("R:{w}")).collect();
    Ok(WordContextVectors {
        left: CountMatrix::new(left, rows.clone(), left_cols, MatrixState::RAW)?,
        right: CountMatrix::new(right, rows, right_cols, MatrixState::RAW)?,
        r,
    })
}

impl WordContextVectors {
    /// Tf-idf weights and row-normalizes the left and right matrices
    /// independently. Zero rows stay zero.
    pub fn weighted(&self, variant: TfIdfVariant) -> Result<WordContextVectors> {
        let left = normalize_rows(&apply_tfidf(&self.left, variant)?).matrix;
        let right = normalize_rows(&apply_tfidf(&self.right, variant)?).matrix;
        Ok(WordContextVectors { left, right, r: self.r })
    }
}

fn label_index(labels: &[String]) -> HashMap<&str, usize> {
    labels.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect()
}

/// Row for `(w1, w2, w3)` is `[left(w1); right(w1); left(w2); right(w2);
/// left(w3); right(w3)]`, `6r` columns, in sample order. The word vectors
/// must already be weighted and normalized.
pub fn assemble_trigram_matrix_1layer(
    trigrams: &TrigramSample,
    wv: &WordContextVectors,
) -> Result<CountMatrix> {
    if !wv.left.state.normalized || !wv.right.state.normalized {
        return Err(Error::WrongState {
            expected: "tfidf+normalized",
            found: wv.left.state.name(),
        });
    }
    let r = wv.r;
    let index = label_index(&wv.left.row_labels);
    let mut values = Array2::<f64>::zeros((trigrams.len(), 6 * r));
    for (mut row, t) in values.axis_iter_mut(Axis(0)).zip(&trigrams.trigrams) {
        for (p, w) in t.iter().enumerate() {
            let i = *index.get(w.as_str()).ok_or_else(|| Error::UnknownWord(w.clone()))?;
            row.slice_mut(s![2 * p * r..(2 * p + 1) * r]).assign(&wv.left.values.row(i));
            row.slice_mut(s![(2 * p + 1) * r..(2 * p + 2) * r]).assign(&wv.right.values.row(i));
        }
    }
    let col_labels = (1..=3)
        .flat_map(|p| {
            wv.left
                .col_labels
                .iter()
                .chain(&wv.right.col_labels)
                .map(move |c| format!("w{p}:{c}"))
        })
        .collect();
    CountMatrix::new(
        values,
        trigrams.labels(),
        col_labels,
        MatrixState { weighting: wv.left.state.weighting, normalized: false },
    )
}

/// `|V| × 2r` matrix whose row `w` is `[left(w); right(w)]`.
pub fn assemble_word_matrix(wv: &WordContextVectors) -> Result<CountMatrix> {
    let values = ndarray::concatenate(Axis(1), &[wv.left.values.view(), wv.right.values.view()])
        .map_err(|e| Error::Shape(e.to_string()))?;
    let col_labels = wv.left.col_labels.iter().chain(&wv.right.col_labels).cloned().collect();
    let state = if wv.left.state == MatrixState::RAW {
        MatrixState::RAW
    } else {
        MatrixState { weighting: wv.left.state.weighting, normalized: false }
    };
    CountMatrix::new(values, wv.left.row_labels.clone(), col_labels, state)
}

/// Row for `(w1, w2, w3)` is `[e(w1); e(w2); e(w3)]`, `3k` columns.
pub fn assemble_trigram_matrix_2layer(
    trigrams: &TrigramSample,
    word_embeddings: &Representation,
) -> Result<CountMatrix> {
    let k = word_embeddings.k();
    let index = label_index(&word_embeddings.row_labels);
    let mut values = Array2::<f64>::zeros((trigrams.len(), 3 * k));
    for (mut row, t) in values.axis_iter_mut(Axis(0)).zip(&trigrams.trigrams) {
        for (p, w) in t.iter().enumerate() {
            let i = *index.get(w.as_str()).ok_or_else(|| Error::UnknownWord(w.clone()))?;
            row.slice_mut(s![p * k..(p + 1) * k]).assign(&word_embeddings.matrix.row(i));
        }
    }
    let col_labels = (1..=3).flat_map(|p| (0..k).map(move |j| format!("w{p}:e{j}"))).collect();
    CountMatrix::new(
        values,
        trigrams.labels(),
        col_labels,
        MatrixState { weighting: Weighting::Embedding, normalized: false },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, sample_trigrams, tokenize};
    use ndarray::array;

    fn raw(values: Array2<f64>) -> CountMatrix {
        let rows = (0..values.nrows()).map(|i| format!("r{i}")).collect();
        let cols = (0..values.ncols()).map(|i| format!("c{i}")).collect();
        CountMatrix::new(values, rows, cols, MatrixState::RAW).unwrap()
    }

    #[test]
    fn tfidf_two_by_two() {
        let m = raw(array![[1.0, 1.0], [0.0, 1.0]]);
        let w = apply_tfidf(&m, TfIdfVariant::Standard).unwrap();
        assert_eq!(w.values, array![[2f64.ln(), 0.0], [0.0, 0.0]]);
        assert_eq!(w.state, MatrixState::TFIDF);
    }

    #[test]
    fn tfidf_zero_and_ubiquitous_columns_vanish() {
        let m = raw(array![[0.0, 3.0, 1.0], [0.0, 2.0, 0.0], [0.0, 5.0, 0.0]]);
        let w = apply_tfidf(&m, TfIdfVariant::Standard).unwrap();
        assert!(w.values.column(0).iter().all(|&v| v == 0.0));
        assert!(w.values.column(1).iter().all(|&v| v == 0.0));
        assert!((w.values[[0, 2]] - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tfidf_requires_raw_input() {
        let m = apply_tfidf(&raw(array![[1.0]]), TfIdfVariant::Standard).unwrap();
        assert!(matches!(
            apply_tfidf(&m, TfIdfVariant::Standard),
            Err(Error::WrongState { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let out = normalize_rows(&raw(array![[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]]));
        assert_eq!(out.matrix.values.row(0).to_vec(), vec![0.6, 0.8]);
        assert_eq!(out.zero_rows, vec![1]);
        assert_eq!(out.matrix.values.row(2).to_vec(), vec![1.0, 0.0]);
        assert!(out.matrix.state.normalized);
    }

    fn toy() -> (TokenizedCorpus, Vocabulary) {
        let c = tokenize(b"a b a b", "toy").unwrap();
        let v = build_vocab(&c).unwrap();
        (c, v)
    }

    #[test]
    fn context_counts_hand_scan() {
        let (c, v) = toy();
        assert_eq!(v.rank("a"), Some(1));
        let wv = build_context_counts(&c, &v, 2).unwrap();
        // b is preceded by a twice; a is preceded by b once (position 2).
        assert_eq!(wv.left.values, array![[0.0, 1.0], [2.0, 0.0]]);
        // a is followed by b twice; b is followed by a once.
        assert_eq!(wv.right.values, array![[0.0, 2.0], [1.0, 0.0]]);
    }

    #[test]
    fn sentence_boundaries_contribute_nothing() {
        let c = tokenize(b"x y\ny x", "toy").unwrap();
        let v = build_vocab(&c).unwrap();
        let wv = build_context_counts(&c, &v, 2).unwrap();
        assert_eq!(wv.left.values.sum(), 2.0);
        assert_eq!(wv.right.values.sum(), 2.0);
    }

    #[test]
    fn context_dim_cannot_exceed_vocab() {
        let (c, v) = toy();
        assert!(matches!(build_context_counts(&c, &v, 3), Err(Error::ContextTooWide { .. })));
    }

    #[test]
    fn word_matrix_shape_and_zero_row() {
        let c = tokenize(b"a b\nz", "toy").unwrap();
        let v = build_vocab(&c).unwrap();
        let wv = build_context_counts(&c, &v, 2).unwrap();
        let m = assemble_word_matrix(&wv).unwrap();
        assert_eq!(m.values.dim(), (3, 4));
        let z = v.index_of("z").unwrap();
        assert_eq!(m.zero_rows(), vec![z]);
    }

    #[test]
    fn one_layer_rows_concatenate_six_blocks() {
        let c = tokenize(b"a a a b\nb a b b a", "toy").unwrap();
        let v = build_vocab(&c).unwrap();
        let wv = build_context_counts(&c, &v, 2).unwrap().weighted(TfIdfVariant::Smooth).unwrap();
        let t = sample_trigrams(&c, 5, 0).unwrap();
        let m = assemble_trigram_matrix_1layer(&t, &wv).unwrap();
        assert_eq!(m.values.dim(), (5, 12));
        let aaa = t.trigrams.iter().position(|x| x == &["a", "a", "a"].map(String::from)).unwrap();
        let row = m.values.row(aaa);
        for p in 0..3 {
            assert_eq!(row.slice(s![4 * p..4 * p + 4]), row.slice(s![0..4]));
        }
        assert!(assemble_trigram_matrix_1layer(&t, &build_context_counts(&c, &v, 2).unwrap())
            .is_err());
    }
}
