use std::collections::HashSet;

use ndarray::Array2;
use proptest::prelude::*;

use svdstack::corpus::{
    build_vocab, sample_trigrams, sample_word_pairs, tokenize, PairSampling, TokenizedCorpus,
    TrigramSample,
};
use svdstack::diagnostics::{
    best_threshold, column_correlations, focality_measure, log_abs_histogram, pair_accuracy,
    sign_test, CoefficientSet,
};
use svdstack::persist::{decode_matrix, encode_matrix, read_matrix, write_matrix, MatrixMeta};
use svdstack::svdstack::{
    svd2_coordinates, svd2_rotate, truncated_svd, Layer, Objects, Provenance, Representation,
    Stage, SvdOptions,
};
use svdstack::vectors::{
    apply_tfidf, assemble_trigram_matrix_1layer, assemble_trigram_matrix_2layer,
    assemble_word_matrix, build_context_counts, normalize_rows, CountMatrix, MatrixState,
    TfIdfVariant,
};

const WORDS: [&str; 7] = ["the", "film", "is", "good", "bad", "a", "plot"];

fn corpus_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(0..WORDS.len(), 1..9), 1..30).prop_map(|sents| {
        sents
            .iter()
            .map(|s| s.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn corpus(text: &str) -> TokenizedCorpus {
    tokenize(text.as_bytes(), "prop").unwrap()
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d)
            .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

fn labelled(values: Array2<f64>) -> CountMatrix {
    let rows = (0..values.nrows()).map(|i| format!("r{i}")).collect();
    let cols = (0..values.ncols()).map(|i| format!("c{i}")).collect();
    CountMatrix::new(values, rows, cols, MatrixState::RAW).unwrap()
}

fn unit_rows(mut m: Array2<f64>) -> Array2<f64> {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        } else {
            row[0] = 1.0;
        }
    }
    m
}

fn representation(m: Array2<f64>) -> Representation {
    let labels = (0..m.nrows()).map(|i| i.to_string()).collect();
    Representation {
        matrix: m,
        provenance: Provenance { stage: Stage::Svd1, layer: Layer::One, objects: Objects::Trigrams },
        row_labels: labels,
    }
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_trigrams_are_distinct_and_occur_in_the_corpus(text in corpus_text(), seed: u64) {
        let c = corpus(&text);
        let all = svdstack::corpus::distinct_trigrams(&c);
        prop_assume!(!all.is_empty());
        let n = 1 + (seed as usize) % all.len();
        let s = sample_trigrams(&c, n, seed).unwrap();
        prop_assert_eq!(s.len(), n);
        let unique: HashSet<_> = s.trigrams.iter().collect();
        prop_assert_eq!(unique.len(), n);
        for t in &s.trigrams {
            prop_assert!(c.sentences.iter().any(|sent| sent.windows(3).any(|w| w == t.as_slice())));
        }
        prop_assert_eq!(sample_trigrams(&c, n, seed).unwrap(), s);
    }

    #[test]
    fn vocabulary_ranks_follow_frequency(text in corpus_text()) {
        let c = corpus(&text);
        let v = build_vocab(&c).unwrap();
        prop_assert!(v.freqs().windows(2).all(|w| w[0] >= w[1]));
        let tokens: HashSet<&String> = c.sentences.iter().flatten().collect();
        prop_assert_eq!(tokens.len(), v.len());
        for (i, w) in v.words().iter().enumerate() {
            prop_assert_eq!(v.rank(w), Some(i + 1));
        }
        prop_assert_eq!(v.freqs().iter().sum::<u64>() as usize, c.num_tokens());
    }

    #[test]
    fn word_pairs_respect_eligibility(text in corpus_text(), seed: u64, min_occ in 1usize..3) {
        let c = corpus(&text);
        let v = build_vocab(&c).unwrap();
        let all = svdstack::corpus::distinct_trigrams(&c).len();
        prop_assume!(all > 0);
        let s = sample_trigrams(&c, all, seed).unwrap();
        let params = PairSampling { n_pairs: 1, freq_lo: 1, freq_hi: 1000, min_occurrences: min_occ, seed };
        if let Ok(p) = sample_word_pairs(&v, &s, params) {
            let central = s.central_counts();
            let words: Vec<&String> = p.pairs.iter().flat_map(|(a, b)| [a, b]).collect();
            prop_assert_eq!(words.iter().collect::<HashSet<_>>().len(), words.len());
            for w in words {
                prop_assert!(central[w.as_str()] >= min_occ);
            }
            prop_assert_eq!(sample_word_pairs(&v, &s, params).unwrap(), p);
        }
    }

    #[test]
    fn context_counts_match_a_direct_scan(text in corpus_text(), r in 1usize..5) {
        let c = corpus(&text);
        let v = build_vocab(&c).unwrap();
        prop_assume!(r <= v.len());
        let wv = build_context_counts(&c, &v, r).unwrap();
        let context: HashSet<&str> = v.words()[..r].iter().map(String::as_str).collect();
        let mut left = 0.0;
        let mut right = 0.0;
        for sent in &c.sentences {
            for w in sent.windows(2) {
                if context.contains(w[0].as_str()) { left += 1.0; }
                if context.contains(w[1].as_str()) { right += 1.0; }
            }
        }
        prop_assert_eq!(wv.left.values.sum(), left);
        prop_assert_eq!(wv.right.values.sum(), right);
    }

    #[test]
    fn tfidf_keeps_zero_pattern(m in matrix(12, 8)) {
        let raw = labelled(m.mapv(|v| v.abs().floor()));
        let w = apply_tfidf(&raw, TfIdfVariant::Standard).unwrap();
        let n = raw.nrows();
        for j in 0..raw.ncols() {
            let df = raw.values.column(j).iter().filter(|&&v| v != 0.0).count();
            for i in 0..n {
                let zero_out = w.values[[i, j]] == 0.0;
                prop_assert_eq!(zero_out, raw.values[[i, j]] == 0.0 || df == n);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(m in matrix(12, 8)) {
        let once = normalize_rows(&labelled(m)).matrix;
        let twice = normalize_rows(&once).matrix;
        prop_assert!(max_abs(&(&once.values - &twice.values)) <= 1e-15);
    }

    #[test]
    fn assembled_shapes(text in corpus_text(), seed: u64, r in 1usize..4) {
        let c = corpus(&text);
        let v = build_vocab(&c).unwrap();
        let all = svdstack::corpus::distinct_trigrams(&c).len();
        prop_assume!(all > 0 && r <= v.len());
        let s = sample_trigrams(&c, 1 + seed as usize % all, seed).unwrap();
        let wv = build_context_counts(&c, &v, r).unwrap().weighted(TfIdfVariant::Standard).unwrap();
        prop_assert_eq!(assemble_trigram_matrix_1layer(&s, &wv).unwrap().values.dim(), (s.len(), 6 * r));
        prop_assert_eq!(assemble_word_matrix(&wv).unwrap().values.dim(), (v.len(), 2 * r));
        let k = 2;
        let emb = Representation {
            matrix: Array2::from_elem((v.len(), k), 0.5f64.sqrt()),
            provenance: Provenance { stage: Stage::Svd1, layer: Layer::Two, objects: Objects::Words },
            row_labels: v.words().to_vec(),
        };
        prop_assert_eq!(assemble_trigram_matrix_2layer(&s, &emb).unwrap().values.dim(), (s.len(), 3 * k));
    }

    #[test]
    fn truncated_svd_is_orthonormal_sorted_and_optimal(m in matrix(20, 20), k_seed: usize) {
        let k = 1 + k_seed % m.nrows().min(m.ncols());
        let f = truncated_svd(m.view(), k, &SvdOptions::default()).unwrap();
        prop_assert!(svdstack::linalg::orthogonality_residual(f.u.view()) < 1e-10);
        prop_assert!(svdstack::linalg::orthogonality_residual(f.v.view()) < 1e-10);
        prop_assert!(f.s.windows(2).into_iter().all(|w| w[0] >= w[1]) && f.s.iter().all(|&s| s >= 0.0));

        let reference = {
            let a = nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
            let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
            s.sort_by(|x, y| y.total_cmp(x));
            s
        };
        let optimal = reference[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let err = (&m - &f.reconstruct()).iter().map(|v| v * v).sum::<f64>().sqrt();
        let total = reference.iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!((err - optimal).abs() <= 1e-8 * total.max(1e-300), "{} vs {}", err, optimal);
    }

    #[test]
    fn rotation_preserves_gram_and_unit_rows(m in matrix(30, 6)) {
        prop_assume!(m.nrows() >= 2 && m.nrows() >= m.ncols());
        let x = unit_rows(m);
        let rep = representation(x.clone());
        let rotated = svd2_coordinates(&rep).unwrap();
        let gram = x.dot(&x.t());
        prop_assert!(max_abs(&(&gram - &rotated.dot(&rotated.t()))) <= 1e-8);
        let out = svd2_rotate(&rep).unwrap();
        for row in out.matrix.rows() {
            let norm = row.dot(&row).sqrt();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() <= 1e-10);
        }
        let corr = column_correlations(&out).unwrap();
        let k = out.k();
        let undefined = corr.constant_columns.len();
        for (set, expected) in [(CoefficientSet::All, k * k), (CoefficientSet::OffDiagonal, k * k - k)] {
            let h = log_abs_histogram(&corr, 0.5, 1e-12, set).unwrap();
            let binned: usize = h.bins.iter().map(|b| b.count).sum();
            prop_assert_eq!(binned + h.excluded_zero, h.summarized);
            if undefined == 0 {
                prop_assert_eq!(h.summarized, expected);
            }
        }
        prop_assert!(corr.matrix.iter().all(|c| c.is_nan() || c.abs() <= 1.0));
    }

    #[test]
    fn stump_beats_majority_baseline(
        points in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)
    ) {
        let values: Vec<f64> = points.iter().map(|p| p.0).collect();
        let labels: Vec<bool> = points.iter().map(|p| p.1).collect();
        let pos = labels.iter().filter(|&&l| l).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let rule = best_threshold(&values, &labels).unwrap();
        prop_assert!(rule.correct >= pos.max(labels.len() - pos));
        let recount = values.iter().zip(&labels).filter(|(&v, &l)| rule.predict(v) == l).count();
        prop_assert_eq!(recount, rule.correct);
    }

    #[test]
    fn pair_accuracy_ignores_column_order_and_sign(m in matrix(20, 5), perm_seed: u64) {
        let n = m.nrows();
        prop_assume!(n >= 2);
        let sample = TrigramSample {
            trigrams: (0..n).map(|i| ["x".into(), if i % 2 == 0 { "a".into() } else { "b".into() }, i.to_string()]).collect(),
            seed: 0,
            requested: n,
        };
        let base = pair_accuracy(&Representation { row_labels: sample.labels(), ..representation(m.clone()) }, &sample, ("a", "b")).unwrap();

        let k = m.ncols();
        let mut order: Vec<usize> = (0..k).collect();
        order.rotate_left(perm_seed as usize % k);
        let mut changed = m.select(ndarray::Axis(1), &order);
        let flip = perm_seed as usize % k;
        changed.column_mut(flip).mapv_inplace(|v| -v);
        let other = pair_accuracy(&Representation { row_labels: sample.labels(), ..representation(changed) }, &sample, ("a", "b")).unwrap();
        prop_assert_eq!(base.correct, other.correct);
    }

    #[test]
    fn best_single_dimension_accuracy_gives_focality_one(m in matrix(16, 3)) {
        let n = m.nrows();
        prop_assume!(n >= 2);
        let sample = TrigramSample {
            trigrams: (0..n).map(|i| ["x".into(), if i < n / 2 { "a".into() } else { "b".into() }, i.to_string()]).collect(),
            seed: 0,
            requested: n,
        };
        let rep = Representation { row_labels: sample.labels(), ..representation(m) };
        let best = pair_accuracy(&rep, &sample, ("a", "b")).unwrap();
        let r = focality_measure(&rep, &sample, ("a", "b"), best.accuracy(), 2).unwrap();
        prop_assert_eq!(r.k_star, Some(1));
        prop_assert!(r.witness.unwrap().accuracy() >= best.accuracy());
    }

    #[test]
    fn sign_test_is_symmetric_and_monotone(n in 0u64..300) {
        let mut previous = f64::INFINITY;
        for w in (n / 2 + n % 2)..=n {
            let l = n - w;
            let p = sign_test(w, l);
            prop_assert_eq!(p, sign_test(l, w));
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert!(p <= previous);
            previous = p;
        }
    }

    #[test]
    fn mat1_round_trip_is_bit_identical(m in matrix(9, 9), seed: u64) {
        let bytes = encode_matrix(m.view()).unwrap();
        prop_assert_eq!(bytes.len(), 24 + 8 * m.len());
        let back = decode_matrix(&bytes, std::path::Path::new("m")).unwrap();
        prop_assert_eq!(encode_matrix(back.view()).unwrap(), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mat");
        let meta = MatrixMeta { k: Some(m.ncols()), seed: Some(seed), ..Default::default() };
        write_matrix(m.view(), &meta, &path).unwrap();
        let (read, read_meta) = read_matrix(&path).unwrap();
        prop_assert!(read.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(read_meta, Some(meta));
    }
}
