use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sign_test::{sign_test_with, Sidedness};
use super::threshold::{best_threshold, ThresholdRule};
use crate::corpus::{TrigramSample, WordPairSet};
use crate::error::{Error, Result};
use crate::svdstack::Representation;

/// Rows of the sample whose central word is `a` (labelled `true`) or `b`
/// (labelled `false`), in sample order.
pub fn pair_rows(trigrams: &TrigramSample, a: &str, b: &str) -> Result<(Vec<usize>, Vec<bool>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, t) in trigrams.trigrams.iter().enumerate() {
        if t[1] == a {
            rows.push(i);
            labels.push(true);
        } else if t[1] == b {
            rows.push(i);
            labels.push(false);
        }
    }
    if !labels.iter().any(|&l| l) {
        return Err(Error::MissingClass(a.to_string()));
    }
    if !labels.iter().any(|&l| !l) {
        return Err(Error::MissingClass(b.to_string()));
    }
    Ok((rows, labels))
}

fn check_alignment(rep: &Representation, trigrams: &TrigramSample) -> Result<()> {
    if rep.nrows() != trigrams.len() {
        return Err(Error::Shape(format!(
            "representation has {} rows but the trigram sample has {}",
            rep.nrows(),
            trigrams.len()
        )));
    }
    if rep.row_labels.len() == trigrams.len() {
        let mismatch = rep
            .row_labels
            .iter()
            .zip(&trigrams.trigrams)
            .position(|(label, t)| *label != t.join(" "));
        if let Some(i) = mismatch {
            return Err(Error::Shape(format!("row {i} is `{}`, not a sampled trigram", rep.row_labels[i])));
        }
    }
    Ok(())
}

/// Best single-dimension stump separating trigrams centred on `a` from
/// those centred on `b`. Ties between dimensions go to the lowest index.
pub fn pair_accuracy(
    rep: &Representation,
    trigrams: &TrigramSample,
    pair: (&str, &str),
) -> Result<ThresholdRule> {
    check_alignment(rep, trigrams)?;
    let (rows, labels) = pair_rows(trigrams, pair.0, pair.1)?;
    let mut best: Option<ThresholdRule> = None;
    for dim in 0..rep.k() {
        let column = rep.matrix.column(dim);
        let values: Vec<f64> = rows.iter().map(|&r| column[r]).collect();
        let rule = ThresholdRule { dimension: dim, ..best_threshold(&values, &labels)? };
        if best.is_none_or(|b| rule.correct > b.correct) {
            best = Some(rule);
        }
    }
    best.ok_or_else(|| Error::Shape("representation has no dimensions".into()))
}

/// An exact accuracy `correct / total` with its decimal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub value: f64,
}

impl From<&ThresholdRule> for Accuracy {
    fn from(r: &ThresholdRule) -> Self {
        Accuracy { correct: r.correct, total: r.total, value: r.accuracy() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub pair: (String, String),
    pub best_accuracy_a: Accuracy,
    pub best_accuracy_b: Accuracy,
    pub best_rule_a: ThresholdRule,
    pub best_rule_b: ThresholdRule,
}

/// Per-pair best accuracies of two representations with win/tie/loss counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub per_pair: Vec<PairComparison>,
    pub wins_a: usize,
    pub ties: usize,
    pub wins_b: usize,
    /// Mean of `accuracy_a − accuracy_b`, in accuracy units.
    pub mean_accuracy_diff: f64,
    /// `(mean_a − mean_b) / mean_b`.
    pub mean_relative_diff: f64,
    pub p_value: f64,
    pub sidedness: Sidedness,
}

pub fn compare_representations(
    rep_a: &Representation,
    rep_b: &Representation,
    trigrams: &TrigramSample,
    pairs: &WordPairSet,
    sidedness: Sidedness,
) -> Result<DiscriminationReport> {
    check_alignment(rep_a, trigrams)?;
    check_alignment(rep_b, trigrams)?;
    let per_pair: Vec<PairComparison> = pairs
        .pairs
        .par_iter()
        .map(|(a, b)| {
            let ra = pair_accuracy(rep_a, trigrams, (a, b))?;
            let rb = pair_accuracy(rep_b, trigrams, (a, b))?;
            Ok(PairComparison {
                pair: (a.clone(), b.clone()),
                best_accuracy_a: Accuracy::from(&ra),
                best_accuracy_b: Accuracy::from(&rb),
                best_rule_a: ra,
                best_rule_b: rb,
            })
        })
        .collect::<Result<_>>()?;

    // Same rows per pair, so comparing numerators is exact.
    let wins_a = per_pair.iter().filter(|p| p.best_rule_a.correct > p.best_rule_b.correct).count();
    let wins_b = per_pair.iter().filter(|p| p.best_rule_a.correct < p.best_rule_b.correct).count();
    let ties = per_pair.len() - wins_a - wins_b;
    let n = per_pair.len().max(1) as f64;
    let mean_a = per_pair.iter().map(|p| p.best_accuracy_a.value).sum::<f64>() / n;
    let mean_b = per_pair.iter().map(|p| p.best_accuracy_b.value).sum::<f64>() / n;
    let mean_accuracy_diff = per_pair
        .iter()
        .map(|p| p.best_accuracy_a.value - p.best_accuracy_b.value)
        .sum::<f64>()
        / n;
    Ok(DiscriminationReport {
        per_pair,
        wins_a,
        ties,
        wins_b,
        mean_accuracy_diff,
        mean_relative_diff: if mean_b > 0.0 { (mean_a - mean_b) / mean_b } else { 0.0 },
        p_value: sign_test_with(wins_a as u64, wins_b as u64, sidedness),
        sidedness,
    })
}
