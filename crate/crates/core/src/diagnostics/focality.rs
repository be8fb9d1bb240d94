//! Smallest number of dimensions whose conjunction of threshold predicates
//! reaches a target accuracy on a word-pair task.
//!
//! The search is exhaustive over dimension subsets, so its cost grows as
//! `C(k, s)` times `(2n)^(s-1)` for subsets of size `s`; sizes above 3 are
//! refused.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compare::pair_rows;
use super::threshold::{sorted_order, sweep, Direction};
use crate::corpus::TrigramSample;
use crate::error::{Error, Result};
use crate::svdstack::Representation;

pub const MAX_SUBSET_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub dimension: usize,
    pub theta: f64,
    pub direction: Direction,
}

/// Predicts `target_first` (the first word of the pair when `true`) iff
/// every predicate holds, and the other class otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjunctiveRule {
    pub predicates: Vec<Predicate>,
    pub target_first: bool,
    pub correct: usize,
    pub total: usize,
}

impl ConjunctiveRule {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    /// `true` when the rule predicts the first class for `row`.
    pub fn predict(&self, row: &[f64]) -> bool {
        let holds = self.predicates.iter().all(|p| p.direction.holds(row[p.dimension], p.theta));
        holds == self.target_first
    }

    /// Recounts correct predictions on `values` (rows × dims).
    pub fn count_correct(&self, values: ArrayView2<f64>, labels: &[bool]) -> usize {
        values
            .axis_iter(Axis(0))
            .zip(labels)
            .filter(|(row, &l)| self.predict(&row.to_vec()) == l)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalityResult {
    pub theta: f64,
    pub max_subset: usize,
    /// Smallest subset size reaching `theta`, if any size up to the cap does.
    pub k_star: Option<usize>,
    pub witness: Option<ConjunctiveRule>,
}

/// Candidate thresholds on one dimension: below the minimum, between each
/// pair of consecutive distinct values, and above the maximum.
fn candidate_thresholds(values: &[f64], order: &[usize]) -> Vec<f64> {
    let mut out = vec![values[order[0]] - 1.0];
    for w in order.windows(2) {
        let (lo, hi) = (values[w[0]], values[w[1]]);
        if lo != hi {
            let mid = (lo + hi) / 2.0;
            out.push(if mid >= hi { lo } else { mid });
        }
    }
    out.push(values[*order.last().expect("non-empty")] + 1.0);
    out
}

struct Dim {
    index: usize,
    values: Vec<f64>,
    order: Vec<usize>,
    thresholds: Vec<f64>,
}

fn prepare_dims(values: ArrayView2<f64>) -> Vec<Dim> {
    values
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(index, col)| {
            let values = col.to_vec();
            let order = sorted_order(&values);
            let thresholds = candidate_thresholds(&values, &order);
            Dim { index, values, order, thresholds }
        })
        .collect()
}

struct Search<'a> {
    dims: Vec<&'a Dim>,
    target: Vec<bool>,
    nontarget_total: usize,
    best_correct: usize,
    best: Vec<Predicate>,
    found: bool,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, active: &[bool], prefix: &mut Vec<Predicate>) {
        let dim = self.dims[level];
        if level + 1 == self.dims.len() {
            let split = sweep(&dim.values, &self.target, &dim.order, Some(active));
            let nontarget_active =
                active.iter().zip(&self.target).filter(|(&a, &t)| a && !t).count();
            let correct = split.correct + (self.nontarget_total - nontarget_active);
            if !self.found || correct > self.best_correct {
                self.found = true;
                self.best_correct = correct;
                self.best = prefix.clone();
                self.best.push(Predicate {
                    dimension: dim.index,
                    theta: split.theta,
                    direction: split.direction,
                });
            }
            return;
        }
        let mut next = vec![false; active.len()];
        for &theta in &dim.thresholds {
            for direction in [Direction::Greater, Direction::Less] {
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot = active[i] && direction.holds(dim.values[i], theta);
                }
                prefix.push(Predicate { dimension: dim.index, theta, direction });
                self.descend(level + 1, &next, prefix);
                prefix.pop();
            }
        }
    }
}

fn best_on_dims(dims: Vec<&Dim>, labels: &[bool]) -> ConjunctiveRule {
    let n = labels.len();
    let mut winner: Option<ConjunctiveRule> = None;
    for target_first in [true, false] {
        let target: Vec<bool> = labels.iter().map(|&l| l == target_first).collect();
        let nontarget_total = target.iter().filter(|&&t| !t).count();
        let mut search = Search {
            dims: dims.clone(),
            target,
            nontarget_total,
            best_correct: 0,
            best: Vec::new(),
            found: false,
        };
        search.descend(0, &vec![true; n], &mut Vec::new());
        if winner.as_ref().is_none_or(|w| search.best_correct > w.correct) {
            winner = Some(ConjunctiveRule {
                predicates: search.best,
                target_first,
                correct: search.best_correct,
                total: n,
            });
        }
    }
    winner.expect("at least one class assignment")
}

/// Most accurate conjunctive rule over exactly the dimensions in `subset`.
pub fn best_conjunction(
    values: ArrayView2<f64>,
    labels: &[bool],
    subset: &[usize],
) -> Result<ConjunctiveRule> {
    check_inputs(values, labels)?;
    if subset.is_empty() || subset.iter().any(|&d| d >= values.ncols()) {
        return Err(Error::Shape(format!("invalid dimension subset {subset:?}")));
    }
    let dims = prepare_dims(values);
    Ok(best_on_dims(subset.iter().map(|&d| &dims[d]).collect(), labels))
}

fn check_inputs(values: ArrayView2<f64>, labels: &[bool]) -> Result<()> {
    if values.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", values.nrows(), labels.len())));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::EmptyClass);
    }
    Ok(())
}

/// All `size`-element subsets of `0..k` in lexicographic order.
pub fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size == 0 || size > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.clone());
        let mut i = size;
        while i > 0 && idx[i - 1] == k - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Searches subset sizes `1..=max_subset` in order and returns the first
/// size at which some subset reaches accuracy `theta`, with the first such
/// subset in lexicographic order as witness.
pub fn focality_on(
    values: ArrayView2<f64>,
    labels: &[bool],
    theta: f64,
    max_subset: usize,
) -> Result<FocalityResult> {
    if max_subset > MAX_SUBSET_CAP {
        return Err(Error::SubsetCapTooLarge(max_subset));
    }
    check_inputs(values, labels)?;
    let dims = prepare_dims(values);
    for size in 1..=max_subset.min(dims.len()) {
        let hit = subsets(dims.len(), size)
            .into_par_iter()
            .map(|s| best_on_dims(s.iter().map(|&d| &dims[d]).collect(), labels))
            .find_first(|rule| rule.accuracy() >= theta);
        if let Some(rule) = hit {
            return Ok(FocalityResult { theta, max_subset, k_star: Some(size), witness: Some(rule) });
        }
    }
    Ok(FocalityResult { theta, max_subset, k_star: None, witness: None })
}

/// Focality of `rep` on the task of telling trigrams centred on `pair.0`
/// from those centred on `pair.1`.
pub fn focality_measure(
    rep: &Representation,
    trigrams: &TrigramSample,
    pair: (&str, &str),
    theta: f64,
    max_subset: usize,
) -> Result<FocalityResult> {
    if max_subset > MAX_SUBSET_CAP {
        return Err(Error::SubsetCapTooLarge(max_subset));
    }
    if rep.nrows() != trigrams.len() {
        return Err(Error::Shape(format!(
            "representation has {} rows but the trigram sample has {}",
            rep.nrows(),
            trigrams.len()
        )));
    }
    let (rows, labels) = pair_rows(trigrams, pair.0, pair.1)?;
    let values = rep.matrix.select(Axis(0), &rows);
    focality_on(values.view(), &labels, theta, max_subset)
}
