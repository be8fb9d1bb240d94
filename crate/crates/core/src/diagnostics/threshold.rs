use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Predicts the target class when `v > theta`.
    Greater,
    /// Predicts the target class when `v < theta`.
    Less,
}

impl Direction {
    pub fn holds(self, v: f64, theta: f64) -> bool {
        match self {
            Direction::Greater => v > theta,
            Direction::Less => v < theta,
        }
    }
}

/// A single-dimension decision stump with its exact accuracy
/// `correct / total` on the set it was fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub dimension: usize,
    pub theta: f64,
    pub direction: Direction,
    pub correct: usize,
    pub total: usize,
}

impl ThresholdRule {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    /// `true` when the rule predicts the first class.
    pub fn predict(&self, v: f64) -> bool {
        self.direction.holds(v, self.theta)
    }
}

/// Best stump over one set of points, restricted to `active` ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Split {
    pub theta: f64,
    pub direction: Direction,
    /// Active points classified correctly.
    pub correct: usize,
}

/// Sweeps every threshold between consecutive distinct active values, plus
/// one sentinel below the minimum and one above the maximum, in both
/// directions. `order` must sort all points by value.
///
/// Ties in accuracy go to the smaller threshold, then to `Greater`.
/// Thresholds are midpoints of consecutive values; two adjacent floats
/// cannot be separated.
pub(crate) fn sweep(
    values: &[f64],
    target: &[bool],
    order: &[usize],
    active: Option<&[bool]>,
) -> Split {
    let is_active = |i: usize| active.is_none_or(|a| a[i]);
    let act: Vec<usize> = order.iter().copied().filter(|&i| is_active(i)).collect();
    if act.is_empty() {
        return Split { theta: 0.0, direction: Direction::Greater, correct: 0 };
    }
    let pos = act.iter().filter(|&&i| target[i]).count();
    let neg = act.len() - pos;
    let (mut pos_above, mut neg_above) = (pos, neg);

    let mut best = Split { theta: values[act[0]] - 1.0, direction: Direction::Greater, correct: pos };
    if neg > best.correct {
        best = Split { direction: Direction::Less, correct: neg, ..best };
    }

    let mut i = 0;
    while i < act.len() {
        let v = values[act[i]];
        while i < act.len() && values[act[i]] == v {
            if target[act[i]] {
                pos_above -= 1;
            } else {
                neg_above -= 1;
            }
            i += 1;
        }
        let theta = if i < act.len() {
            let next = values[act[i]];
            let mut mid = (v + next) / 2.0;
            if !mid.is_finite() {
                mid = v + (next - v) / 2.0;
            }
            if mid >= next { v } else { mid }
        } else {
            v + 1.0
        };
        let greater = pos_above + (neg - neg_above);
        let less = (pos - pos_above) + neg_above;
        if greater > best.correct {
            best = Split { theta, direction: Direction::Greater, correct: greater };
        }
        if less > best.correct {
            best = Split { theta, direction: Direction::Less, correct: less };
        }
    }
    best
}

pub(crate) fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Exhaustive search for the most accurate stump separating the points
/// labelled `true` from those labelled `false`.
pub fn best_threshold(values: &[f64], labels: &[bool]) -> Result<ThresholdRule> {
    if values.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} values but {} labels",
            values.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::EmptyClass);
    }
    let order = sorted_order(values);
    let split = sweep(values, labels, &order, None);
    Ok(ThresholdRule {
        dimension: 0,
        theta: split.theta,
        direction: split.direction,
        correct: split.correct,
        total: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let r = best_threshold(&[0.8, 0.9, 0.1, 0.2], &[true, true, false, false]).unwrap();
        assert_eq!((r.correct, r.total), (4, 4));
        assert_eq!(r.theta, 0.5);
        assert_eq!(r.direction, Direction::Greater);
    }

    #[test]
    fn identical_values_give_majority() {
        let r = best_threshold(&[0.3; 5], &[true, false, false, true, false]).unwrap();
        assert_eq!(r.correct, 3);
        assert_eq!(r.direction, Direction::Less);
        assert!(r.theta < 0.3);
    }

    #[test]
    fn interleaved_classes() {
        let r = best_threshold(&[0.1, 0.9, 0.5], &[true, true, false]).unwrap();
        assert_eq!((r.correct, r.total), (2, 3));
        // Smallest threshold reaching 2/3 is the below-min sentinel.
        assert_eq!(r.theta, 0.1 - 1.0);
    }

    #[test]
    fn empty_class_is_rejected() {
        assert!(matches!(best_threshold(&[1.0, 2.0], &[true, true]), Err(Error::EmptyClass)));
    }

    #[test]
    fn rule_reproduces_its_accuracy() {
        let values = [0.3, -0.2, 0.7, 0.1, 0.1, 0.9, -0.5];
        let labels = [true, false, true, false, true, true, false];
        let r = best_threshold(&values, &labels).unwrap();
        let correct = values.iter().zip(&labels).filter(|(&v, &l)| r.predict(v) == l).count();
        assert_eq!(correct, r.correct);
    }
}
