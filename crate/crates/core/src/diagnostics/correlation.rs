use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::svdstack::Representation;

/// Pearson correlations between all column pairs. Pairs involving a
/// constant column are undefined and stored as NaN.
#[derive(Debug, Clone)]
pub struct ColumnCorrelations {
    pub matrix: Array2<f64>,
    pub constant_columns: Vec<usize>,
}

pub fn column_correlations(rep: &Representation) -> Result<ColumnCorrelations> {
    correlations(rep.matrix.view())
}

pub fn correlations(m: ArrayView2<f64>) -> Result<ColumnCorrelations> {
    crate::linalg::check_finite(m)?;
    let (n, k) = m.dim();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let constant: Vec<bool> = m
        .axis_iter(Axis(1))
        .map(|c| c.iter().all(|&v| v == c[0]))
        .collect();
    let means = m.mean_axis(Axis(0)).expect("non-empty");
    let centered = &m - &means.insert_axis(Axis(0));
    let cov = linalg::matmul(centered.t(), centered.view());
    let sd: Vec<f64> = (0..k).map(|j| cov[[j, j]].sqrt()).collect();
    let matrix = Array2::from_shape_fn((k, k), |(a, b)| {
        let (i, j) = (a.min(b), a.max(b));
        if constant[i] || constant[j] {
            f64::NAN
        } else if i == j {
            1.0
        } else {
            (cov[[i, j]] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
        }
    });
    let constant_columns = constant.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j).collect();
    Ok(ColumnCorrelations { matrix, constant_columns })
}

/// Which entries of the k×k correlation matrix enter a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientSet {
    /// All k² entries, diagonal included.
    #[default]
    All,
    /// The k² − k off-diagonal entries (both symmetric copies).
    OffDiagonal,
    /// The k(k − 1)/2 entries above the diagonal.
    UpperTriangle,
}

impl CoefficientSet {
    fn includes(self, i: usize, j: usize) -> bool {
        match self {
            CoefficientSet::All => true,
            CoefficientSet::OffDiagonal => i != j,
            CoefficientSet::UpperTriangle => i < j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Histogram of `log10 |c|` over a set of correlation coefficients.
///
/// Bins have width `bin_width` and are anchored at 0, extending down to
/// `log10(floor)`. The top bin is closed at 0 so that `|c| = 1` lands in it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub bins: Vec<HistogramBin>,
    /// Coefficients with `|c| < floor`.
    pub excluded_zero: usize,
    /// Coefficients involving a constant column.
    pub undefined: usize,
    /// Coefficients entering the summary: bin counts plus `excluded_zero`.
    pub summarized: usize,
    pub coefficient_set: CoefficientSet,
    pub bin_width: f64,
    pub floor: f64,
    /// Mean of `log10 |c|` over defined off-diagonal entries with
    /// `|c| >= floor`, regardless of `coefficient_set`.
    pub off_diagonal_log_mean: Option<f64>,
    pub off_diagonal_count: usize,
}

pub fn log_abs_histogram(
    corr: &ColumnCorrelations,
    bin_width: f64,
    floor: f64,
    set: CoefficientSet,
) -> Result<CorrelationSummary> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Config(format!("bin width must be positive, got {bin_width}")));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::Config(format!("floor must lie in (0, 1), got {floor}")));
    }
    let lowest = floor.log10();
    let nbins = ((-lowest / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0usize; nbins];
    let (mut excluded_zero, mut undefined, mut summarized) = (0, 0, 0);
    let (mut off_sum, mut off_count) = (0.0, 0usize);

    for ((i, j), &c) in corr.matrix.indexed_iter() {
        let included = set.includes(i, j);
        if c.is_nan() {
            if included {
                undefined += 1;
            }
            continue;
        }
        let a = c.abs();
        let x = if a >= floor { Some(a.log10().min(0.0)) } else { None };
        if i != j {
            if let Some(x) = x {
                off_sum += x;
                off_count += 1;
            }
        }
        if !included {
            continue;
        }
        summarized += 1;
        match x {
            Some(x) => {
                let idx = ((-x / bin_width) + 1e-12).floor() as usize;
                counts[idx.min(nbins - 1)] += 1;
            }
            None => excluded_zero += 1,
        }
    }

    // Ascending order: the bin furthest below zero first.
    let bins = (0..nbins)
        .rev()
        .map(|i| HistogramBin {
            low: -((i + 1) as f64) * bin_width,
            high: -(i as f64) * bin_width + 0.0,
            count: counts[i],
        })
        .collect();
    Ok(CorrelationSummary {
        bins,
        excluded_zero,
        undefined,
        summarized,
        coefficient_set: set,
        bin_width,
        floor,
        off_diagonal_log_mean: (off_count > 0).then(|| off_sum / off_count as f64),
        off_diagonal_count: off_count,
    })
}

/// `mean_a − mean_b` of the off-diagonal `log10 |c|` values. Positive when
/// `b` sits to the left of `a`.
pub fn histogram_shift(a: &CorrelationSummary, b: &CorrelationSummary) -> Result<f64> {
    if a.bin_width != b.bin_width || a.floor != b.floor {
        return Err(Error::BinningMismatch);
    }
    match (a.off_diagonal_log_mean, b.off_diagonal_log_mean) {
        (Some(x), Some(y)) => Ok(x - y),
        _ => Err(Error::Shape("no defined off-diagonal coefficients".into())),
    }
}

/// Writes `bin_low,bin_high,count` rows and a trailing `#excluded_zero=N`.
pub fn histogram_csv(summary: &CorrelationSummary) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for b in &summary.bins {
        out.push_str(&format!("{},{},{}\n", b.low, b.high, b.count));
    }
    out.push_str(&format!("#excluded_zero={}\n", summary.excluded_zero));
    out
}
