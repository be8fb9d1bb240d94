//! Column correlations, threshold classifiers, the sign test and the
//! focality measure.

mod compare;
mod correlation;
mod focality;
mod threshold;

pub use compare::{
    compare_representations, pair_accuracy, pair_rows, Accuracy, DiscriminationReport,
    PairComparison,
};
pub use correlation::{
    column_correlations, correlations, histogram_csv, histogram_shift, log_abs_histogram,
    CoefficientSet, ColumnCorrelations, CorrelationSummary, HistogramBin,
};
pub use focality::{
    best_conjunction, focality_measure, focality_on, subsets, ConjunctiveRule, FocalityResult,
    Predicate, MAX_SUBSET_CAP,
};
pub use sign_test::{binomial_upper_tail, sign_test, sign_test_with, Sidedness};
pub use threshold::{best_threshold, Direction, ThresholdRule};
