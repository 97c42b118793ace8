//! Unit splits, fit metrics, baselines and the relative-error report.

mod report;
mod split;
mod stats;

pub use report::{
    evaluate, predictions_by_unit, read_predictions, write_plot_data, write_predictions,
    ComparisonRow, EvalReport, MetricRow, PredictionRow, UnitOutcome,
};
pub use split::{split_sizes, split_units, Split, SplitAssignment, MIN_UNITS};
pub use stats::{
    baseline_national, paired_t_test, pearson_r, quantile_sorted, r_squared, relative_error_report,
    unit_relative_error, ErrorRow, PairedTTest,
};
