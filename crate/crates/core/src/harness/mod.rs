//! Experiment grid, metrics, aggregation and reports.

mod aggregate;
mod metrics;
mod report;
mod run;
mod sweep;

pub use aggregate::{
    aggregate, aggregate_grid, ci_halfwidth, mean_std, normalize_times, scale_to_original,
    AggregateRow, ScaledPoint, Z95,
};
pub use metrics::{confusion_matrix, macro_f1, per_class_f1};
pub use report::{
    append_results, emit_report, format_table, load_results, read_aggregate, read_results,
    write_aggregate, write_plot, write_results, ReportFiles, AGGREGATE_HEADER, PLOT_HEADER,
    RESULTS_HEADER,
};
pub use run::{
    cached_base, evaluate, original_result, run_cell, run_cell_net, train_base, BaseModel,
    RunResult, ORIGINAL,
};
pub use sweep::{sweep, SweepOutcome, SweepSpec, DEFAULT_PERCENTS, DEFAULT_SEEDS};
