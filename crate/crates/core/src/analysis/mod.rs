//! Output analysis for time averages of continuous-time processes.
//!
//! Batch-means and overlapping batch-means estimators of the time-average
//! variance constant, batch-size schedule diagnostics, replicate experiments
//! for the estimator's mean squared error and central limit behaviour, and
//! fluctuation statistics for windowed increments of additive functionals.

mod batch;
mod experiments;
mod fluctuation;
mod schedule;

pub use batch::{batch_means, batch_means_cumulative, overlapping_batch_means, BatchMeansEstimate, BatchRule, BatchSchedule};
pub use experiments::{
    bm_clt_check, clt_normality_check, mse_experiment, run_replicates, write_replicate_csv, BmCltReport, MseReport,
    NormalityReport, ReplicateRow, MIN_CLT_REPLICATES, MIN_MSE_REPLICATES,
};
pub use fluctuation::{
    beta_normalizer, brownian_increment_check, fluctuation_statistic, window_sup, BrownianReport, FluctuationStat,
    WindowStarts,
};
pub use schedule::{lambda_exponent, psi_rate, sip_rate, validate_batch_schedule, ScheduleReport, ScheduleRow};
