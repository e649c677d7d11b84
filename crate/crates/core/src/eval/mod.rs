//! Monte Carlo evaluation: effective rate, training overhead, sweeps.

mod experiment;
mod fingerprint;
mod metrics;

pub use experiment::{
    align, draw_member, measurements_to_target, measurements_to_target_with, records_csv, run_experiment, summary_csv,
    sweep_search_settings, Alignment, EnsembleMember, ExperimentConfig, ExperimentResult, Method, MetricRecord, SummaryRow, RECORD_HEADER,
    SUMMARY_HEADER,
};
pub use fingerprint::{
    fingerprint_csv, quadratic_fit, run_fingerprint_sweep, run_fingerprint_sweep_with, FingerprintRow, FingerprintSweep, FINGERPRINT_HEADER,
};
pub use metrics::{
    effective_rate, ieee80211ad_overhead, ieee80211ad_overhead_antennas, overhead_reduction, percentile, training_efficiency,
    two_stage_overhead, EtaMode, OverheadModel,
};
