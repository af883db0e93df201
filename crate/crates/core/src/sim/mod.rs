//! Monte Carlo sweeps over distance, IRS size and iteration count, the
//! grid-search oracle, and CSV output.
//!
//! Output is a pure function of the [`SweepConfig`]: each trial draws from
//! its own random stream and rows are sorted before writing, so thread
//! count never changes the bytes.

mod config;
mod oracle;
mod sweep;

pub use config::{canonical_key, parse_kv_text, Experiment, Scheme, SweepConfig, KEYS};
pub use oracle::{brute_force_oracle, MAX_ORACLE_ELEMENTS, MIN_GRID_POINTS};
pub use sweep::{
    coverage_distance, crossing_distance, format_f64, mean_stderr, oracle_check, run_convergence_trace, run_distance_sweep,
    run_elements_sweep, sort_rows, summarize, trial_channels, trials_csv_string, write_oracle_csv,
    write_summary_csv, write_trials_csv, OracleRow, SummaryRow, TrialResult, CSV_HEADER, ORACLE_HEADER,
    SUMMARY_HEADER,
};
