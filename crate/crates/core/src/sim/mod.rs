//! Monte-Carlo link simulation: one trial, the exhaustive oracle, and sweeps.

mod config;
mod oracle;
mod sweep;
mod trial;

pub use config::SweepConfig;
pub use oracle::{brute_force_qp, BruteForceSolution, MAX_EXHAUSTIVE_PATTERNS};
pub use sweep::{csv_string, sweep, write_csv, BerRecord, CSV_HEADER};
pub use trial::{precode, run_trial, PrecoderId, PrecoderOutcome, PrecoderSettings, TrialConfig};
