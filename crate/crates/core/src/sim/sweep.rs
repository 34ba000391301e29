use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::constellation::{Constellation, ConstellationId};
use crate::error::Result;
use crate::estimation::EstimatorId;
use crate::model::SystemConfig;
use crate::rng::derive_seed;
use crate::sim::config::SweepConfig;
use crate::sim::trial::{run_trial, PrecoderId, PrecoderOutcome, TrialConfig};

pub const CSV_HEADER: &str = "snr_db,precoder,constellation,estimator,trials,bits_total,bit_errors,ber,clamp_flags";

/// Trials evaluated per parallel batch when early stopping is enabled.
const BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub precoder: PrecoderId,
    pub constellation: ConstellationId,
    pub estimator: EstimatorId,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub trials: usize,
    pub clamp_flags: u64,
    /// Trials where the solver hit its iteration cap or a degenerate eigenvector.
    pub solver_flags: u64,
    /// Trials where the precoder returned an error.
    pub hard_failures: u64,
    pub wall_time: Duration,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        if self.bits_total == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_total as f64
        }
    }

    fn new(snr_db: f64, precoder: PrecoderId, cfg: &SweepConfig) -> Self {
        Self {
            snr_db,
            precoder,
            constellation: cfg.constellation,
            estimator: cfg.estimator,
            bit_errors: 0,
            bits_total: 0,
            trials: 0,
            clamp_flags: 0,
            solver_flags: 0,
            hard_failures: 0,
            wall_time: Duration::ZERO,
        }
    }

    fn absorb(&mut self, o: &PrecoderOutcome) {
        self.bit_errors += o.bit_errors();
        self.bits_total += o.bits_total();
        self.trials += 1;
        self.clamp_flags += o.clamp_flags;
        self.solver_flags += u64::from(o.solver_flagged);
        self.hard_failures += u64::from(o.failure.is_some());
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.precoder,
            self.constellation,
            self.estimator,
            self.trials,
            self.bits_total,
            self.bit_errors,
            self.ber(),
            self.clamp_flags
        )
    }
}

/// Runs every (SNR point, precoder) combination and, if `cfg.out` is set,
/// writes the CSV.
///
/// Trial `t` at SNR index `p` uses seed `derive_seed(cfg.seed, [p, t])` and
/// all precoders see that trial's channel, bits and noise. Results are
/// reduced in trial order, so the output does not depend on scheduling.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let constellation = Constellation::new(cfg.constellation);
    let mut records = Vec::with_capacity(cfg.snr_db.len() * cfg.precoders.len());

    for (point, &snr_db) in cfg.snr_db.iter().enumerate() {
        let start = Instant::now();
        let trial_cfg = TrialConfig {
            system: SystemConfig::from_snr_db(cfg.num_bs_antennas, cfg.num_ues, cfg.num_slots, snr_db)?,
            constellation: constellation.clone(),
            precoders: cfg.precoders.clone(),
            estimator: cfg.estimator,
            settings: cfg.settings,
        };
        let mut point_records: Vec<BerRecord> =
            cfg.precoders.iter().map(|&id| BerRecord::new(snr_db, id, cfg)).collect();
        let run = |t: usize| run_trial(&trial_cfg, derive_seed(cfg.seed, &[point as u64, t as u64]));

        match cfg.min_errors {
            None => {
                let outcomes: Vec<_> = (0..cfg.trials).into_par_iter().map(run).collect::<Result<_>>()?;
                for trial in &outcomes {
                    for (rec, o) in point_records.iter_mut().zip(trial) {
                        rec.absorb(o);
                    }
                }
            }
            Some(threshold) => {
                let mut next = 0;
                while next < cfg.trials && point_records.iter().any(|r| r.bit_errors < threshold) {
                    let end = (next + BATCH).min(cfg.trials);
                    let outcomes: Vec<_> = (next..end).into_par_iter().map(run).collect::<Result<_>>()?;
                    for trial in &outcomes {
                        for (rec, o) in point_records.iter_mut().zip(trial) {
                            if rec.bit_errors < threshold {
                                rec.absorb(o);
                            }
                        }
                    }
                    next = end;
                }
            }
        }

        let elapsed = start.elapsed();
        for rec in &mut point_records {
            rec.wall_time = elapsed;
        }
        records.extend(point_records);
    }

    if let Some(path) = &cfg.out {
        write_csv(&records, path)?;
    }
    Ok(records)
}

pub fn csv_string(records: &[BerRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn write_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(csv_string(records).as_bytes())?;
    Ok(())
}
