//! Sweep configuration and its flat `key = value` file format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value ws* ('#' any*)?
//! ```
//!
//! Keys mirror the CLI flags; `-` and `_` are interchangeable.
//!
//! | key               | value                                         |
//! |-------------------|-----------------------------------------------|
//! | `bs_antennas`     | B                                             |
//! | `ues`             | U                                             |
//! | `slots`           | K                                             |
//! | `snr_db`          | comma list, each item a number or `start:step:stop` |
//! | `constellation`   | QPSK, 8PSK, 16QAM, 16PSK, 64QAM               |
//! | `precoder`        | comma list of zfq, mrtq, squid, sdr, exhaustive |
//! | `estimator`       | genie, pilot, blind                           |
//! | `trials`          | trials per SNR point                          |
//! | `seed`            | master seed                                   |
//! | `out`             | CSV output path                               |
//! | `min_errors`      | stop a point after this many bit errors (`0` = off) |
//! | `squid.max_iters` | alias `max_iters`                             |
//! | `squid.rel_tol`   | alias `rel_tol`                               |
//! | `squid.momentum`  | true / false                                  |
//! | `squid.init`      | per_slot, zero                                |
//! | `sdr.tol`         |                                               |
//! | `sdr.max_iters`   |                                               |
//! | `sdr.block_mode`  | true / false                                  |

use std::path::{Path, PathBuf};

use crate::constellation::ConstellationId;
use crate::error::{Error, Result};
use crate::estimation::EstimatorId;
use crate::sim::oracle::MAX_EXHAUSTIVE_PATTERNS;
use crate::sim::trial::{PrecoderId, PrecoderSettings};
use crate::squid::SquidInit;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub num_bs_antennas: usize,
    pub num_ues: usize,
    pub num_slots: usize,
    pub snr_db: Vec<f64>,
    pub constellation: ConstellationId,
    pub precoders: Vec<PrecoderId>,
    pub estimator: EstimatorId,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub settings: PrecoderSettings,
    /// Early stop after this many bit errors at a point; `None` runs every trial.
    pub min_errors: Option<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            num_bs_antennas: 128,
            num_ues: 16,
            num_slots: 10,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            constellation: ConstellationId::Qpsk,
            precoders: vec![PrecoderId::Squid, PrecoderId::Zfq],
            estimator: EstimatorId::Blind,
            trials: 100,
            seed: 0,
            out: None,
            settings: PrecoderSettings::default(),
            min_errors: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("`{key}` expects true/false, got `{value}`")),
    }
}

/// Comma list whose items are numbers or inclusive `start:step:stop` ranges.
pub fn parse_snr_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_num::<f64>("snr_db", v)?),
            [a, step, b] => {
                let (a, step, b) = (
                    parse_num::<f64>("snr_db", a)?,
                    parse_num::<f64>("snr_db", step)?,
                    parse_num::<f64>("snr_db", b)?,
                );
                if !(step > 0.0) || b < a {
                    return Err(format!("bad SNR range `{item}`"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| a + step * i as f64));
            }
            _ => return Err(format!("bad SNR item `{item}`")),
        }
    }
    Ok(out)
}

impl SweepConfig {
    /// Sets one key. Used by both the file parser and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "bs_antennas" => self.num_bs_antennas = parse_num(&key, v)?,
            "ues" => self.num_ues = parse_num(&key, v)?,
            "slots" => self.num_slots = parse_num(&key, v)?,
            "snr_db" => self.snr_db = parse_snr_list(v)?,
            "constellation" => self.constellation = v.parse().map_err(|e: Error| e.to_string())?,
            "precoder" | "precoders" => {
                self.precoders = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<PrecoderId>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "estimator" => self.estimator = v.parse().map_err(|e: Error| e.to_string())?,
            "trials" => self.trials = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "out" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "min_errors" => {
                let n: u64 = parse_num(&key, v)?;
                self.min_errors = (n > 0).then_some(n);
            }
            "squid.max_iters" | "max_iters" => self.settings.squid.max_iters = parse_num(&key, v)?,
            "squid.rel_tol" | "rel_tol" => self.settings.squid.rel_tol = parse_num(&key, v)?,
            "squid.momentum" => self.settings.squid.momentum = parse_bool(&key, v)?,
            "squid.init" => {
                self.settings.squid.init = match v.to_ascii_lowercase().replace('-', "_").as_str() {
                    "per_slot" | "perslot" => SquidInit::PerSlot,
                    "zero" => SquidInit::Zero,
                    _ => return Err(format!("`{key}` expects per_slot or zero, got `{v}`")),
                }
            }
            "sdr.tol" => self.settings.sdr.sdp.tol = parse_num(&key, v)?,
            "sdr.max_iters" => self.settings.sdr.sdp.max_iters = parse_num(&key, v)?,
            "sdr.block_mode" => self.settings.sdr.block_mode = parse_bool(&key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    /// Applies every entry of a config text on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key, value).map_err(|msg| Error::Config { line: idx + 1, msg })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_bs_antennas == 0 || self.num_ues == 0 || self.num_slots == 0 {
            return bad("B, U and K must be positive".into());
        }
        if self.num_ues > self.num_bs_antennas {
            return bad(format!("need B >= U (B={}, U={})", self.num_bs_antennas, self.num_ues));
        }
        if self.snr_db.is_empty() {
            return bad("SNR list is empty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite".into());
        }
        if self.precoders.is_empty() {
            return bad("precoder list is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.estimator == EstimatorId::Pilot && self.num_slots < 2 {
            return bad("pilot estimation needs K >= 2".into());
        }
        if self.precoders.contains(&PrecoderId::Exhaustive) {
            let bits = 2 * self.num_bs_antennas * self.num_slots;
            if bits >= 64 || 1u64 << bits > MAX_EXHAUSTIVE_PATTERNS {
                return Err(Error::SizeGuard(self.num_bs_antennas * self.num_slots));
            }
        }
        self.settings.squid.validate()?;
        if !(self.settings.sdr.sdp.tol > 0.0) || self.settings.sdr.sdp.max_iters == 0 {
            return bad("sdr.tol must be > 0 and sdr.max_iters >= 1".into());
        }
        Ok(())
    }
}
