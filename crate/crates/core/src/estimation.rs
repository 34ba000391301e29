//! Receiver-side estimation of the precoding factor β.
//!
//! Each user sees `y_u[k] = β⁻¹ s_u[k] + e_u[k] + n_u[k]`, where `e_u`
//! collects quantization error and residual interference. Two estimators
//! are provided:
//!
//! - pilot: the first slot carries `s_u[1] = √E_s` and `β̂ = Re{√E_s / y_u[1]}`;
//! - blind: `β̂ = √(E_s / ((1/K) Σ |y_u[k]|² − E₀ − N₀))` with `E₀ = 0` by default.
//!
//! Both are undefined for degenerate inputs; those cases are clamped to a
//! small positive value and flagged.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CMatrix, C64};

/// Lower clamp for β̂.
pub const BETA_EPS: f64 = 1e-9;
/// Lower clamp for the blind estimator's signal-energy denominator.
pub const DENOM_EPS: f64 = 1e-12;
/// Received pilots weaker than this are treated as lost.
pub const PILOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Genie,
    Pilot,
    Blind,
}

impl EstimatorId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::Genie => "genie",
            EstimatorId::Pilot => "pilot",
            EstimatorId::Blind => "blind",
        }
    }

    /// Slots consumed by pilots at the start of every frame.
    pub fn pilot_slots(&self) -> usize {
        match self {
            EstimatorId::Pilot => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genie" => Ok(EstimatorId::Genie),
            "pilot" | "pilot_mle" | "training" => Ok(EstimatorId::Pilot),
            "blind" => Ok(EstimatorId::Blind),
            _ => Err(Error::UnknownId {
                kind: "estimator",
                id: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate {
    pub value: f64,
    pub method: EstimatorId,
    pub ue: usize,
    /// The raw estimate was degenerate and `value` was clamped.
    pub clamped: bool,
}

pub fn genie(beta: f64, ue: usize) -> BetaEstimate {
    BetaEstimate {
        value: beta,
        method: EstimatorId::Genie,
        ue,
        clamped: false,
    }
}

pub fn pilot_mle(y_pilot: C64, symbol_energy: f64, ue: usize) -> BetaEstimate {
    let raw = if y_pilot.norm() < PILOT_EPS {
        f64::NAN
    } else {
        (C64::new(symbol_energy.sqrt(), 0.0) / y_pilot).re
    };
    let clamped = !(raw >= BETA_EPS);
    BetaEstimate {
        value: if clamped { BETA_EPS } else { raw },
        method: EstimatorId::Pilot,
        ue,
        clamped,
    }
}

pub fn blind_estimate(
    y: &[C64],
    symbol_energy: f64,
    noise_var: f64,
    error_energy: f64,
    ue: usize,
) -> Result<BetaEstimate> {
    if y.is_empty() {
        return Err(Error::InvalidParameter("blind estimation needs K >= 1 samples".into()));
    }
    let power = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
    let signal = power - error_energy - noise_var;
    let clamped = !(signal >= DENOM_EPS);
    let denom = if clamped { DENOM_EPS } else { signal };
    Ok(BetaEstimate {
        value: (symbol_energy / denom).sqrt(),
        method: EstimatorId::Blind,
        ue,
        clamped,
    })
}

/// One estimate per user from the received frame `Y` (`U × K`).
///
/// Pilot estimation reads slot 0; blind estimation uses every slot with
/// `E₀ = 0`; genie returns `genie_beta` for everyone.
pub fn estimate_all(
    y: &CMatrix,
    method: EstimatorId,
    symbol_energy: f64,
    noise_var: f64,
    genie_beta: f64,
) -> Result<Vec<BetaEstimate>> {
    (0..y.nrows())
        .map(|u| match method {
            EstimatorId::Genie => Ok(genie(genie_beta, u)),
            EstimatorId::Pilot => {
                if y.ncols() == 0 {
                    return Err(Error::InvalidParameter("pilot estimation needs K >= 1".into()));
                }
                Ok(pilot_mle(y[(u, 0)], symbol_energy, u))
            }
            EstimatorId::Blind => {
                let row: Vec<C64> = y.row(u).iter().copied().collect();
                blind_estimate(&row, symbol_energy, noise_var, 0.0, u)
            }
        })
        .collect()
}
