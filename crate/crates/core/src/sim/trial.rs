use std::fmt;
use std::str::FromStr;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::estimation::{estimate_all, EstimatorId};
use crate::linear::{linear_quantized_precode, LinearKind};
use crate::model::{
    apply_channel, gen_awgn, gen_rayleigh_channel, qp_objective, ChannelMatrix, PrecodeDiagnostics,
    PrecodeResult, SymbolFrame, SystemConfig,
};
use crate::rng::{derive_seed, TAG_BITS, TAG_CHANNEL, TAG_NOISE};
use crate::sdr::{sdr_precode, SdrOptions};
use crate::sim::oracle::brute_force_qp;
use crate::squid::{squid_precode, SquidOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderId {
    /// Zero-forcing followed by 1-bit quantization.
    Zfq,
    /// Maximum-ratio transmission followed by 1-bit quantization.
    Mrtq,
    Squid,
    Sdr,
    /// Exhaustive search; only for tiny `B·K`.
    Exhaustive,
}

impl PrecoderId {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrecoderId::Zfq => "zfq",
            PrecoderId::Mrtq => "mrtq",
            PrecoderId::Squid => "squid",
            PrecoderId::Sdr => "sdr",
            PrecoderId::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for PrecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zfq" => Ok(PrecoderId::Zfq),
            "mrtq" => Ok(PrecoderId::Mrtq),
            "squid" => Ok(PrecoderId::Squid),
            "sdr" => Ok(PrecoderId::Sdr),
            "exhaustive" | "bruteforce" | "brute_force" => Ok(PrecoderId::Exhaustive),
            _ => Err(Error::UnknownId {
                kind: "precoder",
                id: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrecoderSettings {
    pub squid: SquidOptions,
    pub sdr: SdrOptions,
}

pub fn precode(
    id: PrecoderId,
    s: &SymbolFrame,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    settings: &PrecoderSettings,
) -> Result<PrecodeResult> {
    match id {
        PrecoderId::Zfq => linear_quantized_precode(s, h, LinearKind::ZeroForcing, cfg),
        PrecoderId::Mrtq => linear_quantized_precode(s, h, LinearKind::MaxRatio, cfg),
        PrecoderId::Squid => squid_precode(s, h, cfg, &settings.squid),
        PrecoderId::Sdr => sdr_precode(s, h, cfg, &settings.sdr),
        PrecoderId::Exhaustive => {
            let sol = brute_force_qp(&s.s, h, cfg)?;
            PrecodeResult::with_optimal_beta(sol.x, s, h, cfg.noise_var, PrecodeDiagnostics::exact())
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub system: SystemConfig,
    pub constellation: Constellation,
    pub precoders: Vec<PrecoderId>,
    pub estimator: EstimatorId,
    pub settings: PrecoderSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderOutcome {
    pub precoder: PrecoderId,
    pub errors_per_ue: Vec<u64>,
    /// Payload bits per user (pilot slots excluded).
    pub bits_per_ue: u64,
    /// Clamped β̂ estimates plus a clamped precoder β.
    pub clamp_flags: u64,
    /// The precoder returned but flagged non-convergence or a degenerate
    /// eigenvector.
    pub solver_flagged: bool,
    /// The precoder failed; every payload bit is counted as an error.
    pub failure: Option<String>,
    /// `‖S − βHX‖² + β²UKN₀` of the transmitted frame.
    pub objective: f64,
    pub beta: f64,
}

impl PrecoderOutcome {
    pub fn bit_errors(&self) -> u64 {
        self.errors_per_ue.iter().sum()
    }

    pub fn bits_total(&self) -> u64 {
        self.bits_per_ue * self.errors_per_ue.len() as u64
    }
}

/// One Monte-Carlo trial: draw `H`, bits and noise from `trial_seed`, then run
/// every configured precoder on the same draws.
///
/// With pilot estimation slot 0 carries `√E_s` and only slots `1..K` carry
/// payload.
pub fn run_trial(cfg: &TrialConfig, trial_seed: u64) -> Result<Vec<PrecoderOutcome>> {
    let sys = &cfg.system;
    let (b, u, k) = (sys.num_bs_antennas, sys.num_ues, sys.num_slots);
    let pilots = cfg.estimator.pilot_slots();
    if pilots >= k {
        return Err(Error::InvalidParameter(format!(
            "pilot estimation needs K >= 2 (got K={k})"
        )));
    }
    let h = gen_rayleigh_channel(u, b, derive_seed(trial_seed, &[TAG_CHANNEL]));
    let frame = cfg
        .constellation
        .random_frame(u, k, pilots, derive_seed(trial_seed, &[TAG_BITS]));
    let noise = gen_awgn(u, k, sys.noise_var, derive_seed(trial_seed, &[TAG_NOISE]))?;
    let m = cfg.constellation.bits_per_symbol();
    let payload_bits = ((k - pilots) * m) as u64;
    let es = cfg.constellation.energy();

    let mut out = Vec::with_capacity(cfg.precoders.len());
    for &id in &cfg.precoders {
        let result = match precode(id, &frame, &h, sys, &cfg.settings) {
            Ok(r) => r,
            Err(e) => {
                out.push(PrecoderOutcome {
                    precoder: id,
                    errors_per_ue: vec![payload_bits; u],
                    bits_per_ue: payload_bits,
                    clamp_flags: 0,
                    solver_flagged: true,
                    failure: Some(e.to_string()),
                    objective: f64::NAN,
                    beta: f64::NAN,
                });
                continue;
            }
        };
        let y = apply_channel(&h, &result.x, &noise)?;
        let estimates = estimate_all(&y, cfg.estimator, es, sys.noise_var, result.beta)?;
        let mut errors = vec![0u64; u];
        for (ue, est) in estimates.iter().enumerate() {
            for slot in pilots..k {
                let shat = y[(ue, slot)] * est.value;
                let (_, bits) = cfg.constellation.detect(shat);
                let sent = &frame.bits[ue][slot * m..(slot + 1) * m];
                errors[ue] += bits.iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
            }
        }
        let clamp_flags = estimates.iter().filter(|e| e.clamped).count() as u64
            + u64::from(result.diagnostics.beta_clamped);
        out.push(PrecoderOutcome {
            precoder: id,
            errors_per_ue: errors,
            bits_per_ue: payload_bits,
            clamp_flags,
            solver_flagged: !result.diagnostics.converged || result.diagnostics.degenerate,
            failure: None,
            objective: qp_objective(&frame.s, &h, &result.x, result.beta, sys.noise_var)?,
            beta: result.beta,
        });
    }
    Ok(out)
}
