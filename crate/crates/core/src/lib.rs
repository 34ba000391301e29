//! Nonlinear 1-bit precoding for the massive MU-MIMO downlink.
//!
//! The crate covers the whole link: Rayleigh channels and noise, Gray-mapped
//! constellations, linear-quantized baselines (ZF/MRT followed by 1-bit
//! quantization), two nonlinear precoders (a semidefinite relaxation solved by
//! a built-in ADMM solver, and the squared ℓ∞-norm relaxation solved by
//! accelerated proximal gradient), receiver-side estimation of the precoding
//! factor β, an exhaustive oracle for tiny instances, and Monte-Carlo BER
//! sweeps that write CSV.
//!
//! ```text
//! bits → modulate → S ─┐
//!                 H ───┴→ precode → X, β → Y = HX + N → β̂ → ŝ = β̂·y → detect → BER
//! ```

pub mod constellation;
pub mod error;
pub mod estimation;
pub mod linear;
pub mod model;
pub mod rng;
pub mod sdr;
pub mod sim;
pub mod squid;

pub use constellation::{Constellation, ConstellationId};
pub use error::{Error, Result};
pub use estimation::{BetaEstimate, EstimatorId};
pub use model::{
    AuxiliaryFrame, ChannelMatrix, PrecodeResult, SymbolFrame, SystemConfig, C64, CMatrix,
    RMatrix, RVector,
};
pub use sim::{BerRecord, PrecoderId, SweepConfig};
