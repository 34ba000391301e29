//! Linear precoding matrices (ZF, MRT) and the linear-quantized 1-bit baseline.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{CMatrix, ChannelMatrix, PrecodeDiagnostics, PrecodeResult, SymbolFrame, SystemConfig, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    ZeroForcing,
    MaxRatio,
}

impl fmt::Display for LinearKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearKind::ZeroForcing => "ZF",
            LinearKind::MaxRatio => "MRT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPrecoderMatrix {
    /// `B × U`.
    pub p: CMatrix,
    pub kind: LinearKind,
}

/// `Hᴴ(HHᴴ)⁻¹`.
pub fn zf_matrix(h: &ChannelMatrix) -> Result<LinearPrecoderMatrix> {
    let (u, b) = h.h().shape();
    if u > b {
        return Err(Error::Singular("zero-forcing needs U <= B"));
    }
    let hh = h.h().adjoint();
    let gram = h.h() * &hh;
    let chol = gram.cholesky().ok_or(Error::Singular("HHᴴ is not positive definite"))?;
    let p = hh * chol.inverse();
    let residual = (h.h() * &p - CMatrix::identity(u, u)).norm();
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::Singular("H is numerically rank deficient"));
    }
    Ok(LinearPrecoderMatrix {
        p,
        kind: LinearKind::ZeroForcing,
    })
}

/// `Hᴴ`.
pub fn mrt_matrix(h: &ChannelMatrix) -> LinearPrecoderMatrix {
    LinearPrecoderMatrix {
        p: h.h().adjoint(),
        kind: LinearKind::MaxRatio,
    }
}

/// 1-bit DAC model: `√(P/2B)·(sign(Re z) + j·sign(Im z))` with `sign(0) = +1`.
pub fn one_bit_quantize(z: &[C64], transmit_power: f64) -> Vec<C64> {
    let level = (transmit_power / (2.0 * z.len() as f64)).sqrt();
    z.iter().map(|v| quantize_entry(*v, level)).collect()
}

#[inline]
pub(crate) fn signum(a: f64) -> f64 {
    if a >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn quantize_entry(v: C64, level: f64) -> C64 {
    C64::new(level * signum(v.re), level * signum(v.im))
}

/// Column-wise [`one_bit_quantize`] of a `B × K` frame.
pub fn quantize_frame(z: &CMatrix, transmit_power: f64) -> CMatrix {
    let level = (transmit_power / (2.0 * z.nrows() as f64)).sqrt();
    z.map(|v| quantize_entry(v, level))
}

pub fn linear_quantized_precode(
    s: &SymbolFrame,
    h: &ChannelMatrix,
    kind: LinearKind,
    cfg: &SystemConfig,
) -> Result<PrecodeResult> {
    if s.num_ues() != h.num_ues() {
        return Err(Error::dims("linear_quantized_precode: users", h.num_ues(), s.num_ues()));
    }
    let p = match kind {
        LinearKind::ZeroForcing => zf_matrix(h)?,
        LinearKind::MaxRatio => mrt_matrix(h),
    };
    let x = quantize_frame(&(&p.p * &s.s), cfg.transmit_power);
    PrecodeResult::with_optimal_beta(x, s, h, cfg.noise_var, PrecodeDiagnostics::exact())
}
