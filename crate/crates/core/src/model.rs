//! System model: domain types, channel and noise generation, the real-valued
//! embedding, vectorization, and the MSE objective shared by every precoder.
//!
//! Matrices are nalgebra `DMatrix`, stored column-major, so `vec(·)` stacks
//! columns and `vec(ABC) = (Cᵀ ⊗ A) vec(B)` holds with the usual convention.
//! A complex `B × K` frame maps to the real vector
//! `[Re b[1]; Im b[1]; Re b[2]; Im b[2]; …]` of length `2BK`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Dimensions and energy budget of one block-fading downlink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// B, number of base-station antennas.
    pub num_bs_antennas: usize,
    /// U, number of single-antenna users.
    pub num_ues: usize,
    /// K, number of time slots sharing one channel realization.
    pub num_slots: usize,
    /// P, per-slot transmit power.
    pub transmit_power: f64,
    /// N₀, noise variance per complex receive sample.
    pub noise_var: f64,
}

impl SystemConfig {
    pub fn new(
        num_bs_antennas: usize,
        num_ues: usize,
        num_slots: usize,
        transmit_power: f64,
        noise_var: f64,
    ) -> Result<Self> {
        if num_bs_antennas == 0 || num_ues == 0 || num_slots == 0 {
            return Err(Error::InvalidParameter(format!(
                "B, U, K must be positive (got B={num_bs_antennas}, U={num_ues}, K={num_slots})"
            )));
        }
        if num_ues > num_bs_antennas {
            return Err(Error::InvalidParameter(format!(
                "need B >= U (got B={num_bs_antennas}, U={num_ues})"
            )));
        }
        if !(transmit_power > 0.0 && transmit_power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transmit power must be positive and finite, got {transmit_power}"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive and finite, got {noise_var}"
            )));
        }
        Ok(Self {
            num_bs_antennas,
            num_ues,
            num_slots,
            transmit_power,
            noise_var,
        })
    }

    /// P = 1 and N₀ = 10^(−snr_db/10).
    pub fn from_snr_db(b: usize, u: usize, k: usize, snr_db: f64) -> Result<Self> {
        Self::new(b, u, k, 1.0, 10f64.powf(-snr_db / 10.0))
    }

    /// ρ = P / N₀.
    pub fn snr(&self) -> f64 {
        self.transmit_power / self.noise_var
    }

    /// ℓ = √(P / 2B), the per-rail amplitude of a 1-bit DAC output.
    pub fn quant_level(&self) -> f64 {
        (self.transmit_power / (2.0 * self.num_bs_antennas as f64)).sqrt()
    }

    pub fn with_slots(&self, num_slots: usize) -> Self {
        Self { num_slots, ..*self }
    }
}

/// Downlink channel `H ∈ ℂ^{U×B}` together with its cached real embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    h: CMatrix,
    real: RMatrix,
}

impl ChannelMatrix {
    pub fn new(h: CMatrix) -> Result<Self> {
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("channel has non-finite entries".into()));
        }
        let real = real_embed(&h);
        Ok(Self { h, real })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    /// `[Re H, −Im H; Im H, Re H]`, size `2U × 2B`.
    pub fn real(&self) -> &RMatrix {
        &self.real
    }

    pub fn num_ues(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.h.ncols()
    }
}

/// Transmit symbols `S ∈ 𝒪^{U×K}` and the bits they carry.
///
/// The first `pilot_slots` columns hold pilots (not drawn from the bit
/// source); their bit rows are still present but carry no payload.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub s: CMatrix,
    /// Row `u` holds `K · bits_per_symbol` bits for user `u`, slot-major.
    pub bits: Vec<Vec<bool>>,
    pub pilot_slots: usize,
}

impl SymbolFrame {
    pub fn num_ues(&self) -> usize {
        self.s.nrows()
    }

    pub fn num_slots(&self) -> usize {
        self.s.ncols()
    }
}

/// Solver diagnostics attached to a precoder output.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrecodeDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Leading eigenvalue of an SDP solution was (numerically) repeated.
    pub degenerate: bool,
    /// β was raised to [`BETA_FLOOR`] because the optimal value was zero.
    pub beta_clamped: bool,
}

impl PrecodeDiagnostics {
    pub fn exact() -> Self {
        Self {
            converged: true,
            ..Self::default()
        }
    }

    pub fn flagged(&self) -> bool {
        !self.converged || self.degenerate || self.beta_clamped
    }

    pub fn merge(&mut self, other: &PrecodeDiagnostics) {
        self.iterations += other.iterations;
        self.converged &= other.converged;
        self.degenerate |= other.degenerate;
        self.beta_clamped |= other.beta_clamped;
    }
}

/// Smallest β a precoder reports; β itself must stay positive.
pub const BETA_FLOOR: f64 = 1e-9;

/// 1-bit transmit frame `X ∈ 𝒳^{B×K}` and common precoding factor β.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeResult {
    pub x: CMatrix,
    pub beta: f64,
    pub diagnostics: PrecodeDiagnostics,
}

impl PrecodeResult {
    /// Assigns the MSE-optimal β for `x` (floored at [`BETA_FLOOR`]).
    pub fn with_optimal_beta(
        x: CMatrix,
        s: &SymbolFrame,
        h: &ChannelMatrix,
        noise_var: f64,
        mut diagnostics: PrecodeDiagnostics,
    ) -> Result<Self> {
        let beta = optimal_beta_for(&x, &s.s, h, noise_var)?;
        let beta = if beta < BETA_FLOOR {
            diagnostics.beta_clamped = true;
            BETA_FLOOR
        } else {
            beta
        };
        Ok(Self {
            x,
            beta,
            diagnostics,
        })
    }

    /// Per-slot transmit power ‖x[k]‖₂².
    pub fn slot_powers(&self) -> Vec<f64> {
        self.x
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }
}

/// The auxiliary variable `B = βX` used by the relaxations.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryFrame {
    pub b: CMatrix,
}

impl AuxiliaryFrame {
    pub fn from_precode(p: &PrecodeResult) -> Self {
        Self {
            b: p.x.map(|z| z * p.beta),
        }
    }

    pub fn real_vec(&self) -> RVector {
        vec_frame(&self.b)
    }

    pub fn from_real_vec(v: &RVector, num_bs_antennas: usize, num_slots: usize) -> Result<Self> {
        Ok(Self {
            b: unvec_frame(v, num_bs_antennas, num_slots)?,
        })
    }

    /// β = √(‖B‖_F² / (KP)); exact when every entry lies on `β·𝒳`.
    pub fn implied_beta(&self, transmit_power: f64) -> f64 {
        (self.b.norm_squared() / (self.b.ncols() as f64 * transmit_power)).sqrt()
    }
}

fn complex_gaussian(rows: usize, cols: usize, var: f64, seed: u64) -> CMatrix {
    let mut rng = rng::stream(seed);
    let sd = (var / 2.0).sqrt();
    // Fill column by column so the draw order matches the storage order.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(r, c)] = C64::new(sd * re, sd * im);
        }
    }
    m
}

/// I.i.d. `CN(0, 1)` channel of size `U × B`.
pub fn gen_rayleigh_channel(num_ues: usize, num_bs_antennas: usize, seed: u64) -> ChannelMatrix {
    let h = complex_gaussian(num_ues, num_bs_antennas, 1.0, seed);
    ChannelMatrix::new(h).expect("gaussian draws are finite")
}

/// I.i.d. `CN(0, N₀)` noise of size `U × K`.
pub fn gen_awgn(num_ues: usize, num_slots: usize, noise_var: f64, seed: u64) -> Result<CMatrix> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    Ok(complex_gaussian(num_ues, num_slots, noise_var, seed))
}

/// `Y = HX + N`.
pub fn apply_channel(h: &ChannelMatrix, x: &CMatrix, n: &CMatrix) -> Result<CMatrix> {
    if x.nrows() != h.num_bs_antennas() {
        return Err(Error::dims("apply_channel: rows of X", h.num_bs_antennas(), x.nrows()));
    }
    if n.nrows() != h.num_ues() || n.ncols() != x.ncols() {
        return Err(Error::dims(
            "apply_channel: shape of N",
            format!("{}x{}", h.num_ues(), x.ncols()),
            format!("{}x{}", n.nrows(), n.ncols()),
        ));
    }
    Ok(h.h() * x + n)
}

/// `[Re H, −Im H; Im H, Re H]`.
pub fn real_embed(h: &CMatrix) -> RMatrix {
    let (r, c) = h.shape();
    let mut out = RMatrix::zeros(2 * r, 2 * c);
    for j in 0..c {
        for i in 0..r {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// `[Re v; Im v]`.
pub fn embed_vec(v: &[C64]) -> RVector {
    let n = v.len();
    RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

pub fn deembed_vec(v: &[f64]) -> Vec<C64> {
    let n = v.len() / 2;
    (0..n).map(|i| C64::new(v[i], v[i + n])).collect()
}

/// `[Re M; Im M]` for a complex `m × K` frame.
pub fn embed_frame(m: &CMatrix) -> RMatrix {
    let (r, c) = m.shape();
    RMatrix::from_fn(2 * r, c, |i, j| if i < r { m[(i, j)].re } else { m[(i - r, j)].im })
}

/// `vec([Re M; Im M])`, length `2·rows·K`.
pub fn vec_frame(m: &CMatrix) -> RVector {
    let e = embed_frame(m);
    RVector::from_column_slice(e.as_slice())
}

pub fn unvec_frame(v: &RVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != 2 * rows * cols {
        return Err(Error::dims("unvec_frame", 2 * rows * cols, v.len()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let base = 2 * rows * j;
        C64::new(v[base + i], v[base + rows + i])
    }))
}

/// `(H̄_R, s̄_R) = (I_K ⊗ H_R, vec(S_R))`.
pub fn vectorize_system(h_real: &RMatrix, s_real: &RMatrix, num_slots: usize) -> Result<(RMatrix, RVector)> {
    if s_real.nrows() != h_real.nrows() || s_real.ncols() != num_slots {
        return Err(Error::dims(
            "vectorize_system: S_R",
            format!("{}x{}", h_real.nrows(), num_slots),
            format!("{}x{}", s_real.nrows(), s_real.ncols()),
        ));
    }
    let hbar = RMatrix::identity(num_slots, num_slots).kronecker(h_real);
    let sbar = RVector::from_column_slice(s_real.as_slice());
    Ok((hbar, sbar))
}

fn check_frame_dims(x: &CMatrix, s: &CMatrix, h: &ChannelMatrix) -> Result<()> {
    if x.nrows() != h.num_bs_antennas() {
        return Err(Error::dims("X rows", h.num_bs_antennas(), x.nrows()));
    }
    if s.nrows() != h.num_ues() || s.ncols() != x.ncols() {
        return Err(Error::dims(
            "S shape",
            format!("{}x{}", h.num_ues(), x.ncols()),
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    Ok(())
}

/// `‖S − βHX‖_F² + β²UKN₀`.
pub fn qp_objective(s: &CMatrix, h: &ChannelMatrix, x: &CMatrix, beta: f64, noise_var: f64) -> Result<f64> {
    check_frame_dims(x, s, h)?;
    if beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let hx = h.h() * x;
    let residual = s - hx * C64::from(beta);
    let (u, k) = s.shape();
    Ok(residual.norm_squared() + beta * beta * (u * k) as f64 * noise_var)
}

/// `β* = max(0, Re tr((HX)ᴴ S) / (‖HX‖_F² + UKN₀))`, the minimizer of
/// [`qp_objective`] over β ≥ 0 for fixed `X`.
pub fn optimal_beta_for(x: &CMatrix, s: &CMatrix, h: &ChannelMatrix, noise_var: f64) -> Result<f64> {
    check_frame_dims(x, s, h)?;
    let hx = h.h() * x;
    let (u, k) = s.shape();
    let num: f64 = hx.iter().zip(s.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    let den = hx.norm_squared() + (u * k) as f64 * noise_var;
    if den <= 0.0 {
        return Err(Error::InvalidParameter(
            "‖HX‖² + UKN₀ vanished; X is zero and N₀ is zero".into(),
        ));
    }
    Ok((num / den).max(0.0))
}
