use crate::error::{Error, Result};
use crate::model::{qp_objective, CMatrix, ChannelMatrix, SystemConfig, C64};

/// Largest number of sign patterns `4^{BK}` the exhaustive search accepts.
pub const MAX_EXHAUSTIVE_PATTERNS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceSolution {
    pub x: CMatrix,
    pub beta: f64,
    pub objective: f64,
}

/// Exact minimizer of `‖S − βHX‖_F² + β²UKN₀` over `X ∈ 𝒳^{B×K}`, `β ≥ 0`.
///
/// For fixed `X` the optimal β gives the value `‖S‖² − max(0, a)²/d` with
/// `a = Re tr((HX)ᴴS)` and `d = ‖HX‖² + UKN₀`. The `2BK` real signs are
/// visited in binary-reflected Gray order starting from all `+`, so each step
/// flips one sign and updates one column of `HX` in `O(U)`. The first
/// pattern reaching the minimum wins.
pub fn brute_force_qp(s: &CMatrix, h: &ChannelMatrix, cfg: &SystemConfig) -> Result<BruteForceSolution> {
    let (u, b) = (h.num_ues(), h.num_bs_antennas());
    let k = s.ncols();
    if s.nrows() != u {
        return Err(Error::dims("brute_force_qp: users", u, s.nrows()));
    }
    let bits = 2 * b * k;
    if bits >= 64 || 1u64 << bits > MAX_EXHAUSTIVE_PATTERNS {
        return Err(Error::SizeGuard(b * k));
    }
    let level = (cfg.transmit_power / (2.0 * b as f64)).sqrt();
    let noise_term = (u * k) as f64 * cfg.noise_var;

    // Real sign i ↦ (antenna, slot, is_imag): slot-major, real parts first.
    let coord = |i: usize| (i % (2 * b) % b, i / (2 * b), i % (2 * b) >= b);

    let mut signs = vec![1.0f64; bits];
    let mut x = CMatrix::from_element(b, k, C64::new(level, level));
    let mut hx = h.h() * &x;
    let score = |hx: &CMatrix| {
        let a: f64 = hx.iter().zip(s.iter()).map(|(p, q)| (p.conj() * q).re).sum();
        let d = hx.norm_squared() + noise_term;
        let a = a.max(0.0);
        a * a / d
    };

    let mut best_score = score(&hx);
    let mut best_signs = signs.clone();
    let total: u64 = 1 << bits;
    for step in 1..total {
        let flip = step.trailing_zeros() as usize;
        signs[flip] = -signs[flip];
        let (ant, slot, imag) = coord(flip);
        let old = x[(ant, slot)];
        let new = if imag {
            C64::new(old.re, -old.im)
        } else {
            C64::new(-old.re, old.im)
        };
        x[(ant, slot)] = new;
        let delta = new - old;
        for r in 0..u {
            hx[(r, slot)] += h.h()[(r, ant)] * delta;
        }
        let sc = score(&hx);
        if sc > best_score {
            best_score = sc;
            best_signs.copy_from_slice(&signs);
        }
    }

    let mut x_best = CMatrix::zeros(b, k);
    for (i, &sg) in best_signs.iter().enumerate() {
        let (ant, slot, imag) = coord(i);
        if imag {
            x_best[(ant, slot)].im = sg * level;
        } else {
            x_best[(ant, slot)].re = sg * level;
        }
    }
    let beta = crate::model::optimal_beta_for(&x_best, s, h, cfg.noise_var)?;
    let objective = qp_objective(s, h, &x_best, beta, cfg.noise_var)?;
    Ok(BruteForceSolution {
        x: x_best,
        beta,
        objective,
    })
}
