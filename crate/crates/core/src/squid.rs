//! Squared ℓ∞-norm relaxation of the 1-bit precoding problem.
//!
//! The relaxed problem over `b̄ ∈ ℝ^{2BK}` is
//!
//! ```text
//! minimize ‖s̄ − H̄ b̄‖₂² + λ‖b̄‖∞²,    λ = 2UBK·N₀/P,  H̄ = I_K ⊗ H_R
//! ```
//!
//! and is solved by proximal gradient with optional Nesterov momentum and
//! function-value restart. The smooth part has gradient `2H̄ᵀ(H̄b̄ − s̄)` with
//! Lipschitz constant `L = 2λ_max(H_RᵀH_R)`. `H̄` is never formed: the iterate
//! is kept as a `2B × K` matrix whose columns are the slots, so every product
//! with `H̄` is one product with `H_R`.

use crate::error::{Error, Result};
use crate::linear::quantize_frame;
use crate::model::{
    unvec_frame, ChannelMatrix, PrecodeDiagnostics, PrecodeResult, RMatrix, RVector, SymbolFrame,
    SystemConfig, embed_frame,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1/L` with `L` from power iteration.
    Auto,
    Fixed(f64),
}

/// Starting point of the block solve.
///
/// With K > 1 the block optimum is usually not unique: only the slots that
/// attain the common ℓ∞ bound are pinned, and every other slot may take any
/// interpolating point inside the bound. `PerSlot` starts from the stacked
/// single-slot optima, which keeps those slots near equal magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquidInit {
    Zero,
    PerSlot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidOptions {
    pub max_iters: usize,
    pub step_size: StepSize,
    pub rel_tol: f64,
    pub momentum: bool,
    pub init: SquidInit,
    /// Keep the objective value of every iterate in [`SquidRelaxation::history`].
    pub record_history: bool,
}

impl Default for SquidOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step_size: StepSize::Auto,
            rel_tol: 1e-6,
            momentum: true,
            init: SquidInit::PerSlot,
            record_history: false,
        }
    }
}

impl SquidOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("squid max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("squid rel_tol must be > 0".into()));
        }
        if let StepSize::Fixed(g) = self.step_size {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("squid step size must be > 0, got {g}")));
            }
        }
        Ok(())
    }
}

/// `‖s̄ − H̄b̄‖₂² + (2UBKN₀/P)‖b̄‖∞²` on explicit vectorized data.
#[allow(clippy::too_many_arguments)]
pub fn linf_sq_objective(
    bbar: &RVector,
    hbar: &RMatrix,
    sbar: &RVector,
    num_ues: usize,
    num_bs_antennas: usize,
    num_slots: usize,
    noise_var: f64,
    transmit_power: f64,
) -> f64 {
    let weight = penalty_weight(num_ues, num_bs_antennas, num_slots, noise_var, transmit_power);
    (sbar - hbar * bbar).norm_squared() + weight * bbar.amax().powi(2)
}

fn penalty_weight(u: usize, b: usize, k: usize, noise_var: f64, power: f64) -> f64 {
    2.0 * (u * b * k) as f64 * noise_var / power
}

/// Proximal operator of `τ‖·‖∞²`: the minimizer of `τ‖x‖∞² + ½‖x − v‖₂²`.
///
/// The solution clips every entry to `[−t, t]`, where `t` solves
/// `2τt = Σ max(|vᵢ| − t, 0)`. With magnitudes sorted as `u₁ ≥ … ≥ uₙ`
/// and `u_{n+1} = 0`, `t = (Σ_{i≤k} uᵢ)/(2τ + k)` for the smallest `k`
/// with `t ≥ u_{k+1}`; then `t ≤ u_k` holds automatically.
pub fn prox_sq_inf(v: &[f64], tau: f64) -> Vec<f64> {
    let t = prox_sq_inf_threshold(v, tau);
    v.iter().map(|&x| x.clamp(-t, t)).collect()
}

/// The clipping level `t = ‖prox_sq_inf(v, τ)‖∞`.
pub fn prox_sq_inf_threshold(v: &[f64], tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    for k in 0..mags.len() {
        cumsum += mags[k];
        let t = cumsum / (2.0 * tau + (k + 1) as f64);
        let next = mags.get(k + 1).copied().unwrap_or(0.0);
        if t >= next {
            return t;
        }
    }
    0.0
}

fn prox_in_place(m: &mut RMatrix, tau: f64) {
    let t = prox_sq_inf_threshold(m.as_slice(), tau);
    m.apply(|x| *x = x.clamp(-t, t));
}

/// Largest eigenvalue of `AᵀA` by power iteration on the smaller Gram matrix.
pub fn gram_spectral_norm(a: &RMatrix, iters: usize, tol: f64) -> f64 {
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = RVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    // The Rayleigh quotient at the final vector is the tightest estimate.
    v.dot(&(&gram * &v)).max(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquidRelaxation {
    /// `b̄_R`, length `2BK`.
    pub b: RVector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub step_size: f64,
    /// Objective at the initial point followed by one entry per iteration,
    /// when requested.
    pub history: Vec<f64>,
}

struct Problem<'a> {
    hr: &'a RMatrix,
    sr: RMatrix,
    weight: f64,
}

impl Problem<'_> {
    fn objective_from(&self, hb: &RMatrix, b: &RMatrix) -> f64 {
        (&self.sr - hb).norm_squared() + self.weight * b.amax().powi(2)
    }
}

/// Proximal gradient on one problem, starting from `x0`.
fn solve(prob: &Problem<'_>, x0: RMatrix, step: f64, opts: &SquidOptions) -> SquidRelaxation {
    let hrt = prob.hr.transpose();
    let tau = step * prob.weight;

    let mut x = x0;
    let mut hx = prob.hr * &x;
    let mut f = prob.objective_from(&hx, &x);
    let mut best = (f, x.clone());
    let mut history = Vec::new();
    if opts.record_history {
        history.push(f);
    }

    // Extrapolated point and its image under H_R.
    let mut y = x.clone();
    let mut hy = hx.clone();
    let mut theta = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        let grad = (&hrt * (&hy - &prob.sr)) * 2.0;
        let mut x_next = &y - grad * step;
        prox_in_place(&mut x_next, tau);
        let hx_next = prob.hr * &x_next;
        let f_next = prob.objective_from(&hx_next, &x_next);
        if opts.record_history {
            history.push(f_next);
        }
        if f_next < best.0 {
            best = (f_next, x_next.clone());
        }

        let change = (f - f_next).abs();
        let scale = f.abs().max(f_next.abs()).max(f64::MIN_POSITIVE);

        if opts.momentum {
            if f_next > f {
                // Restart from the last accepted iterate without momentum.
                theta = 1.0;
                y.copy_from(&x);
                hy.copy_from(&hx);
                continue;
            }
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let w = (theta - 1.0) / theta_next;
            y = &x_next + (&x_next - &x) * w;
            hy = &hx_next + (&hx_next - &hx) * w;
            theta = theta_next;
        } else {
            y.copy_from(&x_next);
            hy.copy_from(&hx_next);
        }
        x = x_next;
        hx = hx_next;
        f = f_next;

        if change <= opts.rel_tol * scale {
            converged = true;
            break;
        }
    }

    let (objective, bmat) = best;
    SquidRelaxation {
        b: RVector::from_column_slice(bmat.as_slice()),
        objective,
        iterations,
        converged,
        step_size: step,
        history,
    }
}

pub fn squid_relax(
    h: &ChannelMatrix,
    s: &SymbolFrame,
    cfg: &SystemConfig,
    opts: &SquidOptions,
) -> Result<SquidRelaxation> {
    opts.validate()?;
    let (u, b, k) = (h.num_ues(), h.num_bs_antennas(), s.num_slots());
    if s.num_ues() != u {
        return Err(Error::dims("squid_relax: users", u, s.num_ues()));
    }
    let prob = Problem {
        hr: h.real(),
        sr: embed_frame(&s.s),
        weight: penalty_weight(u, b, k, cfg.noise_var, cfg.transmit_power),
    };

    let step = match opts.step_size {
        StepSize::Fixed(g) => g,
        StepSize::Auto => {
            let lipschitz = 2.0 * gram_spectral_norm(prob.hr, 50, 1e-6);
            if lipschitz > 0.0 {
                1.0 / lipschitz
            } else {
                1.0
            }
        }
    };

    let zero = RMatrix::zeros(2 * b, k);
    let (x0, mut warm_iters, mut warm_converged) = match opts.init {
        SquidInit::Zero => (zero, 0, true),
        SquidInit::PerSlot if k == 1 => (zero, 0, true),
        SquidInit::PerSlot => {
            // Each slot alone, with its own ℓ∞ bound and the K = 1 weight.
            let slot_opts = SquidOptions { record_history: false, ..*opts };
            let mut x0 = RMatrix::zeros(2 * b, k);
            let (mut iters, mut conv) = (0, true);
            for slot in 0..k {
                let sub = Problem {
                    hr: prob.hr,
                    sr: prob.sr.columns(slot, 1).into_owned(),
                    weight: penalty_weight(u, b, 1, cfg.noise_var, cfg.transmit_power),
                };
                let r = solve(&sub, RMatrix::zeros(2 * b, 1), step, &slot_opts);
                x0.set_column(slot, &r.b);
                iters += r.iterations;
                conv &= r.converged;
            }
            let f0 = prob.objective_from(&(prob.hr * &x0), &x0);
            if f0 <= prob.sr.norm_squared() {
                (x0, iters, conv)
            } else {
                (zero, iters, conv)
            }
        }
    };

    let mut relaxed = solve(&prob, x0, step, opts);
    warm_iters += relaxed.iterations;
    warm_converged &= relaxed.converged;
    relaxed.iterations = warm_iters;
    relaxed.converged = warm_converged;
    Ok(relaxed)
}

/// Relax, de-embed, take signs, and assign the MSE-optimal β.
pub fn squid_precode(
    s: &SymbolFrame,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    opts: &SquidOptions,
) -> Result<PrecodeResult> {
    let relaxed = squid_relax(h, s, cfg, opts)?;
    let b = unvec_frame(&relaxed.b, h.num_bs_antennas(), s.num_slots())?;
    let x = quantize_frame(&b, cfg.transmit_power);
    let diag = PrecodeDiagnostics {
        iterations: relaxed.iterations,
        converged: relaxed.converged,
        ..PrecodeDiagnostics::default()
    };
    PrecodeResult::with_optimal_beta(x, s, h, cfg.noise_var, diag)
}
