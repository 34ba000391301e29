//! Semidefinite relaxation of 1-bit precoding with a built-in ADMM solver.
//!
//! Lifting `[b̄ᵀ 1]ᵀ[b̄ᵀ 1]` to a PSD matrix `X` of order `n = 2BK + 1` turns
//! the quadratic objective into `tr(TX)` with
//!
//! ```text
//! T = [ H̄ᵀH̄ + (UN₀/P)·I   −H̄ᵀs̄ ]
//!     [ −s̄ᵀH̄              ‖s̄‖²  ]
//! ```
//!
//! subject to equal leading diagonal entries, `X_nn = 1`, and `X ⪰ 0`.
//! ADMM alternates between the affine constraint set (closed-form
//! projection) and the PSD cone (eigenvalue clipping).

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linear::signum;
use crate::model::{
    embed_frame, unvec_frame, vectorize_system, ChannelMatrix, PrecodeDiagnostics, PrecodeResult,
    RMatrix, RVector, SymbolFrame, SystemConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub t: RMatrix,
}

impl SdpProblem {
    pub fn order(&self) -> usize {
        self.t.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// PSD iterate.
    pub x: RMatrix,
    /// `tr(T·X)` at the affine-feasible projection of `x`.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max(primal, dual)` residual per iteration, when requested.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty.
    pub rho: f64,
    pub record_history: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 5000,
            rho: 1.0,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrOptions {
    pub sdp: SdpOptions,
    /// Solve one joint SDP over all K slots instead of K single-slot SDPs.
    pub block_mode: bool,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            block_mode: false,
        }
    }
}

pub fn assemble_t(
    hbar: &RMatrix,
    sbar: &RVector,
    num_ues: usize,
    noise_var: f64,
    transmit_power: f64,
) -> Result<SdpProblem> {
    if hbar.nrows() != sbar.len() {
        return Err(Error::dims("assemble_t: s̄ length", hbar.nrows(), sbar.len()));
    }
    let m = hbar.ncols();
    let n = m + 1;
    let mut t = RMatrix::zeros(n, n);
    let gram = hbar.transpose() * hbar;
    t.view_mut((0, 0), (m, m)).copy_from(&gram);
    let reg = num_ues as f64 * noise_var / transmit_power;
    for i in 0..m {
        t[(i, i)] += reg;
    }
    let cross = -(hbar.transpose() * sbar);
    for i in 0..m {
        t[(i, m)] = cross[i];
        t[(m, i)] = cross[i];
    }
    t[(m, m)] = sbar.norm_squared();
    Ok(SdpProblem { t })
}

const RHO_PERIOD: usize = 20;
const OVER_RELAXATION: f64 = 1.6;
const RHO_FREEZE: usize = 2000;

fn symmetric_eigen(m: RMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(Error::Eigen("symmetric QR iteration did not converge"))
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
pub fn project_psd(m: &RMatrix) -> Result<RMatrix> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = symmetric_eigen(sym)?;
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let mut factor = RMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        factor.set_column(c, &(eig.eigenvectors.column(i) * scale));
    }
    let out = &factor * factor.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Projection onto `{X : X₁₁ = … = X_{n−1,n−1}, X_nn = 1}`.
fn project_affine(m: &mut RMatrix) {
    let n = m.nrows();
    let mean = (0..n - 1).map(|i| m[(i, i)]).sum::<f64>() / (n - 1) as f64;
    for i in 0..n - 1 {
        m[(i, i)] = mean;
    }
    m[(n - 1, n - 1)] = 1.0;
}

fn trace_product(a: &RMatrix, b: &RMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solves `min tr(TX)` over the tied-diagonal affine set intersected with
/// the PSD cone.
///
/// Scaled ADMM with `T` normalized by its largest entry:
///
/// ```text
/// X ← Π_affine(Z − W − T/ρ)
/// X̂ ← αX + (1 − α)Z,   α = 1.6
/// Z ← Π_psd(X̂ + W)
/// W ← W + X̂ − Z
/// ```
///
/// Residuals are relative: primal `‖X − Z‖ / max(1, ‖Z‖)` and dual
/// `ρ‖Z − Z_prev‖ / max(1, ρ‖W‖)`. ρ doubles (halves) when the primal residual
/// exceeds the dual one by more than 10× (or the reverse), checked every
/// `RHO_PERIOD` iterations and never after `RHO_FREEZE`; updating ρ every
/// iteration can cycle.
pub fn solve_sdp(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = p.order();
    if n < 2 || p.t.ncols() != n {
        return Err(Error::InvalidParameter(format!("SDP order must be >= 2, got {n}")));
    }
    if !(opts.tol > 0.0) || opts.max_iters == 0 || !(opts.rho > 0.0) {
        return Err(Error::InvalidParameter("SDP options need tol > 0, max_iters >= 1, rho > 0".into()));
    }
    let scale = p.t.amax();
    let t = if scale > 0.0 { &p.t / scale } else { p.t.clone() };

    let mut rho = opts.rho;
    let mut z = RMatrix::identity(n, n);
    let mut w = RMatrix::zeros(n, n);
    let mut history = Vec::new();
    let (mut r_rel, mut s_rel) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        let mut x = &z - &w - &t / rho;
        project_affine(&mut x);
        let xh = &x * OVER_RELAXATION + &z * (1.0 - OVER_RELAXATION);
        let z_prev = std::mem::replace(&mut z, project_psd(&(&xh + &w))?);
        w += &xh - &z;

        let r = (&x - &z).norm();
        let s = rho * (&z - &z_prev).norm();
        r_rel = r / z.norm().max(1.0);
        s_rel = s / (rho * w.norm()).max(1.0);
        if opts.record_history {
            history.push(r_rel.max(s_rel));
        }
        if r_rel < opts.tol && s_rel < opts.tol {
            converged = true;
            break;
        }
        if iterations > RHO_FREEZE || iterations % RHO_PERIOD != 0 {
            continue;
        }
        if r > 10.0 * s {
            rho *= 2.0;
            w /= 2.0;
        } else if s > 10.0 * r {
            rho /= 2.0;
            w *= 2.0;
        }
    }

    let mut feasible = z.clone();
    project_affine(&mut feasible);
    let objective = trace_product(&p.t, &feasible);
    Ok(SdpSolution {
        x: z,
        objective,
        primal_residual: r_rel,
        dual_residual: s_rel,
        iterations,
        converged,
        residual_history: history,
    })
}

/// Sign pattern of the leading eigenvector of an SDP solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSigns {
    /// ±1 for each of the first `n − 1` coordinates.
    pub signs: RVector,
    /// The two largest eigenvalues were numerically equal.
    pub degenerate: bool,
}

pub fn leading_signs(sol: &SdpSolution) -> Result<RankOneSigns> {
    let n = sol.x.nrows();
    let eig = symmetric_eigen(sol.x.clone())?;
    let mut lead = 0;
    for i in 1..n {
        if eig.eigenvalues[i] > eig.eigenvalues[lead] {
            lead = i;
        }
    }
    let top = eig.eigenvalues[lead];
    let runner_up = (0..n)
        .filter(|&i| i != lead)
        .map(|i| eig.eigenvalues[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let degenerate = n > 1 && (top - runner_up) <= 1e-8 * top.abs().max(f64::MIN_POSITIVE);

    let mut v = eig.eigenvectors.column(lead).clone_owned();
    // The last coordinate stands for the constant 1.
    if v[n - 1] < 0.0 {
        v = -v;
    }
    Ok(RankOneSigns {
        signs: RVector::from_fn(n - 1, |i, _| signum(v[i])),
        degenerate,
    })
}

/// Rounds an SDP solution to `𝒳^{B×K}` and assigns the MSE-optimal β.
pub fn extract_rank_one(
    sol: &SdpSolution,
    s: &SymbolFrame,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
) -> Result<PrecodeResult> {
    let (b, k) = (h.num_bs_antennas(), s.num_slots());
    if sol.x.nrows() != 2 * b * k + 1 {
        return Err(Error::dims("extract_rank_one: SDP order", 2 * b * k + 1, sol.x.nrows()));
    }
    let lead = leading_signs(sol)?;
    let level = (cfg.transmit_power / (2.0 * b as f64)).sqrt();
    let x = unvec_frame(&(lead.signs * level), b, k)?;
    let diag = PrecodeDiagnostics {
        iterations: sol.iterations,
        converged: sol.converged,
        degenerate: lead.degenerate,
        beta_clamped: false,
    };
    PrecodeResult::with_optimal_beta(x, s, h, cfg.noise_var, diag)
}

fn slot_frame(s: &SymbolFrame, k: usize) -> SymbolFrame {
    SymbolFrame {
        s: s.s.columns(k, 1).into_owned(),
        bits: Vec::new(),
        pilot_slots: 0,
    }
}

/// The SDP for a frame, either jointly over all slots or for one slot.
pub fn sdp_for_frame(s: &SymbolFrame, h: &ChannelMatrix, cfg: &SystemConfig) -> Result<SdpProblem> {
    let k = s.num_slots();
    let (hbar, sbar) = vectorize_system(h.real(), &embed_frame(&s.s), k)?;
    assemble_t(&hbar, &sbar, h.num_ues(), cfg.noise_var, cfg.transmit_power)
}

/// Relaxation value: the joint SDP optimum in block mode, or the sum of the
/// single-slot optima otherwise. Both lower-bound the discrete optimum.
pub fn sdr_relaxation_value(
    s: &SymbolFrame,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    opts: &SdrOptions,
) -> Result<f64> {
    if opts.block_mode {
        return Ok(solve_sdp(&sdp_for_frame(s, h, cfg)?, &opts.sdp)?.objective);
    }
    let mut total = 0.0;
    for k in 0..s.num_slots() {
        total += solve_sdp(&sdp_for_frame(&slot_frame(s, k), h, cfg)?, &opts.sdp)?.objective;
    }
    Ok(total)
}

pub fn sdr_precode(
    s: &SymbolFrame,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    opts: &SdrOptions,
) -> Result<PrecodeResult> {
    if s.num_ues() != h.num_ues() {
        return Err(Error::dims("sdr_precode: users", h.num_ues(), s.num_ues()));
    }
    if opts.block_mode {
        let sol = solve_sdp(&sdp_for_frame(s, h, cfg)?, &opts.sdp)?;
        return extract_rank_one(&sol, s, h, cfg);
    }
    let (b, k) = (h.num_bs_antennas(), s.num_slots());
    let level = (cfg.transmit_power / (2.0 * b as f64)).sqrt();
    let mut x = crate::model::CMatrix::zeros(b, k);
    let mut diag = PrecodeDiagnostics::exact();
    for slot in 0..k {
        let sol = solve_sdp(&sdp_for_frame(&slot_frame(s, slot), h, cfg)?, &opts.sdp)?;
        let lead = leading_signs(&sol)?;
        let col = unvec_frame(&(lead.signs * level), b, 1)?;
        x.set_column(slot, &col.column(0));
        diag.merge(&PrecodeDiagnostics {
            iterations: sol.iterations,
            converged: sol.converged,
            degenerate: lead.degenerate,
            beta_clamped: false,
        });
    }
    PrecodeResult::with_optimal_beta(x, s, h, cfg.noise_var, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{Constellation, ConstellationId};
    use crate::model::{gen_rayleigh_channel, vec_frame, CMatrix, C64};
    use crate::rng;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> RMatrix {
        let mut rng = rng::stream(seed);
        let a = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn random_psd(n: usize, rank: usize, rng: &mut impl Rng) -> RMatrix {
        let g = RMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose()
    }

    #[test]
    fn t_without_symbols() {
        let h = gen_rayleigh_channel(2, 3, 1);
        let p = assemble_t(h.real(), &RVector::zeros(4), 2, 0.1, 1.0).unwrap();
        let n = p.order();
        assert_eq!(n, 7);
        assert_eq!(p.t[(n - 1, n - 1)], 0.0);
        assert!((0..n - 1).all(|i| p.t[(i, n - 1)] == 0.0 && p.t[(n - 1, i)] == 0.0));
        assert_eq!(p.t, p.t.transpose());
    }

    #[test]
    fn t_quadratic_form_identity() {
        let mut rng = rng::stream(2);
        for seed in 0..20 {
            let (u, b, k) = (2, 3, 2);
            let h = gen_rayleigh_channel(u, b, seed);
            let frame = Constellation::new(ConstellationId::Qam16).random_frame(u, k, 0, seed + 100);
            let cfg = SystemConfig::new(b, u, k, 1.5, 0.2).unwrap();
            let p = sdp_for_frame(&frame, &h, &cfg).unwrap();
            let (hbar, sbar) = vectorize_system(h.real(), &embed_frame(&frame.s), k).unwrap();
            let bbar = RVector::from_fn(2 * b * k, |_, _| rng.random_range(-1.0..1.0));
            let lifted = bbar.clone().insert_row(2 * b * k, 1.0);
            let quad = lifted.dot(&(&p.t * &lifted));
            let direct = (&sbar - &hbar * &bbar).norm_squared() + u as f64 * 0.2 / 1.5 * bbar.norm_squared();
            assert!((quad - direct).abs() < 1e-10 * direct.max(1.0), "{quad} vs {direct}");
        }
    }

    #[test]
    fn psd_projection_cases() {
        let mut rng = rng::stream(3);
        let m = random_psd(5, 5, &mut rng);
        assert!((project_psd(&m).unwrap() - &m).amax() < 1e-12);

        let d = RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, -2.0]));
        let out = project_psd(&d).unwrap();
        assert!((out - RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, 0.0]))).amax() < 1e-15);
    }

    #[test]
    fn psd_projection_is_nearest() {
        let mut rng = rng::stream(4);
        let m = random_symmetric(6, 5);
        let proj = project_psd(&m).unwrap();
        assert!(proj.clone().symmetric_eigenvalues().min() > -1e-12);
        let d = (&proj - &m).norm();
        for _ in 0..1000 {
            let rank = rng.random_range(1..=6);
            let y = random_psd(6, rank, &mut rng);
            assert!(d <= (&y - &m).norm() + 1e-12);
        }
    }

    #[test]
    fn diagonal_penalty_goes_to_zero() {
        let t = RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, 1.0, 0.0]));
        let sol = solve_sdp(&SdpProblem { t }, &SdpOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.objective.abs() < 1e-6);
        assert!(sol.x[(0, 0)].abs() < 1e-5 && sol.x[(1, 1)].abs() < 1e-5);
        assert!((sol.x[(2, 2)] - 1.0).abs() < 1e-5);
    }

    /// For `B = K = 1` there are two equality constraints, so some optimal
    /// solution has rank one: `[p, ±p, 1]`. Minimize the quadratic in `p` on
    /// a fine grid for both signs.
    fn rank_one_search(t: &RMatrix) -> f64 {
        let mut best = f64::INFINITY;
        for sign in [1.0, -1.0] {
            for i in -200_000..=200_000 {
                let p = i as f64 * 2e-5;
                let v = RVector::from_vec(vec![p, sign * p, 1.0]);
                best = best.min(v.dot(&(t * &v)));
            }
        }
        best
    }

    #[test]
    fn tiny_instance_matches_parameterized_search() {
        let con = Constellation::new(ConstellationId::Qam16);
        for seed in 0..6 {
            let h = gen_rayleigh_channel(1, 1, seed);
            let frame = con.random_frame(1, 1, 0, seed + 50);
            let cfg = SystemConfig::new(1, 1, 1, 1.0, 0.05 + 0.1 * seed as f64).unwrap();
            let p = sdp_for_frame(&frame, &h, &cfg).unwrap();
            let opts = SdpOptions {
                tol: 1e-10,
                max_iters: 100_000,
                ..SdpOptions::default()
            };
            let sol = solve_sdp(&p, &opts).unwrap();
            let oracle = rank_one_search(&p.t);
            assert!((sol.objective - oracle).abs() < 1e-4, "seed {seed}: {} vs {}", sol.objective, oracle);
        }
    }

    #[test]
    fn solution_invariants_and_residual_windows() {
        let h = gen_rayleigh_channel(2, 4, 7);
        let frame = Constellation::new(ConstellationId::Qpsk).random_frame(2, 1, 0, 8);
        let cfg = SystemConfig::from_snr_db(4, 2, 1, 10.0).unwrap();
        let opts = SdpOptions {
            record_history: true,
            max_iters: 20_000,
            ..SdpOptions::default()
        };
        let sol = solve_sdp(&sdp_for_frame(&frame, &h, &cfg).unwrap(), &opts).unwrap();
        assert!(sol.converged);
        assert!(sol.x.clone().symmetric_eigenvalues().min() >= -1e-8);
        let n = sol.x.nrows();
        let d0 = sol.x[(0, 0)];
        for i in 0..n - 1 {
            assert!((sol.x[(i, i)] - d0).abs() <= 1e-6 * sol.x.norm().max(1.0));
        }
        assert!((sol.x[(n - 1, n - 1)] - 1.0).abs() <= 1e-6 * sol.x.norm().max(1.0));
        let window_min: Vec<f64> = sol
            .residual_history
            .chunks(100)
            .map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min))
            .collect();
        for w in window_min.windows(2) {
            assert!(w[1] <= w[0], "{window_min:?}");
        }
    }

    #[test]
    fn rank_one_solution_is_recovered_exactly() {
        let (b, k) = (3, 2);
        let cfg = SystemConfig::new(b, 2, k, 1.0, 0.1).unwrap();
        let h = gen_rayleigh_channel(2, b, 9);
        let frame = Constellation::new(ConstellationId::Qpsk).random_frame(2, k, 0, 10);
        let l = cfg.quant_level();
        let mut rng = rng::stream(11);
        let x = CMatrix::from_fn(b, k, |_, _| {
            C64::new(if rng.random::<bool>() { l } else { -l }, if rng.random::<bool>() { l } else { -l })
        });
        let bbar = vec_frame(&x) * 0.37;
        let lifted = bbar.insert_row(2 * b * k, 1.0);
        let mat = &lifted * lifted.transpose();
        let sol = SdpSolution {
            x: mat.clone(),
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            converged: true,
            residual_history: vec![],
        };
        let r = extract_rank_one(&sol, &frame, &h, &cfg).unwrap();
        assert_eq!(r.x, x);

        // The same matrix built from −v gives the same signs.
        let neg = -lifted;
        let sol_neg = SdpSolution {
            x: &neg * neg.transpose(),
            ..sol.clone()
        };
        assert_eq!(extract_rank_one(&sol_neg, &frame, &h, &cfg).unwrap().x, x);
    }

    #[test]
    fn extraction_output_is_one_bit() {
        let (u, b) = (2, 4);
        let h = gen_rayleigh_channel(u, b, 12);
        let frame = Constellation::new(ConstellationId::Psk8).random_frame(u, 3, 0, 13);
        let cfg = SystemConfig::new(b, u, 3, 2.0, 0.05).unwrap();
        let r = sdr_precode(&frame, &h, &cfg, &SdrOptions::default()).unwrap();
        let l = cfg.quant_level();
        assert!(r.x.iter().all(|z| z.re.abs() == l && z.im.abs() == l));
        for p in r.slot_powers() {
            assert!((p - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_slot_mode_equals_single_slot_calls() {
        let (u, b, k) = (2, 3, 3);
        let h = gen_rayleigh_channel(u, b, 14);
        let frame = Constellation::new(ConstellationId::Qpsk).random_frame(u, k, 0, 15);
        let cfg = SystemConfig::from_snr_db(b, u, k, 5.0).unwrap();
        let whole = sdr_precode(&frame, &h, &cfg, &SdrOptions::default()).unwrap();
        for slot in 0..k {
            let one = slot_frame(&frame, slot);
            let r = sdr_precode(&one, &h, &cfg.with_slots(1), &SdrOptions::default()).unwrap();
            assert_eq!(r.x.column(0), whole.x.column(slot));
        }
    }

    #[test]
    fn block_and_per_slot_agree_when_separable() {
        // B = 2, U = 1, K = 2 with both slots carrying the same symbol: the
        // joint optimum repeats the single-slot optimum in each slot.
        let h = gen_rayleigh_channel(1, 2, 16);
        let sym = C64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2);
        let frame = SymbolFrame {
            s: CMatrix::from_element(1, 2, sym),
            bits: vec![],
            pilot_slots: 0,
        };
        let cfg = SystemConfig::from_snr_db(2, 1, 2, 10.0).unwrap();
        let tight = SdpOptions {
            tol: 1e-9,
            max_iters: 100_000,
            ..SdpOptions::default()
        };
        let block = sdr_relaxation_value(&frame, &h, &cfg, &SdrOptions { sdp: tight, block_mode: true }).unwrap();
        let slots = sdr_relaxation_value(&frame, &h, &cfg, &SdrOptions { sdp: tight, block_mode: false }).unwrap();
        assert!((block - slots).abs() < 1e-5 * slots.max(1.0), "{block} vs {slots}");
    }

    #[test]
    fn rejects_bad_problems() {
        let t = RMatrix::zeros(1, 1);
        assert!(solve_sdp(&SdpProblem { t }, &SdpOptions::default()).is_err());
        let t = RMatrix::identity(3, 3);
        let bad = SdpOptions {
            tol: 0.0,
            ..SdpOptions::default()
        };
        assert!(solve_sdp(&SdpProblem { t }, &bad).is_err());
    }
}
