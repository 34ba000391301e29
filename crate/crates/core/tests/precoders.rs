use onebit::linear::{linear_quantized_precode, LinearKind};
use onebit::model::{gen_rayleigh_channel, qp_objective};
use onebit::sdr::{sdr_precode, sdp_for_frame, solve_sdp, SdpOptions, SdrOptions};
use onebit::sim::brute_force_qp;
use onebit::squid::{squid_precode, squid_relax, SquidOptions};
use onebit::{Constellation, ConstellationId, SystemConfig};

fn qpsk() -> Constellation {
    Constellation::new(ConstellationId::Qpsk)
}

#[test]
fn sdr_rounding_is_near_optimal_on_two_by_two() {
    let cfg = SystemConfig::from_snr_db(2, 2, 1, 10.0).unwrap();
    let mut within = 0;
    for seed in 0..100 {
        let s = qpsk().random_frame(2, 1, 0, seed);
        let h = gen_rayleigh_channel(2, 2, 1000 + seed);
        let opt = brute_force_qp(&s.s, &h, &cfg).unwrap().objective;
        let r = sdr_precode(&s, &h, &cfg, &SdrOptions::default()).unwrap();
        let obj = qp_objective(&s.s, &h, &r.x, r.beta, cfg.noise_var).unwrap();
        assert!(obj >= opt * (1.0 - 1e-12));
        if obj <= 1.05 * opt {
            within += 1;
        }
    }
    assert!(within >= 90, "{within}/100 within 5%");
}

#[test]
fn sdp_value_bounds_every_sign_pattern() {
    for seed in 0..30 {
        let b = 2 + (seed as usize % 2);
        let cfg = SystemConfig::from_snr_db(b, 1, 1, 5.0).unwrap();
        let s = qpsk().random_frame(1, 1, 0, seed);
        let h = gen_rayleigh_channel(1, b, 500 + seed);
        let opts = SdpOptions {
            tol: 1e-10,
            max_iters: 100_000,
            ..SdpOptions::default()
        };
        let sol = solve_sdp(&sdp_for_frame(&s, &h, &cfg).unwrap(), &opts).unwrap();
        assert!(sol.converged);
        let opt = brute_force_qp(&s.s, &h, &cfg).unwrap().objective;
        assert!(sol.objective <= opt + 1e-6, "seed {seed}: {} > {opt}", sol.objective);
    }
}

#[test]
fn squid_relaxation_lower_bounds_the_discrete_optimum() {
    for seed in 0..40 {
        let (b, u, k) = (2 + seed as usize % 2, 1 + seed as usize % 2, 1 + (seed as usize / 2) % 2);
        let cfg = SystemConfig::from_snr_db(b, u, k, -5.0 + (seed % 5) as f64 * 5.0).unwrap();
        let s = qpsk().random_frame(u, k, 0, seed);
        let h = gen_rayleigh_channel(u, b, 700 + seed);
        let opts = SquidOptions {
            max_iters: 20_000,
            rel_tol: 1e-12,
            ..SquidOptions::default()
        };
        let relaxed = squid_relax(&h, &s, &cfg, &opts).unwrap();
        let opt = brute_force_qp(&s.s, &h, &cfg).unwrap().objective;
        assert!(relaxed.objective <= opt * (1.0 + 1e-6), "seed {seed}: {} > {opt}", relaxed.objective);
    }
}

#[test]
fn squid_matches_oracle_when_relaxed_signs_agree() {
    let cfg = SystemConfig::from_snr_db(2, 1, 1, 10.0).unwrap();
    let mut agreed = 0;
    for seed in 0..50 {
        let s = qpsk().random_frame(1, 1, 0, seed);
        let h = gen_rayleigh_channel(1, 2, 900 + seed);
        let opt = brute_force_qp(&s.s, &h, &cfg).unwrap();
        let r = squid_precode(&s, &h, &cfg, &SquidOptions::default()).unwrap();
        if r.x == opt.x {
            agreed += 1;
            let obj = qp_objective(&s.s, &h, &r.x, r.beta, cfg.noise_var).unwrap();
            assert!((obj - opt.objective).abs() <= 1e-12 * opt.objective.max(1.0));
        }
    }
    assert!(agreed > 0);
}

#[test]
fn squid_beats_zf_quantization_at_scale() {
    let c = Constellation::new(ConstellationId::Qam16);
    let mut wins = 0;
    for seed in 0..100u64 {
        let cfg = SystemConfig::from_snr_db(128, 16, 10, -5.0 + (seed % 6) as f64 * 5.0).unwrap();
        let s = c.random_frame(16, 10, 0, seed);
        let h = gen_rayleigh_channel(16, 128, 10_000 + seed);
        let sq = squid_precode(&s, &h, &cfg, &SquidOptions::default()).unwrap();
        let zf = linear_quantized_precode(&s, &h, LinearKind::ZeroForcing, &cfg).unwrap();
        let obj = |x, beta| qp_objective(&s.s, &h, x, beta, cfg.noise_var).unwrap();
        if obj(&sq.x, sq.beta) < obj(&zf.x, zf.beta) {
            wins += 1;
        }
        assert_eq!(sq.slot_powers().len(), 10);
        for p in sq.slot_powers() {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }
    assert!(wins >= 95, "{wins}/100");
}

/// Full-size single-slot SDP; takes tens of minutes on one core.
#[test]
#[ignore]
fn sdr_full_size_smoke() {
    let cfg = SystemConfig::from_snr_db(128, 16, 1, 10.0).unwrap();
    let mut converged = 0;
    for seed in 0..100 {
        let s = qpsk().random_frame(16, 1, 0, seed);
        let h = gen_rayleigh_channel(16, 128, 100 + seed);
        let sol = solve_sdp(&sdp_for_frame(&s, &h, &cfg).unwrap(), &SdpOptions::default()).unwrap();
        converged += usize::from(sol.converged);
    }
    assert!(converged >= 95, "{converged}/100");
}
