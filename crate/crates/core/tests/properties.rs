use pgpoll_core::analytic::{
    allocation_probability, chain_stationary, state_masses, throughput, waiting_delay,
};
use pgpoll_core::{residuals, solve, Backoff, NetworkConfig, Options, SolverOptions, ValidConfig};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = ValidConfig> {
    (
        1u32..=40,
        1u32..=24,
        1u32..=30,
        0u32..=4,
        1u32..=6,
        0u32..=5,
        0u32..=5,
        0.02f64..1.0,
    )
        .prop_map(|(n, n_tos, l, w_extra, m, d, g, lambda)| {
            NetworkConfig {
                n_ss: n,
                n_tos,
                n_slots: l,
                w0: n_tos + w_extra * 7,
                m_exp: 3,
                t16_frames: m,
                max_retx: d,
                max_piggy: g,
                lambda,
                ..Default::default()
            }
            .validate()
            .unwrap()
        })
}

fn unit() -> impl Strategy<Value = f64> {
    0.0f64..=1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn state_masses_sum_to_one(cfg in arb_config(), p in 0.0f64..0.999, q in 0.001f64..=1.0, pi0 in unit()) {
        let backoff = Backoff::new(&cfg);
        let chain = chain_stationary(&cfg, &backoff, p, q, pi0).unwrap();
        let masses = state_masses(&cfg, &backoff, p, q, pi0, &chain);
        prop_assert!((masses.total() - 1.0).abs() < 1e-12);
        prop_assert!(chain.b00 > 0.0 && chain.b00 <= 1.0);
    }

    #[test]
    fn allocation_monotone_in_slots_and_stations(
        n in 2u32..=50, l in 1u32..=34, p_s in 0.0f64..0.5, q in 0.01f64..=1.0, pi0 in unit(), g in 0u32..=5,
    ) {
        let make = |n_ss, n_slots| NetworkConfig { n_ss, n_slots, max_piggy: g, ..Default::default() }.validate().unwrap();
        let base = allocation_probability(&make(n, l), p_s, q, pi0).r;
        let more_slots = allocation_probability(&make(n, l + 1), p_s, q, pi0).r;
        let more_stations = allocation_probability(&make(n + 1, l), p_s, q, pi0).r;
        prop_assert!(more_slots <= base + 1e-12, "L: {base} -> {more_slots}");
        prop_assert!(more_stations >= base - 1e-12, "N: {base} -> {more_stations}");
        if l >= n {
            prop_assert_eq!(base, 0.0);
        }
    }

    #[test]
    fn throughput_splits_exactly(cfg in arb_config(), p_s in 0.0f64..0.5, q in 0.01f64..=1.0, z in 0.0f64..5.0, p_d in unit(), b00 in unit()) {
        let t = throughput(&cfg, p_s, q, z, p_d, b00);
        prop_assert_eq!(t.th, t.th_c + t.th_pg);
    }

    #[test]
    fn no_piggyback_means_zero_piggy_terms(cfg in arb_config(), p in 0.0f64..0.99, q in 0.01f64..=1.0, pi0 in unit(), p_s in 0.0f64..0.5) {
        let cfg = NetworkConfig { max_piggy: 0, ..*cfg }.validate().unwrap();
        let backoff = Backoff::new(&cfg);
        let chain = chain_stationary(&cfg, &backoff, p, q, pi0).unwrap();
        prop_assert_eq!(chain.z, 0.0);
        let alloc = allocation_probability(&cfg, p_s, q, pi0);
        prop_assert_eq!(alloc.e_p, 0.0);
        let t = throughput(&cfg, p_s, q, chain.z, 0.3, chain.b00);
        prop_assert_eq!(t.th_pg, 0.0);
    }

    #[test]
    fn waiting_delay_at_least_half_frame(cfg in arb_config(), es in 1.0f64..30.0, spread in 0.0f64..5.0, pi0 in unit()) {
        let w = waiting_delay(&cfg, es, es, es * es + spread, pi0);
        if let Some(ew) = w.ew {
            prop_assert!(ew >= 0.5);
        }
        prop_assert!(w.es_b >= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn converged_solutions_are_fixed_points(cfg in arb_config()) {
        let opts = Options::default();
        let sol = solve(&cfg, &opts).unwrap();
        let (dp, dq, des) = residuals(&cfg, sol.p, sol.q, sol.es).unwrap();
        for r in [dp, dq, des] {
            prop_assert!(r.abs() <= opts.tol);
        }
        prop_assert!((0.0..=1.0).contains(&sol.p) && (0.0..=1.0).contains(&sol.q));
        prop_assert_eq!(sol.th, sol.th_c + sol.th_pg);
    }
}

#[test]
fn lone_station_never_collides() {
    for l in [1, 3, 10] {
        for g in [0, 1, 4] {
            let cfg = NetworkConfig {
                n_ss: 1,
                n_slots: l,
                max_piggy: g,
                lambda: 0.6,
                ..Default::default()
            }
            .validate()
            .unwrap();
            let sol = solve(&cfg, &Options::default()).unwrap();
            assert_eq!(sol.p, 0.0);
            assert_eq!(sol.q, 1.0);
        }
    }
}

#[test]
fn lone_station_exact_fixed_point_has_zero_residual() {
    let cfg = NetworkConfig {
        n_ss: 1,
        ..Default::default()
    }
    .validate()
    .unwrap();
    let backoff = Backoff::new(&cfg);
    let (dp, dq, des) = residuals(&cfg, 0.0, 1.0, 1.0 + backoff.k_bar[0]).unwrap();
    assert_eq!((dp, dq, des), (0.0, 0.0, 0.0));
}

#[test]
fn perturbed_root_has_nonzero_residual() {
    let cfg = NetworkConfig {
        max_piggy: 1,
        n_slots: 12,
        ..Default::default()
    }
    .validate()
    .unwrap();
    let sol = solve(&cfg, &Options::default()).unwrap();
    let (dp, _, _) = residuals(&cfg, sol.p + 0.01, sol.q, sol.es).unwrap();
    assert!(dp.abs() > 0.0);
}

#[test]
fn single_precision_tracks_double() {
    for (g, l, lambda) in [(0, 7, 1.0), (1, 12, 0.5), (3, 21, 0.2), (5, 35, 1.0)] {
        let cfg = NetworkConfig {
            max_piggy: g,
            n_slots: l,
            lambda,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let wide = solve::<f64>(&cfg, &Options::default()).unwrap();
        let narrow = solve::<f32>(&cfg, &SolverOptions::default()).unwrap();
        let rel = |a: f64, b: f32| (a - f64::from(b)).abs() / a.abs().max(1e-3);
        assert!(
            rel(wide.th, narrow.th) < 1e-3,
            "th {} vs {}",
            wide.th,
            narrow.th
        );
        assert!(rel(wide.es, narrow.es) < 1e-3);
        assert!(rel(wide.p, narrow.p) < 1e-3);
    }
}

#[test]
fn grant_ratio_falls_with_piggyback_depth_at_seven_slots() {
    let mut last = f64::INFINITY;
    for g in [0, 1, 3, 5] {
        let cfg = NetworkConfig {
            max_piggy: g,
            n_slots: 7,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let sol = solve(&cfg, &Options::default()).unwrap();
        assert!(sol.q_m <= last + 1e-12, "G={g}: {} after {last}", sol.q_m);
        last = sol.q_m;
    }
}
