use pgpoll_core::NetworkConfig;
use pgpoll_sim::{run_replication, Network, Phase};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = NetworkConfig> {
    (
        1u32..=30,
        1u32..=12,
        1u32..=15,
        0u32..=3,
        0u32..=4,
        1u32..=4,
        0u32..=4,
        0u32..=4,
        0.02f64..1.5,
    )
        .prop_map(
            |(n, n_tos, l, w_mul, m_exp, m, d, g, lambda)| NetworkConfig {
                n_ss: n,
                n_tos,
                n_slots: l,
                w0: n_tos * (w_mul + 1) + w_mul,
                m_exp,
                t16_frames: m,
                max_retx: d,
                max_piggy: g,
                lambda,
                ..Default::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn protocol_rules_hold(cfg in arb_config(), seed in any::<u64>()) {
        let cfg = cfg.validate().unwrap();
        let rep = run_replication(&cfg, seed, 50, 400);
        prop_assert_eq!(rep.violations.total(), 0, "{:?}", rep.violations);
        let t = rep.totals;
        prop_assert_eq!(t.arrived, t.served + t.dropped + t.queued);
        prop_assert!(rep.counters.tx_contention + rep.counters.tx_piggyback <= u64::from(cfg.n_slots) * 400);
        if cfg.max_piggy == 0 {
            prop_assert_eq!(rep.counters.tx_piggyback, 0);
        }
        for p in [rep.stats.p, rep.stats.q, rep.stats.p_d].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert_eq!(rep.stats.th, rep.stats.th_c + rep.stats.th_pg);
        let again = run_replication(&cfg, seed, 50, 400);
        prop_assert_eq!(again.counters, rep.counters);
    }

    #[test]
    fn observed_state_stays_in_bounds(cfg in arb_config(), seed in any::<u64>()) {
        let cfg = cfg.validate().unwrap();
        let mut net = Network::new(&cfg, seed, false);
        for _ in 0..300 {
            net.step();
            let frame_piggy = net.states().filter(|s| s.phase == Phase::Piggyback).count();
            prop_assert!(frame_piggy <= cfg.n_slots as usize);
            for s in net.states() {
                prop_assert!(s.round <= cfg.max_retx);
                prop_assert!(s.piggy_count <= cfg.max_piggy);
                prop_assert!(s.t16_remaining <= cfg.t16_frames);
                if s.phase == Phase::Piggyback {
                    prop_assert!(!s.queue.is_empty());
                }
            }
            prop_assert!(net.pool().len() <= cfg.n_ss as usize);
        }
    }
}
