//! Grant-failure probability by brute force over every slot and station
//! outcome.

use pgpoll_core::analytic::{allocation_probability, expected_pending, expected_piggyback};
use pgpoll_core::{NetworkConfig, ValidConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bernoulli_pattern_prob(mask: u64, len: usize, prob: f64) -> (usize, f64) {
    let ones = (mask.count_ones()) as usize;
    let w = prob.powi(ones as i32) * (1.0 - prob).powi((len - ones) as i32);
    (ones, w)
}

/// Walks all `2^L` slot patterns and, for each, all `2^(N-i-1)` station
/// patterns, accumulating the chance the tagged request goes unserved.
fn brute_force_r(cfg: &ValidConfig, p_s: f64, q: f64, pi0: f64) -> f64 {
    let n = cfg.n_ss as usize;
    let l = cfg.n_slots as usize;
    let e_r = expected_pending(cfg, p_s, q);
    let e_p = expected_piggyback(cfg, e_r, q, pi0);
    let p_g = (e_p / l as f64).clamp(0.0, 1.0);
    let mut r = 0.0;
    for slots in 0..(1u64 << l) {
        let (piggy, w_slots) = bernoulli_pattern_prob(slots, l, p_g);
        if piggy >= n {
            continue;
        }
        let others = n - piggy - 1;
        let p_a = (e_r / (n - piggy) as f64).clamp(0.0, 1.0);
        let free = l - piggy;
        for stations in 0..(1u64 << others) {
            let (pending, w_st) = bernoulli_pattern_prob(stations, others, p_a);
            let competing = pending + 1;
            if competing > free {
                r += w_slots * w_st * (competing - free) as f64 / competing as f64;
            }
        }
    }
    r
}

/// Five network shapes with `N <= 12`, `L <= 6`, 20 random points each;
/// returns the number of points checked.
pub fn check_grid() -> usize {
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let shapes = [
        (12u32, 6u32, 2u32),
        (9, 4, 1),
        (7, 6, 3),
        (12, 2, 0),
        (5, 3, 5),
    ];
    for &(n, l, g) in &shapes {
        let cfg = NetworkConfig {
            n_ss: n,
            n_slots: l,
            n_tos: 4,
            w0: 8,
            t16_frames: 3,
            max_piggy: g,
            ..Default::default()
        }
        .validate()
        .unwrap();
        for _ in 0..20 {
            let p_s = rng.random_range(0.01..0.4);
            let q = rng.random_range(0.05..1.0);
            let pi0 = rng.random_range(0.0..1.0);
            let got = allocation_probability(&cfg, p_s, q, pi0);
            let want = brute_force_r(&cfg, p_s, q, pi0);
            assert!(
                (got.r - want).abs() < 1e-12,
                "N={n} L={l} G={g} P_S={p_s} q={q} pi0={pi0}: {} vs {want}",
                got.r
            );
            assert!((got.q_new - (1.0 - want)).abs() < 1e-12);
            checked += 1;
        }
    }
    checked
}
