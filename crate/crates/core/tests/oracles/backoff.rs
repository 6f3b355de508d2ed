use num_bigint::BigInt;
use num_rational::BigRational;
use pgpoll_core::{backoff_profile, NetworkConfig};

/// Mean of the number of whole frames waited, by listing every counter value
/// and the frame in which its TO falls.
fn enumerated_mean(window: u64, n_tos: u64) -> BigRational {
    let mut sum = BigRational::from_integer(BigInt::from(0));
    for counter in 0..window {
        let to_index = counter + 1;
        let frame = to_index.div_ceil(n_tos);
        sum += BigRational::from_integer(BigInt::from(frame - 1));
    }
    sum / BigRational::from_integer(BigInt::from(window))
}

/// Compares every round `0..=8` over the window and TO grid; returns the case count.
pub fn check_grid() -> usize {
    let mut cases = 0;
    for w0 in [16u32, 20, 32] {
        for n_tos in [10u32, 20, 32] {
            if w0 < n_tos {
                continue;
            }
            let cfg = NetworkConfig {
                w0,
                n_tos,
                m_exp: 5,
                max_retx: 8,
                ..Default::default()
            }
            .validate()
            .unwrap();
            let prof = backoff_profile::<BigRational>(&cfg);
            assert_eq!(prof.rounds(), 9);
            for i in 0..=8u32 {
                let want = enumerated_mean(cfg.window(i), u64::from(n_tos));
                assert_eq!(
                    prof.k_bar[i as usize], want,
                    "w0={w0} n_tos={n_tos} round={i}"
                );
                cases += 1;
            }
        }
    }
    cases
}
