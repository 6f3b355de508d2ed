//! Mean number of whole frames spent in backoff before a bandwidth request.
//!
//! In round `i` the counter is drawn uniformly from `[0, W_i - 1]` with
//! `W_i = 2^min(i,m) * W0`. A counter value `c` puts the request in the
//! `(c+1)`-th consecutive TO, i.e. `floor(c / Ns)` frames after the round
//! starts. The frame count spans `[0, WC_i - 1]` with `WC_i = ceil(W_i / Ns)`;
//! every value below `WF_i = floor(W_i / Ns)` is hit by exactly `Ns` counters.

use crate::config::ValidConfig;
use crate::scalar::Scalar;

/// Per-round backoff statistics for rounds `0..=max_retx`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffProfile<T> {
    /// Mean waiting frames `K_i` before the request frame.
    pub k_bar: Vec<T>,
    /// `ceil(W_i / Ns)`.
    pub wc: Vec<u64>,
    /// `floor(W_i / Ns)`.
    pub wf: Vec<u64>,
}

/// Mean backoff frames of a window of `window` counters over `n_tos` TOs per frame.
pub fn mean_wait_frames<T: Scalar>(window: u64, n_tos: u64) -> T {
    let wf = window / n_tos;
    let wc = window.div_ceil(n_tos);
    let w = T::from_count(window);
    let ns = T::from_count(n_tos);
    let two = T::from_count(2);
    let full = T::from_count(wf) * T::from_count(wf + 1) * ns.clone() / (two * w.clone());
    let tail = T::from_count(wc) * (T::one() - T::from_count(wf) * ns / w);
    full + tail - T::one()
}

impl<T: Scalar> BackoffProfile<T> {
    pub fn new(config: &ValidConfig) -> Self {
        let rounds = config.max_retx as usize + 1;
        let ns = u64::from(config.n_tos);
        let mut k_bar = Vec::with_capacity(rounds);
        let mut wc = Vec::with_capacity(rounds);
        let mut wf = Vec::with_capacity(rounds);
        for i in 0..rounds as u32 {
            let w = config.window(i);
            k_bar.push(mean_wait_frames(w, ns));
            wc.push(w.div_ceil(ns));
            wf.push(w / ns);
        }
        Self { k_bar, wc, wf }
    }

    pub fn rounds(&self) -> usize {
        self.k_bar.len()
    }

    /// `sum_{k <= i} K_k`.
    pub fn cumulative(&self, i: usize) -> T {
        self.k_bar[..=i]
            .iter()
            .cloned()
            .fold(T::zero(), |acc, k| acc + k)
    }
}

pub fn backoff_profile<T: Scalar>(config: &ValidConfig) -> BackoffProfile<T> {
    BackoffProfile::new(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;
    use num_rational::BigRational;

    fn enumerate(window: u64, n_tos: u64) -> BigRational {
        let total: u64 = (0..window).map(|c| c / n_tos).sum();
        BigRational::new(total.into(), window.into())
    }

    #[test]
    fn window_fitting_one_frame_has_no_wait() {
        assert_eq!(mean_wait_frames::<f64>(32, 32), 0.0);
    }

    #[test]
    fn partial_second_frame() {
        let k: f64 = mean_wait_frames(32, 20);
        assert!((k - 0.375).abs() < 1e-15);
        assert_eq!(mean_wait_frames::<BigRational>(32, 20), enumerate(32, 20));
    }

    #[test]
    fn capped_round_matches_enumeration() {
        let cfg = NetworkConfig {
            n_ss: 10,
            max_retx: 8,
            ..NetworkConfig::default()
        }
        .validate()
        .unwrap();
        let prof = BackoffProfile::<BigRational>::new(&cfg);
        for i in 0..prof.rounds() {
            assert_eq!(
                prof.k_bar[i],
                enumerate(cfg.window(i as u32), 20),
                "round {i}"
            );
        }
        assert_eq!(prof.wc[5], 52);
        assert_eq!(prof.wf[5], 51);
    }

    #[test]
    fn profile_invariants() {
        let cfg = NetworkConfig {
            max_retx: 8,
            ..NetworkConfig::default()
        }
        .validate()
        .unwrap();
        let prof = BackoffProfile::<f64>::new(&cfg);
        for i in 0..prof.rounds() {
            assert!(prof.wc[i] - 1 <= prof.wf[i] && prof.wf[i] <= prof.wc[i]);
            assert!(prof.k_bar[i] >= 0.0 && prof.k_bar[i] <= (prof.wc[i] - 1) as f64);
            if i > 0 {
                assert!(prof.k_bar[i] >= prof.k_bar[i - 1]);
            }
        }
    }
}
