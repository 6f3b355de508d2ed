//! Saturation capacity estimates: how many data slots a piggyback depth can
//! use, and the throughput ceiling that follows.

use crate::config::{NetworkConfig, ValidConfig};
use crate::scalar::Real;
use crate::solver::{solve, SolveError, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity<T> {
    /// Largest request success probability over all slot counts at saturation.
    pub p_s_max: T,
    /// Slot count at which `p_s_max` is reached.
    pub l_at_max: u32,
    /// Smallest slot count that serves every successful request.
    pub l_prime: u32,
    /// Throughput ceiling in packets per frame for the configured `L`.
    pub th_max: T,
}

fn saturated(config: &ValidConfig, n_slots: u32) -> NetworkConfig {
    NetworkConfig {
        n_slots,
        lambda: 1.0,
        ..**config
    }
}

/// Scans `L = 1..=max(N, L)` at full load and derives the slot requirement
/// `ceil((G+1) * P_S^max * Ns)` and ceiling `min(L, (G+1) * P_S^max * Ns)`.
pub fn capacity_heuristics<T: Real>(
    config: &ValidConfig,
    options: &SolverOptions<T>,
) -> Result<Capacity<T>, SolveError> {
    let upper = config.n_ss.max(config.n_slots);
    let mut p_s_max = T::zero();
    let mut l_at_max = 1;
    for l in 1..=upper {
        let cfg = saturated(config, l)
            .validate()
            .map_err(|e| SolveError::Options(e.to_string()))?;
        let sol = solve(&cfg, options)?;
        if sol.p_s > p_s_max {
            p_s_max = sol.p_s;
            l_at_max = l;
        }
    }
    let demand = T::from_count(u64::from(config.max_piggy) + 1)
        * p_s_max
        * T::from_count(u64::from(config.n_tos));
    let l_prime = demand.ceil().to_f64_lossy() as u32;
    let th_max = demand.min(T::from_count(u64::from(config.n_slots)));
    Ok(Capacity {
        p_s_max,
        l_at_max,
        l_prime,
        th_max,
    })
}
