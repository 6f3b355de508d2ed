use serde::{Deserialize, Serialize};

/// Converged operating point of the model together with every derived metric.
///
/// Delays are in frames, throughputs in packets per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSolution<T> {
    /// Collision probability of a contending request.
    pub p: T,
    /// Per-frame grant probability of a pending contending request.
    pub q: T,
    /// Mean service delay.
    pub es: T,
    pub pi0: T,
    /// Utilisation `lambda * E{S}` clamped to `[0, 1]`.
    pub rho: T,
    /// Unclamped `lambda * E{S}`.
    pub rho_raw: T,
    pub p_f: T,
    pub tau: T,
    pub omega: T,
    /// Mean number of piggybacked packets following a contention-served one.
    pub z: T,
    pub phi: T,
    pub b00: T,
    /// Probability a station sends a contending request in a frame.
    pub p_b: T,
    /// Probability a TO carries a successful request.
    pub p_s: T,
    /// Drop probability of a created request.
    pub p_d: T,
    /// Probability a successful request is granted within its T16 window.
    pub q_m: T,
    pub e_r: T,
    pub e_p: T,
    pub es_c: T,
    pub es2: T,
    pub es_q: T,
    /// Mean waiting delay, `None` when the queue is unstable.
    pub ew: Option<T>,
    pub th_c: T,
    pub th_pg: T,
    pub th: T,
    pub iterations: usize,
}

impl<T: Copy> ModelSolution<T> {
    /// The fixed-point unknowns `(p, q, E{S})`.
    pub fn triple(&self) -> (T, T, T) {
        (self.p, self.q, self.es)
    }
}

impl<T: Copy + PartialOrd + From<u8>> ModelSolution<T> {
    pub fn saturated(&self) -> bool {
        self.rho_raw >= T::from(1u8)
    }
}
