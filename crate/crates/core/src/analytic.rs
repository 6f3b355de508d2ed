//! Closed-form pieces of the model, evaluated for a candidate
//! `(p, q, E{S})` triple. Nothing here iterates; see [`crate::solver`].
//!
//! Probabilities that can leave `[0, 1]` mid-iteration (`Pi0`, `P_A`, `P_G`)
//! are clamped so the fixed-point map stays well defined.

use thiserror::Error;

use crate::backoff::BackoffProfile;
use crate::config::ValidConfig;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("grant probability q must be > 0 (got {0})")]
    ZeroGrant(f64),
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

fn check_unit<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

fn count<T: Real>(n: u32) -> T {
    T::from_count(u64::from(n))
}

/// `1 - (1 - x)^n` without cancellation for small `x`.
fn one_minus_pow_complement<T: Real>(x: T, n: u32) -> T {
    if n == 0 {
        return T::zero();
    }
    -(count::<T>(n) * (-x).ln_1p()).exp_m1()
}

/// Raw utilisation `lambda * E{S}`; values >= 1 flag saturation.
pub fn utilization<T: Real>(config: &ValidConfig, es: T) -> T {
    T::lit(config.lambda) * es
}

/// Probability that a departing packet leaves the queue empty, for an M/G/1
/// queue with deterministic one-frame vacations.
pub fn pi0<T: Real>(config: &ValidConfig, es: T) -> T {
    let x = T::lit(config.lambda * config.t_frame);
    let rho = utilization(config, es);
    // (1 - e^-x) / x
    let vacation = -(-x).exp_m1() / x;
    ((T::one() - rho) * vacation).clamp_unit()
}

/// Probability that an idle station sees no arrival during one frame.
pub fn idle_stay<T: Real>(config: &ValidConfig) -> T {
    (-T::lit(config.lambda * config.t_frame)).exp()
}

/// Per-round failure probability `p_f = p + (1-p)(1-q)^M`.
pub fn round_failure<T: Real>(config: &ValidConfig, p: T, q: T) -> T {
    (p + (T::one() - p) * (T::one() - q).powu(config.t16_frames)).clamp_unit()
}

/// `P_D = p_f^(D+1)`. Exact for rational scalars.
pub fn drop_probability<T: Scalar>(p_f: T, config: &ValidConfig) -> T {
    p_f.powu(config.max_retx + 1)
}

/// Normalisation constants of the station Markov chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStationary<T> {
    pub p_f: T,
    /// `sum_{i=0..D} p_f^i`.
    pub tau: T,
    /// `sum_{i=1..D} p_f^i K_i`.
    pub omega: T,
    /// Piggyback mass relative to `b00`, equal to the mean piggyback run length.
    pub z: T,
    /// Idle mass relative to `b00`.
    pub phi: T,
    /// Stationary probability of the round-0 request state.
    pub b00: T,
}

pub fn chain_stationary<T: Real>(
    config: &ValidConfig,
    backoff: &BackoffProfile<T>,
    p: T,
    q: T,
    pi0: T,
) -> Result<ChainStationary<T>, ModelError> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    check_unit("pi0", pi0)?;
    if q <= T::zero() {
        return Err(ModelError::ZeroGrant(q.to_f64_lossy()));
    }
    let one = T::one();
    let d = config.max_retx as usize;
    let p_f = round_failure(config, p, q);

    let mut tau = T::zero();
    let mut omega = T::zero();
    let mut pf_i = one;
    for i in 0..=d {
        tau = tau + pf_i;
        if i >= 1 {
            omega = omega + pf_i * backoff.k_bar[i];
        }
        pf_i = pf_i * p_f;
    }
    let served = one - drop_probability(p_f, config); // (1 - p_f) * tau

    let g = config.max_piggy;
    let continue_all = one_minus_pow_complement(pi0, g); // 1 - (1 - pi0)^G
    let z = if g == 0 {
        T::zero()
    } else if pi0 == T::zero() {
        count::<T>(g) * served
    } else {
        (one - pi0) * served * continue_all / pi0
    };

    let leave_idle = -(-T::lit(config.lambda * config.t_frame)).exp_m1(); // 1 - p_a
    let phi = (pi0 + continue_all * (one - pi0) * served) / leave_idle;

    let m = count::<T>(config.t16_frames);
    let denom = tau * (one + p * m + (one - p_f) / q) + omega + z + phi;
    Ok(ChainStationary {
        p_f,
        tau,
        omega,
        z,
        phi,
        b00: one / denom,
    })
}

/// Individual stationary state probabilities of the station chain, as implied
/// by the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMasses<T> {
    /// Total backoff mass per round; round 0 carries none.
    pub backoff: Vec<T>,
    /// Request states `(i,0)^R`.
    pub request: Vec<T>,
    /// `collision[i][j-1]` is `(i,j)^C`.
    pub collision: Vec<Vec<T>>,
    pub transmit: Vec<Vec<T>>,
    pub fail: Vec<Vec<T>>,
    /// `piggyback[k-1]` is `PG_k`.
    pub piggyback: Vec<T>,
    pub idle: T,
}

impl<T: Real> StateMasses<T> {
    pub fn total(&self) -> T {
        let flat = |v: &Vec<Vec<T>>| v.iter().flatten().fold(T::zero(), |a, &b| a + b);
        let sum = |v: &Vec<T>| v.iter().fold(T::zero(), |a, &b| a + b);
        sum(&self.backoff)
            + sum(&self.request)
            + flat(&self.collision)
            + flat(&self.transmit)
            + flat(&self.fail)
            + sum(&self.piggyback)
            + self.idle
    }
}

pub fn state_masses<T: Real>(
    config: &ValidConfig,
    backoff: &BackoffProfile<T>,
    p: T,
    q: T,
    pi0: T,
    chain: &ChainStationary<T>,
) -> StateMasses<T> {
    let one = T::one();
    let d = config.max_retx as usize;
    let m = config.t16_frames as usize;
    let b00 = chain.b00;
    let request: Vec<T> = (0..=d).map(|i| chain.p_f.powu(i as u32) * b00).collect();
    let backoff_mass = (0..=d)
        .map(|i| {
            if i == 0 {
                T::zero()
            } else {
                backoff.k_bar[i] * request[i]
            }
        })
        .collect();
    let collision = request.iter().map(|&r| vec![p * r; m]).collect();
    let transmit = request
        .iter()
        .map(|&r| {
            (1..=m)
                .map(|j| (one - p) * q * (one - q).powu(j as u32 - 1) * r)
                .collect()
        })
        .collect();
    let fail = request
        .iter()
        .map(|&r| {
            (1..=m)
                .map(|j| (one - p) * (one - q).powu(j as u32) * r)
                .collect()
        })
        .collect();
    let served = one - drop_probability(chain.p_f, config);
    let piggyback = (1..=config.max_piggy)
        .map(|k| (one - pi0).powu(k) * served * b00)
        .collect();
    StateMasses {
        backoff: backoff_mass,
        request,
        collision,
        transmit,
        fail,
        piggyback,
        idle: chain.phi * b00,
    }
}

/// `P_B = tau * b00`, the probability a station sends a request in a frame.
pub fn request_probability<T: Real>(chain: &ChainStationary<T>) -> T {
    (chain.tau * chain.b00).clamp_unit()
}

/// Collision probability seen by a request: none of the other `N - 1`
/// stations picks the same TO.
pub fn collision_probability<T: Real>(config: &ValidConfig, b00: T, tau: T) -> T {
    let x = (tau * b00 / count::<T>(config.n_tos)).clamp_unit();
    one_minus_pow_complement(x, config.n_ss - 1)
}

/// Probability that a TO carries exactly one request.
pub fn success_probability<T: Real>(config: &ValidConfig, b00: T, tau: T) -> T {
    let x = (tau * b00 / count::<T>(config.n_tos)).clamp_unit();
    let n = config.n_ss;
    (count::<T>(n) * x * (T::one() - x).powu(n - 1)).clamp_unit()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceDelay<T> {
    /// Mean service delay of packets served through contention, drops included.
    pub es_c: T,
    /// Overall mean service delay including piggybacked packets.
    pub es: T,
    /// Approximate second moment of the overall service delay.
    pub es2: T,
    /// Time spent on a packet that ends up dropped.
    pub es_d: T,
}

pub fn service_delay<T: Real>(
    config: &ValidConfig,
    p: T,
    q: T,
    backoff: &BackoffProfile<T>,
    z: T,
) -> ServiceDelay<T> {
    let one = T::one();
    let d = config.max_retx as usize;
    let m = config.t16_frames;
    let mf = count::<T>(m);
    let p_f = round_failure(config, p, q);
    let p_d = drop_probability(p_f, config);
    let es_d = count::<T>(config.max_retx + 1) * mf + backoff.cumulative(d);

    let mut es_c = p_d * es_d;
    let mut es_c2 = p_d * es_d * es_d;
    let mut pf_i = one;
    let mut k_cum = T::zero();
    for i in 0..=d {
        k_cum = k_cum + backoff.k_bar[i];
        let mut miss = one; // (1-q)^(j-1)
        for j in 1..=m {
            let bb = q * (one - p) * miss * pf_i;
            let s = count::<T>(j) + T::from_count(i as u64) * mf + k_cum;
            es_c = es_c + bb * s;
            es_c2 = es_c2 + bb * s * s;
            miss = miss * (one - q);
        }
        pf_i = pf_i * p_f;
    }
    ServiceDelay {
        es_c,
        es: (es_c + z) / (one + z),
        es2: (es_c2 + z) / (one + z),
        es_d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation<T> {
    /// Grant probability implied by the allocation model, `1 - r`.
    pub q_new: T,
    /// Probability an examined pending request is not granted in a frame.
    pub r: T,
    /// Mean number of pending contention requests per frame.
    pub e_r: T,
    /// Mean number of slots taken by piggybacked requests per frame.
    pub e_p: T,
    /// `E{P} / L`, clamped.
    pub p_g: T,
}

/// `E{R} = Ns * P_S * sum_{i<M} (1-q)^i`.
pub fn expected_pending<T: Real>(config: &ValidConfig, p_s: T, q: T) -> T {
    let mut acc = T::zero();
    let mut miss = T::one();
    for _ in 0..config.t16_frames {
        acc = acc + miss;
        miss = miss * (T::one() - q);
    }
    count::<T>(config.n_tos) * p_s * acc
}

/// `E{P} = E{R} * q * sum_{i<G} (1-Pi0)^(i+1)`.
pub fn expected_piggyback<T: Real>(config: &ValidConfig, e_r: T, q: T, pi0: T) -> T {
    let mut acc = T::zero();
    let mut keep = T::one();
    for _ in 0..config.max_piggy {
        keep = keep * (T::one() - pi0);
        acc = acc + keep;
    }
    e_r * q * acc
}

/// `ln n!` for `n = 0..=max`.
fn ln_factorials<T: Real>(max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = T::zero();
    out.push(acc);
    for k in 1..=max {
        acc = acc + T::from_count(k as u64).ln();
        out.push(acc);
    }
    out
}

fn binomial_pmf<T: Real>(lnf: &[T], n: usize, k: usize, prob: T) -> T {
    if k > n {
        return T::zero();
    }
    if prob <= T::zero() {
        return if k == 0 { T::one() } else { T::zero() };
    }
    if prob >= T::one() {
        return if k == n { T::one() } else { T::zero() };
    }
    let ln_c = lnf[n] - lnf[k] - lnf[n - k];
    let kk = T::from_count(k as u64);
    let rest = T::from_count((n - k) as u64);
    (ln_c + kk * prob.ln() + rest * (-prob).ln_1p()).exp()
}

/// Grant probability from the random-order allocation of `L` slots among
/// piggybacked requests (served first) and pending contention requests.
pub fn allocation_probability<T: Real>(
    config: &ValidConfig,
    p_s: T,
    q: T,
    pi0: T,
) -> Allocation<T> {
    let n = config.n_ss as usize;
    let l = config.n_slots as usize;
    let e_r = expected_pending(config, p_s, q);
    let e_p = expected_piggyback(config, e_r, q, pi0);
    let p_g = (e_p / count::<T>(config.n_slots)).clamp_unit();
    let lnf = ln_factorials::<T>(n.max(l));

    let mut r = T::zero();
    // i piggybacked slots; the other N-i-1 stations may hold a pending request
    for i in 0..=l.min(n - 1) {
        let others = n - i - 1;
        let free = l - i;
        if free > others {
            continue;
        }
        let w_i = binomial_pmf(&lnf, l, i, p_g);
        if w_i == T::zero() {
            continue;
        }
        let p_a = (e_r / T::from_count((n - i) as u64)).clamp_unit();
        let mut inner = T::zero();
        for j in free..=others {
            let unserved = T::from_count((j + 1 - free) as u64) / T::from_count((j + 1) as u64);
            inner = inner + unserved * binomial_pmf(&lnf, others, j, p_a);
        }
        r = r + w_i * inner;
    }
    let r = r.clamp_unit();
    Allocation {
        q_new: T::one() - r,
        r,
        e_r,
        e_p,
        p_g,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput<T> {
    /// Probability a successful request is granted within its T16 window.
    pub q_m: T,
    pub th_c: T,
    pub th_pg: T,
    pub th: T,
}

pub fn throughput<T: Real>(
    config: &ValidConfig,
    p_s: T,
    q: T,
    z: T,
    p_d: T,
    b00: T,
) -> Throughput<T> {
    let q_m = one_minus_pow_complement(q, config.t16_frames);
    let th_c = q_m * p_s * count::<T>(config.n_tos);
    let th_pg = z * count::<T>(config.n_ss) * (T::one() - p_d) * b00;
    Throughput {
        q_m,
        th_c,
        th_pg,
        th: th_c + th_pg,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingDelay<T> {
    /// Service delay of a packet arriving while a packet is in service.
    pub es_b: T,
    /// Service delay of a packet arriving while the station is on vacation
    /// with a non-empty queue.
    pub es_i: T,
    /// Mean service delay seen by queued packets.
    pub es_q: T,
    /// Mean waiting delay; `None` when `lambda * E{S_Q} >= 1`.
    pub ew: Option<T>,
}

/// Waiting delay from the vacation-adjusted Pollaczek-Khinchine form with the
/// queued-packet service delay in place of the overall one.
pub fn waiting_delay<T: Real>(
    config: &ValidConfig,
    es: T,
    es_c: T,
    es2: T,
    pi0: T,
) -> WaitingDelay<T> {
    let one = T::one();
    let lambda = T::lit(config.lambda);
    let t_fr = T::lit(config.t_frame);
    let rho = utilization(config, es).clamp_unit();
    let es_i = if config.max_piggy > 0 { one } else { es_c };
    let idle_busy = (one - pi0 - rho).max(T::zero());
    let es_b = if rho > T::zero() {
        ((es - pi0 * es_c - idle_busy * es_i) / rho).max(one)
    } else {
        es
    };
    let queued = one - pi0;
    let es_q = if queued > T::epsilon() {
        rho / queued * es_b + idle_busy / queued * es_i
    } else {
        es
    };
    let load = lambda * es_q;
    let ew = if load < one {
        Some(lambda * es2 / (T::lit(2.0) * (one - load)) + t_fr / T::lit(2.0))
    } else {
        None
    };
    WaitingDelay {
        es_b,
        es_i,
        es_q,
        ew,
    }
}
