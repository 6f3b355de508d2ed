//! Damped fixed-point iteration over `(p, q, E{S})`.
//!
//! One sweep evaluates `Pi0` from the current `E{S}`, the chain constants from
//! `(p, q, Pi0)`, and then the three update equations: collision probability,
//! grant probability from the slot allocation, and mean service delay. The new
//! triple is blended into the old one with the damping factor, which is
//! halved whenever the residual stalls.

use std::cmp::Ordering;

use thiserror::Error;

use crate::analytic::{self, ModelError};
use crate::backoff::BackoffProfile;
use crate::config::ValidConfig;
use crate::scalar::Real;
use crate::solution::ModelSolution;

pub const Q_FLOOR: f64 = 1e-9;
/// Iterations without a 5% residual improvement before the damping is halved.
pub const STALL_WINDOW: usize = 40;
pub const P_CEIL_GAP: f64 = 1e-12;

/// Standard starting points used to cross-check for multiple roots.
pub const STANDARD_INITS: [(f64, f64, f64); 2] = [(0.1, 0.9, 2.0), (0.5, 0.5, 10.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Blend factor in `(0, 1]`.
    pub damping: T,
    /// Convergence threshold on the max-abs residual of `(p, q, E{S})`.
    pub tol: T,
    pub max_iters: usize,
    pub init_p: Option<T>,
    pub init_q: Option<T>,
    pub init_es: Option<T>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        // f32 cannot resolve 1e-9
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        Self {
            damping: T::lit(0.5),
            tol,
            max_iters: 10_000,
            init_p: None,
            init_q: None,
            init_es: None,
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn with_init(mut self, p: T, q: T, es: T) -> Self {
        self.init_p = Some(p);
        self.init_q = Some(q);
        self.init_es = Some(es);
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error(
        "no convergence after {iters} iterations: last (p, q, E{{S}}) = ({p:.6e}, {q:.6e}, {es:.6e}), residuals = ({dp:.3e}, {dq:.3e}, {des:.3e})"
    )]
    NoConvergence {
        iters: usize,
        p: f64,
        q: f64,
        es: f64,
        dp: f64,
        dq: f64,
        des: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Admissible box for the iterate.
#[derive(Debug, Clone, Copy)]
struct Bounds<T> {
    p_max: T,
    q_min: T,
    es_max: T,
}

impl<T: Real> Bounds<T> {
    fn new(config: &ValidConfig, backoff: &BackoffProfile<T>) -> Self {
        let d = config.max_retx as usize;
        let es_d = T::from_count(u64::from(config.max_retx) + 1)
            * T::from_count(u64::from(config.t16_frames))
            + backoff.cumulative(d);
        Self {
            p_max: T::one() - T::lit(P_CEIL_GAP).max(T::epsilon()),
            q_min: T::lit(Q_FLOOR).max(T::epsilon()),
            es_max: es_d + T::one(),
        }
    }

    fn clamp(&self, (p, q, es): (T, T, T)) -> (T, T, T) {
        (
            p.max(T::zero()).min(self.p_max),
            q.max(self.q_min).min(T::one()),
            es.max(T::one()).min(self.es_max),
        )
    }
}

/// Everything computed in one pass of the fixed-point map.
struct Pass<T> {
    next: (T, T, T),
    solution: ModelSolution<T>,
}

fn evaluate<T: Real>(
    config: &ValidConfig,
    backoff: &BackoffProfile<T>,
    bounds: &Bounds<T>,
    (p, q, es): (T, T, T),
) -> Result<Pass<T>, ModelError> {
    let pi0 = analytic::pi0(config, es);
    let chain = analytic::chain_stationary(config, backoff, p, q, pi0)?;
    let p_b = analytic::request_probability(&chain);
    let p_new = analytic::collision_probability(config, chain.b00, chain.tau);
    let p_s = analytic::success_probability(config, chain.b00, chain.tau);
    let alloc = analytic::allocation_probability(config, p_s, q, pi0);
    let delay = analytic::service_delay(config, p, q, backoff, chain.z);
    let p_d = analytic::drop_probability(chain.p_f, config);
    let thr = analytic::throughput(config, p_s, q, chain.z, p_d, chain.b00);
    let wait = analytic::waiting_delay(config, delay.es, delay.es_c, delay.es2, pi0);
    let rho_raw = analytic::utilization(config, es);
    let next = bounds.clamp((p_new, alloc.q_new, delay.es));
    let solution = ModelSolution {
        p,
        q,
        es,
        pi0,
        rho: rho_raw.clamp_unit(),
        rho_raw,
        p_f: chain.p_f,
        tau: chain.tau,
        omega: chain.omega,
        z: chain.z,
        phi: chain.phi,
        b00: chain.b00,
        p_b,
        p_s,
        p_d,
        q_m: thr.q_m,
        e_r: alloc.e_r,
        e_p: alloc.e_p,
        es_c: delay.es_c,
        es2: delay.es2,
        es_q: wait.es_q,
        ew: wait.ew,
        th_c: thr.th_c,
        th_pg: thr.th_pg,
        th: thr.th,
        iterations: 0,
    };
    Ok(Pass { next, solution })
}

/// Signed differences `input - map(input)` for one pass of the fixed-point map.
pub fn residuals<T: Real>(
    config: &ValidConfig,
    p: T,
    q: T,
    es: T,
) -> Result<(T, T, T), ModelError> {
    let backoff = BackoffProfile::new(config);
    let bounds = Bounds::new(config, &backoff);
    let pass = evaluate(config, &backoff, &bounds, (p, q, es))?;
    let (pn, qn, esn) = pass.next;
    Ok((p - pn, q - qn, es - esn))
}

fn max_abs<T: Real>((a, b, c): (T, T, T)) -> T {
    a.abs().max(b.abs()).max(c.abs())
}

pub fn solve<T: Real>(
    config: &ValidConfig,
    options: &SolverOptions<T>,
) -> Result<ModelSolution<T>, SolveError> {
    if !(options.damping > T::zero() && options.damping <= T::one()) {
        return Err(SolveError::Options("damping must lie in (0, 1]".into()));
    }
    if options.tol.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(SolveError::Options("tol must be > 0".into()));
    }
    if options.max_iters == 0 {
        return Err(SolveError::Options("max_iters must be >= 1".into()));
    }
    let backoff = BackoffProfile::<T>::new(config);
    let bounds = Bounds::new(config, &backoff);
    let mut x = bounds.clamp((
        options.init_p.unwrap_or(T::lit(0.1)),
        options.init_q.unwrap_or(T::lit(0.9)),
        options.init_es.unwrap_or(T::one() + backoff.k_bar[0]),
    ));
    let mut alpha = options.damping;
    let alpha_min = options.damping / T::lit(1024.0);
    let mut best = T::infinity();
    let mut since_best = 0usize;
    let mut last_res = (T::nan(), T::nan(), T::nan());
    for iter in 0..options.max_iters {
        let pass = evaluate(config, &backoff, &bounds, x)?;
        let res = (pass.next.0 - x.0, pass.next.1 - x.1, pass.next.2 - x.2);
        let size = max_abs(res);
        if size <= options.tol {
            // the mapped point is preferred when it verifies too, so exact
            // roots such as p = 0 for a lone station are returned exactly
            let mapped = evaluate(config, &backoff, &bounds, pass.next)?;
            let after = (
                mapped.next.0 - pass.next.0,
                mapped.next.1 - pass.next.1,
                mapped.next.2 - pass.next.2,
            );
            let mut sol = if max_abs(after) <= options.tol {
                mapped.solution
            } else {
                pass.solution
            };
            sol.iterations = iter;
            return Ok(sol);
        }
        // a stalled residual means the blend overshoots (typically a period-2
        // cycle); halve the step and keep going from the current iterate
        if size < best * T::lit(0.95) {
            best = size;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_WINDOW && alpha > alpha_min {
                alpha = alpha / T::lit(2.0);
                best = size;
                since_best = 0;
            }
        }
        last_res = res;
        x = bounds.clamp((
            x.0 + alpha * res.0,
            x.1 + alpha * res.1,
            x.2 + alpha * res.2,
        ));
    }
    Err(SolveError::NoConvergence {
        iters: options.max_iters,
        p: x.0.to_f64_lossy(),
        q: x.1.to_f64_lossy(),
        es: x.2.to_f64_lossy(),
        dp: (-last_res.0).to_f64_lossy(),
        dq: (-last_res.1).to_f64_lossy(),
        des: (-last_res.2).to_f64_lossy(),
    })
}

/// Agreement threshold between the standard initializers.
pub const ROOT_AGREEMENT: f64 = 1e-6;

/// Solution from the default start plus the spread of the roots reached from
/// [`STANDARD_INITS`].
#[derive(Debug, Clone)]
pub struct CrossChecked<T> {
    pub solution: ModelSolution<T>,
    /// Largest componentwise `(p, q, E{S})` gap over all starting points.
    pub spread: T,
}

impl<T: Real> CrossChecked<T> {
    pub fn agrees(&self) -> bool {
        self.spread <= T::lit(ROOT_AGREEMENT)
    }
}

pub fn solve_cross_checked<T: Real>(
    config: &ValidConfig,
    options: &SolverOptions<T>,
) -> Result<CrossChecked<T>, SolveError> {
    let solution = solve(config, options)?;
    let mut spread = T::zero();
    for (p, q, es) in STANDARD_INITS {
        let alt = solve(config, &options.with_init(T::lit(p), T::lit(q), T::lit(es)))?;
        let gap = max_abs((alt.p - solution.p, alt.q - solution.q, alt.es - solution.es));
        spread = spread.max(gap);
    }
    Ok(CrossChecked { solution, spread })
}
