//! Builds the station chain as an explicit transition matrix, solves for its
//! stationary distribution with a dense linear solve, and compares every state
//! mass against the closed forms.

use nalgebra::{DMatrix, DVector};
use pgpoll_core::analytic::{chain_stationary, state_masses};
use pgpoll_core::{Backoff, NetworkConfig, ValidConfig};

/// Indices of every state in the explicit chain.
struct Layout {
    /// `wait[i][r-1]` is "round `i`, `r` backoff frames left".
    wait: Vec<Vec<usize>>,
    request: Vec<usize>,
    collision: Vec<Vec<usize>>,
    transmit: Vec<Vec<usize>>,
    fail: Vec<Vec<usize>>,
    piggy: Vec<usize>,
    idle: usize,
    size: usize,
}

/// Distribution of the number of whole frames waited before the request of
/// a round is sent, from direct counting over the backoff counter values.
fn wait_distribution(window: u64, n_tos: u64) -> Vec<f64> {
    let frames = window.div_ceil(n_tos) as usize;
    let mut counts = vec![0u64; frames];
    for counter in 0..window {
        counts[(counter / n_tos) as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / window as f64)
        .collect()
}

fn layout(cfg: &ValidConfig) -> (Layout, Vec<Vec<f64>>) {
    let d = cfg.max_retx as usize;
    let m = cfg.t16_frames as usize;
    let mut next = 0usize;
    let mut take = |k: usize| {
        let v: Vec<usize> = (next..next + k).collect();
        next += k;
        v
    };
    let dists: Vec<Vec<f64>> = (0..=d)
        .map(|i| wait_distribution(cfg.window(i as u32), u64::from(cfg.n_tos)))
        .collect();
    let wait = (0..=d)
        .map(|i| {
            if i == 0 {
                Vec::new()
            } else {
                take(dists[i].len() - 1)
            }
        })
        .collect();
    let request = take(d + 1);
    let collision = (0..=d).map(|_| take(m)).collect();
    let transmit = (0..=d).map(|_| take(m)).collect();
    let fail = (0..=d).map(|_| take(m)).collect();
    let piggy = take(cfg.max_piggy as usize);
    let idle = take(1)[0];
    (
        Layout {
            wait,
            request,
            collision,
            transmit,
            fail,
            piggy,
            idle,
            size: next,
        },
        dists,
    )
}

fn transition_matrix(
    cfg: &ValidConfig,
    lay: &Layout,
    dists: &[Vec<f64>],
    p: f64,
    q: f64,
    pi0: f64,
) -> DMatrix<f64> {
    let d = cfg.max_retx as usize;
    let m = cfg.t16_frames as usize;
    let stay_idle = (-cfg.lambda).exp();
    let mut t = DMatrix::<f64>::zeros(lay.size, lay.size);

    // a fresh packet starts round 0 with no backoff frames
    let new_packet = |t: &mut DMatrix<f64>, from: usize, w: f64| {
        t[(from, lay.request[0])] += w;
    };
    let next_round = |t: &mut DMatrix<f64>, from: usize, round: usize, w: f64| {
        if round > d {
            t[(from, lay.idle)] += w * pi0;
            t[(from, lay.request[0])] += w * (1.0 - pi0);
            return;
        }
        for (k, &pk) in dists[round].iter().enumerate() {
            let to = if k == 0 {
                lay.request[round]
            } else {
                lay.wait[round][k - 1]
            };
            t[(from, to)] += w * pk;
        }
    };
    let after_data = |t: &mut DMatrix<f64>, from: usize, w: f64| {
        t[(from, lay.idle)] += w * pi0;
        if let Some(&pg1) = lay.piggy.first() {
            t[(from, pg1)] += w * (1.0 - pi0);
        } else {
            t[(from, lay.request[0])] += w * (1.0 - pi0);
        }
    };

    for i in 0..=d {
        for r in 0..lay.wait[i].len() {
            let to = if r == 0 {
                lay.request[i]
            } else {
                lay.wait[i][r - 1]
            };
            t[(lay.wait[i][r], to)] = 1.0;
        }
        let req = lay.request[i];
        t[(req, lay.collision[i][0])] += p;
        t[(req, lay.transmit[i][0])] += (1.0 - p) * q;
        t[(req, lay.fail[i][0])] += (1.0 - p) * (1.0 - q);
        for j in 0..m {
            if j + 1 < m {
                t[(lay.collision[i][j], lay.collision[i][j + 1])] = 1.0;
                t[(lay.fail[i][j], lay.transmit[i][j + 1])] = q;
                t[(lay.fail[i][j], lay.fail[i][j + 1])] = 1.0 - q;
            } else {
                next_round(&mut t, lay.collision[i][j], i + 1, 1.0);
                next_round(&mut t, lay.fail[i][j], i + 1, 1.0);
            }
            after_data(&mut t, lay.transmit[i][j], 1.0);
        }
    }
    for (k, &pg) in lay.piggy.iter().enumerate() {
        t[(pg, lay.idle)] += pi0;
        match lay.piggy.get(k + 1) {
            Some(&nxt) => t[(pg, nxt)] += 1.0 - pi0,
            None => new_packet(&mut t, pg, 1.0 - pi0),
        }
    }
    t[(lay.idle, lay.idle)] = stay_idle;
    new_packet(&mut t, lay.idle, 1.0 - stay_idle);
    t
}

/// Solves `pi T = pi`, `sum pi = 1` by replacing one balance row.
fn stationary(t: &DMatrix<f64>) -> DVector<f64> {
    let n = t.nrows();
    let mut a = t.transpose() - DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("chain is irreducible")
}

pub fn check(cfg: &ValidConfig, p: f64, q: f64, pi0: f64) {
    let (lay, dists) = layout(cfg);
    let t = transition_matrix(cfg, &lay, &dists, p, q, pi0);
    for r in 0..lay.size {
        let row: f64 = t.row(r).sum();
        assert!((row - 1.0).abs() < 1e-14, "row {r} sums to {row}");
    }
    let pi = stationary(&t);

    let backoff = Backoff::new(cfg);
    let chain = chain_stationary(cfg, &backoff, p, q, pi0).unwrap();
    let closed = state_masses(cfg, &backoff, p, q, pi0, &chain);
    assert!(
        (closed.total() - 1.0).abs() < 1e-12,
        "closed-form total {}",
        closed.total()
    );

    let ctx = format!("{cfg:?} p={p} q={q} pi0={pi0}");
    let near = |a: f64, b: f64, what: &str| {
        assert!(
            (a - b).abs() < 1e-10,
            "{what}: closed {a} vs matrix {b} ({ctx})"
        );
    };
    near(chain.b00, pi[lay.request[0]], "b00");
    for i in 0..lay.request.len() {
        near(closed.request[i], pi[lay.request[i]], "request");
        let waited: f64 = lay.wait[i].iter().map(|&s| pi[s]).sum();
        near(closed.backoff[i], waited, "backoff");
        for j in 0..cfg.t16_frames as usize {
            near(closed.collision[i][j], pi[lay.collision[i][j]], "collision");
            near(closed.transmit[i][j], pi[lay.transmit[i][j]], "transmit");
            near(closed.fail[i][j], pi[lay.fail[i][j]], "fail");
        }
    }
    for (k, &s) in lay.piggy.iter().enumerate() {
        near(closed.piggyback[k], pi[s], "piggyback");
    }
    near(closed.idle, pi[lay.idle], "idle");
}

fn triples() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for p in [0.03, 0.37, 0.81] {
        for q in [0.12, 0.58, 1.0] {
            for pi0 in [0.04, 0.45, 1.0] {
                out.push((p, q, pi0));
            }
        }
    }
    out
}

/// Every `D, M, G <= 3` against 27 `(p, q, Pi0)` triples; returns the case count.
pub fn check_grid() -> usize {
    let mut checked = 0;
    for d in 0..=3 {
        for m in 1..=3 {
            for g in 0..=3 {
                let cfg = NetworkConfig {
                    n_ss: 10,
                    n_tos: 6,
                    w0: 8,
                    m_exp: 2,
                    t16_frames: m,
                    max_retx: d,
                    max_piggy: g,
                    lambda: 0.7,
                    ..Default::default()
                }
                .validate()
                .unwrap();
                for (p, q, pi0) in triples() {
                    check(&cfg, p, q, pi0);
                    checked += 1;
                }
            }
        }
    }
    checked
}

pub fn check_wide_windows() {
    for (w0, n_tos) in [(32, 20), (40, 20), (16, 16)] {
        let cfg = NetworkConfig {
            n_tos,
            w0,
            t16_frames: 2,
            max_retx: 3,
            max_piggy: 2,
            lambda: 1.3,
            ..Default::default()
        }
        .validate()
        .unwrap();
        for (p, q, pi0) in triples() {
            check(&cfg, p, q, pi0);
        }
    }
}
