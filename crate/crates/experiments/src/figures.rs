//! Canned sweeps and validation grids.

use pgpoll_core::{capacity_heuristics, NetworkConfig, Options, SolveError};
use pgpoll_sim::SimConfig;

use crate::sweep::{Axis, SweepResult, SweepSpec};

pub const FIGURES: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

const DEPTHS: [u32; 4] = [0, 1, 3, 5];

fn loads() -> Vec<f64> {
    let mut v = vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];
    v.extend([0.6, 0.7, 0.8, 0.9, 1.0]);
    v
}

fn range(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

fn spec(axis: Axis, values: Vec<f64>, base: NetworkConfig, sim: SimConfig) -> SweepSpec {
    let g_values = if axis == Axis::G {
        Vec::new()
    } else {
        DEPTHS.to_vec()
    };
    SweepSpec {
        base,
        axis,
        values,
        g_values,
        sim,
        run_sim: true,
    }
}

/// Named sweep behind each figure:
///
/// | name | axis | fixed |
/// |------|------|-------|
/// | fig3 | L = 5..21 | saturation |
/// | fig4 | load 0.05..1 | L = 21 |
/// | fig5 | load 0.05..1 | L = 7 |
/// | fig6 | L = 21..35 | saturation |
/// | fig7 | N = 2..50 | L = 21, saturation |
pub fn figure(name: &str, sim: SimConfig) -> Option<SweepSpec> {
    let base = NetworkConfig::default();
    Some(match name {
        "fig3" => spec(Axis::L, range(5, 21), base, sim),
        "fig4" => spec(
            Axis::RhoIn,
            loads(),
            NetworkConfig {
                n_slots: 21,
                ..base
            },
            sim,
        ),
        "fig5" => spec(
            Axis::RhoIn,
            loads(),
            NetworkConfig { n_slots: 7, ..base },
            sim,
        ),
        "fig6" => spec(Axis::L, range(21, 35), base, sim),
        "fig7" => {
            let ns = vec![
                2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0,
            ];
            spec(
                Axis::N,
                ns,
                NetworkConfig {
                    n_slots: 21,
                    ..base
                },
                sim,
            )
        }
        _ => return None,
    })
}

/// Validation grid of about sixty points: a slot sweep at saturation and load
/// sweeps at 21 and 7 slots, each for `G` in {0, 1, 3, 5}.
pub fn full_grid(sim: SimConfig) -> Vec<SweepSpec> {
    let base = NetworkConfig::default();
    vec![
        spec(
            Axis::L,
            vec![5.0, 7.0, 9.0, 12.0, 15.0, 21.0],
            base.clone(),
            sim,
        ),
        spec(
            Axis::RhoIn,
            vec![0.05, 0.1, 0.2, 0.3, 0.5],
            NetworkConfig {
                n_slots: 21,
                ..base.clone()
            },
            sim,
        ),
        spec(
            Axis::RhoIn,
            vec![0.05, 0.1, 0.2, 0.5],
            NetworkConfig { n_slots: 7, ..base },
            sim,
        ),
    ]
}

/// Six-point grid for quick end-to-end checks.
pub fn small_grid(sim: SimConfig) -> Vec<SweepSpec> {
    let base = NetworkConfig::default();
    let pick = |mut s: SweepSpec| {
        s.g_values = vec![0, 1];
        s
    };
    vec![
        pick(spec(Axis::L, vec![7.0, 21.0], base.clone(), sim)),
        pick(spec(
            Axis::RhoIn,
            vec![0.1],
            NetworkConfig {
                n_slots: 21,
                ..base
            },
            sim,
        )),
    ]
}

/// Model throughput against `min(L, Th_max)` at one row of a saturation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityCheck {
    pub n_slots: u32,
    pub g: u32,
    pub th: f64,
    pub ceiling: f64,
}

impl CapacityCheck {
    /// Allowed overshoot of the ceiling.
    pub const SLACK: f64 = 0.02;

    pub fn holds(&self) -> bool {
        self.th <= self.ceiling * (1.0 + Self::SLACK)
    }
}

/// Evaluates the throughput ceiling at every solved row of a sweep.
pub fn capacity_checks(result: &SweepResult) -> Result<Vec<CapacityCheck>, SolveError> {
    let mut out = Vec::new();
    for row in &result.rows {
        let Ok(sol) = &row.model else { continue };
        let cfg = result
            .config_at(row.point)
            .validate()
            .map_err(|e| SolveError::Options(e.to_string()))?;
        let cap = capacity_heuristics(&cfg, &Options::default())?;
        out.push(CapacityCheck {
            n_slots: cfg.n_slots,
            g: cfg.max_piggy,
            th: sol.th,
            ceiling: cap.th_max.min(f64::from(cfg.n_slots)),
        });
    }
    Ok(out)
}
