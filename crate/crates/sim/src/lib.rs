//! Frame-synchronous simulator of broadcast polling with truncated binary
//! exponential backoff, T16 expiry, random-order slot grants and bounded
//! piggybacking.
//!
//! [`run`] executes independent replications in parallel and reports each
//! metric as a mean with a 95% confidence half-width. [`trace`] records every
//! state transition of a short run as a tab-separated event log.

pub mod engine;
pub mod metrics;
pub mod state;
pub mod trace;

use pgpoll_core::ValidConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{replication_seed, Counters, Network, PacketTotals, Violations};
pub use metrics::{Estimate, RunStats, SimMetrics};
pub use state::{BasePending, Phase, SubscriberState};
pub use trace::{render, EventKind, TraceEvent};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("measure_frames must be >= 1")]
    NoMeasureFrames,
    #[error("replications must be >= 1")]
    NoReplications,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub warmup_frames: u64,
    pub measure_frames: u64,
    pub replications: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            warmup_frames: 2000,
            measure_frames: 20_000,
            replications: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.measure_frames == 0 {
            return Err(SimError::NoMeasureFrames);
        }
        if self.replications == 0 {
            return Err(SimError::NoReplications);
        }
        Ok(())
    }
}

/// Outcome of one replication, including the rule audit.
#[derive(Debug, Clone)]
pub struct Replication {
    pub stats: RunStats,
    pub counters: Counters,
    pub violations: Violations,
    pub totals: PacketTotals,
}

pub fn run_replication(config: &ValidConfig, seed: u64, warmup: u64, measure: u64) -> Replication {
    let mut net = Network::new(config, seed, false);
    for _ in 0..warmup {
        net.step();
    }
    net.set_measuring(true);
    for _ in 0..measure {
        net.step();
    }
    net.audit_packets();
    let counters = net.counters().clone();
    Replication {
        stats: RunStats::from_counters(&counters, config.n_tos),
        counters,
        violations: net.violations().clone(),
        totals: net.totals(),
    }
}

/// Runs all replications and aggregates them.
pub fn run(config: &ValidConfig, sim: &SimConfig) -> Result<SimMetrics, SimError> {
    Ok(SimMetrics::aggregate(
        &run_all(config, sim)?
            .iter()
            .map(|r| r.stats)
            .collect::<Vec<_>>(),
    ))
}

/// Runs every replication in parallel and returns them in index order.
pub fn run_all(config: &ValidConfig, sim: &SimConfig) -> Result<Vec<Replication>, SimError> {
    sim.validate()?;
    Ok((0..u64::from(sim.replications))
        .into_par_iter()
        .map(|r| {
            run_replication(
                config,
                replication_seed(sim.seed, r),
                sim.warmup_frames,
                sim.measure_frames,
            )
        })
        .collect())
}

/// Event log of the first `frames` frames of replication 0.
pub fn trace(config: &ValidConfig, sim: &SimConfig, frames: u64) -> Vec<TraceEvent> {
    let mut net = Network::new(config, replication_seed(sim.seed, 0), true);
    for _ in 0..frames {
        net.step();
    }
    net.take_log()
}
