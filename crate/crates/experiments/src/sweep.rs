use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use pgpoll_core::{solve, NetworkConfig, Options, Solution, ValidConfig};
use pgpoll_sim::{SimConfig, SimMetrics};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ExperimentError;

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    L,
    #[serde(rename = "rho_in")]
    RhoIn,
    N,
    G,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::L => "L",
            Axis::RhoIn => "rho_in",
            Axis::N => "N",
            Axis::G => "G",
        }
    }

    fn integral(self) -> bool {
        !matches!(self, Axis::RhoIn)
    }

    /// Copy of `base` with the axis parameter set to `value` and the piggyback
    /// depth set to `g`.
    pub fn apply(self, base: &NetworkConfig, value: f64, g: u32) -> NetworkConfig {
        let mut cfg = NetworkConfig {
            max_piggy: g,
            ..base.clone()
        };
        match self {
            Axis::L => cfg.n_slots = value as u32,
            Axis::RhoIn => cfg.lambda = value / cfg.t_frame,
            Axis::N => cfg.n_ss = value as u32,
            Axis::G => cfg.max_piggy = value as u32,
        }
        cfg
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" | "n_slots" => Ok(Axis::L),
            "rho_in" | "lambda" => Ok(Axis::RhoIn),
            "N" | "n_ss" => Ok(Axis::N),
            "G" | "max_piggy" => Ok(Axis::G),
            other => Err(ExperimentError::InvalidSweep(format!(
                "unknown axis `{other}`"
            ))),
        }
    }
}

/// A one-dimensional grid, repeated for each piggyback depth in `g_values`.
///
/// When the axis itself is `G`, `g_values` must be empty and each row's depth
/// is its axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: NetworkConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub g_values: Vec<u32>,
    pub sim: SimConfig,
    pub run_sim: bool,
}

/// One `(axis value, G)` pair of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub axis_value: f64,
    pub g: u32,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, G={})", self.axis_value, self.g)
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidSweep(msg));
        if self.values.is_empty() {
            return bad("values must not be empty".into());
        }
        if self
            .values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return bad("values must be strictly increasing".into());
        }
        if self.axis.integral() {
            if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
                return bad(format!("axis {} takes whole numbers, got {v}", self.axis));
            }
        }
        match (self.axis, self.g_values.is_empty()) {
            (Axis::G, false) => return bad("g_values must be empty when the axis is G".into()),
            (Axis::G, true) => {}
            (_, true) => return bad("g_values must not be empty".into()),
            _ => {}
        }
        if self.run_sim {
            self.sim
                .validate()
                .map_err(|e| ExperimentError::InvalidSweep(e.to_string()))?;
        }
        for point in self.points() {
            self.config_at(point)?;
        }
        Ok(())
    }

    /// Grid points in row order: grouped by `G`, ascending axis value.
    pub fn points(&self) -> Vec<GridPoint> {
        if self.axis == Axis::G {
            return self
                .values
                .iter()
                .map(|&v| GridPoint {
                    axis_value: v,
                    g: v as u32,
                })
                .collect();
        }
        self.g_values
            .iter()
            .flat_map(|&g| {
                self.values
                    .iter()
                    .map(move |&v| GridPoint { axis_value: v, g })
            })
            .collect()
    }

    pub fn config_at(&self, point: GridPoint) -> Result<ValidConfig, ExperimentError> {
        self.axis
            .apply(&self.base, point.axis_value, point.g)
            .validate()
            .map_err(|e| ExperimentError::InvalidSweep(format!("at {point}: {e}")))
    }
}

/// Model and optional simulator output at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: GridPoint,
    /// Solver failures are kept as their message.
    pub model: Result<Solution, String>,
    pub sim: Option<SimMetrics>,
}

/// Metrics present on both sides, by field name.
pub const COMPARED_METRICS: [&str; 12] = [
    "th", "th_c", "th_pg", "p_s", "p", "q", "p_d", "es", "es_c", "ew", "e_r", "e_p",
];

/// Model value of a compared metric.
pub fn model_metric(sol: &Solution, name: &str) -> Option<f64> {
    Some(match name {
        "th" => sol.th,
        "th_c" => sol.th_c,
        "th_pg" => sol.th_pg,
        "p_s" => sol.p_s,
        "p" => sol.p,
        "q" => sol.q,
        "p_d" => sol.p_d,
        "es" => sol.es,
        "es_c" => sol.es_c,
        "ew" => return sol.ew,
        "e_r" => sol.e_r,
        "e_p" => sol.e_p,
        _ => return None,
    })
}

/// Simulated mean of a compared metric.
pub fn sim_metric(sim: &SimMetrics, name: &str) -> Option<f64> {
    sim.means()
        .into_iter()
        .find(|(n, _)| *n == name)
        .and_then(|(_, v)| v)
}

/// Symmetric relative error `|a - s| / max(|a|, |s|, 1e-9)`, undefined when
/// the simulated value is zero.
pub fn relative_error(model: f64, sim: f64) -> Option<f64> {
    (sim != 0.0).then(|| (model - sim).abs() / model.abs().max(sim.abs()).max(1e-9))
}

impl Row {
    pub fn relative_error(&self, metric: &str) -> Option<f64> {
        let model = model_metric(self.model.as_ref().ok()?, metric)?;
        let sim = sim_metric(self.sim.as_ref()?, metric)?;
        relative_error(model, sim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub base: NetworkConfig,
    pub axis: Axis,
    pub rows: Vec<Row>,
}

impl SweepResult {
    pub fn has_sim(&self) -> bool {
        self.rows.iter().any(|r| r.sim.is_some())
    }

    pub fn config_at(&self, point: GridPoint) -> NetworkConfig {
        self.axis.apply(&self.base, point.axis_value, point.g)
    }
}

fn evaluate(spec: &SweepSpec, point: GridPoint) -> Row {
    let cfg = spec.config_at(point).expect("validated spec");
    let model = solve(&cfg, &Options::default()).map_err(|e| e.to_string());
    let sim = spec
        .run_sim
        .then(|| pgpoll_sim::run(&cfg, &spec.sim).expect("validated sim config"));
    Row { point, model, sim }
}

/// Solves (and optionally simulates) every grid point in parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let rows = spec
        .points()
        .into_par_iter()
        .map(|pt| evaluate(spec, pt))
        .collect();
    Ok(SweepResult {
        base: spec.base.clone(),
        axis: spec.axis,
        rows,
    })
}
