//! Parameter sweeps over the analytical model and the simulator, their CSV
//! form, and the model-versus-simulation validation report.

pub mod compare;
pub mod figures;
pub mod sweep;
pub mod table;

use thiserror::Error;

pub use compare::{compare, default_tolerances, MetricReport, Report, Status, Tolerance};
pub use figures::{capacity_checks, figure, full_grid, small_grid, CapacityCheck, FIGURES};
pub use sweep::{run_sweep, Axis, GridPoint, Row, SweepResult, SweepSpec, COMPARED_METRICS};
pub use table::{read_csv, to_csv_string, write_csv};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Csv(e.to_string())
    }
}
