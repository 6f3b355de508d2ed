use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::sweep::{model_metric, sim_metric, GridPoint, SweepResult};

/// Upper bound on the queue load `lambda * E{S_Q}` for waiting-delay rows.
pub const WAIT_LOAD_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub metric: String,
    pub max_rel_err: f64,
    /// Only rows with `lambda * E{S_Q}` below [`WAIT_LOAD_LIMIT`] count.
    pub light_queue_only: bool,
}

impl Tolerance {
    pub fn new(metric: &str, max_rel_err: f64) -> Self {
        Self {
            metric: metric.to_string(),
            max_rel_err,
            light_queue_only: false,
        }
    }
}

/// Acceptance tolerances for model versus simulation.
pub fn default_tolerances() -> Vec<Tolerance> {
    let mut ew = Tolerance::new("ew", 0.15);
    ew.light_queue_only = true;
    vec![
        Tolerance::new("th", 0.05),
        Tolerance::new("p_s", 0.05),
        Tolerance::new("p", 0.05),
        Tolerance::new("es", 0.08),
        Tolerance::new("es_c", 0.08),
        ew,
        Tolerance::new("e_r", 0.10),
        Tolerance::new("e_p", 0.10),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotCompared,
}

/// Grid point with the largest relative error of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub point: GridPoint,
    pub rel_err: f64,
    pub model: f64,
    pub sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub tolerance: f64,
    pub status: Status,
    /// Rows where the relative error is defined.
    pub compared: usize,
    pub worst: Option<Worst>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub axis: String,
    pub points: usize,
    pub metrics: Vec<MetricReport>,
}

impl Report {
    /// True when no compared metric exceeds its tolerance.
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.status != Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Folds several reports into one, keeping the worst point per metric.
    pub fn merge(reports: &[Report]) -> Report {
        let mut merged = Report {
            axis: "mixed".into(),
            points: 0,
            metrics: Vec::new(),
        };
        for r in reports {
            merged.points += r.points;
            for m in &r.metrics {
                match merged.metrics.iter_mut().find(|x| x.metric == m.metric) {
                    None => merged.metrics.push(m.clone()),
                    Some(x) => {
                        x.compared += m.compared;
                        if m.worst.map(|w| w.rel_err) > x.worst.map(|w| w.rel_err) {
                            x.worst = m.worst;
                        }
                        x.status = match (x.status, m.status) {
                            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
                            (Status::Pass, _) | (_, Status::Pass) => Status::Pass,
                            _ => Status::NotCompared,
                        };
                    }
                }
            }
        }
        if reports.len() == 1 {
            merged.axis = reports[0].axis.clone();
        }
        merged
    }
}

fn metric_report(result: &SweepResult, tol: &Tolerance) -> MetricReport {
    let mut compared = 0;
    let mut worst: Option<Worst> = None;
    for row in &result.rows {
        let (Ok(sol), Some(sim)) = (&row.model, &row.sim) else {
            continue;
        };
        if tol.light_queue_only {
            let lambda = result.config_at(row.point).lambda;
            if (lambda * sol.es_q).partial_cmp(&WAIT_LOAD_LIMIT) != Some(Ordering::Less) {
                continue;
            }
        }
        let (Some(a), Some(s)) = (model_metric(sol, &tol.metric), sim_metric(sim, &tol.metric))
        else {
            continue;
        };
        let Some(rel_err) = crate::sweep::relative_error(a, s) else {
            continue;
        };
        compared += 1;
        if worst.is_none_or(|w| rel_err > w.rel_err) {
            worst = Some(Worst {
                point: row.point,
                rel_err,
                model: a,
                sim: s,
            });
        }
    }
    let status = match worst {
        None => Status::NotCompared,
        Some(w) if w.rel_err <= tol.max_rel_err => Status::Pass,
        Some(_) => Status::Fail,
    };
    MetricReport {
        metric: tol.metric.clone(),
        tolerance: tol.max_rel_err,
        status,
        compared,
        worst,
    }
}

/// Largest relative error per metric over the grid, checked against its tolerance.
pub fn compare(result: &SweepResult, tolerances: &[Tolerance]) -> Report {
    Report {
        axis: result.axis.name().to_string(),
        points: result.rows.len(),
        metrics: tolerances
            .iter()
            .map(|t| metric_report(result, t))
            .collect(),
    }
}
