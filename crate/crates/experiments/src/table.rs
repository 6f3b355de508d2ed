//! CSV form of a [`SweepResult`].
//!
//! Two `#` lines precede the header: the first carries the axis and the base
//! configuration, the second documents the column layout. Cells that have no
//! value (solver failure, missing simulation, undefined metric) are empty.

use std::io::{BufRead, BufReader, Read, Write};

use pgpoll_core::NetworkConfig;
use serde_json::{Map, Value};

use crate::sweep::{Axis, GridPoint, Row, SweepResult, COMPARED_METRICS};
use crate::ExperimentError;

/// Every field of the model solution, in column order.
pub const MODEL_FIELDS: [&str; 26] = [
    "p",
    "q",
    "es",
    "pi0",
    "rho",
    "rho_raw",
    "p_f",
    "tau",
    "omega",
    "z",
    "phi",
    "b00",
    "p_b",
    "p_s",
    "p_d",
    "q_m",
    "e_r",
    "e_p",
    "es_c",
    "es2",
    "es_q",
    "ew",
    "th_c",
    "th_pg",
    "th",
    "iterations",
];

/// Every estimated field of the simulator output, in column order.
pub const SIM_FIELDS: [&str; 13] = [
    "th", "th_c", "th_pg", "es", "es_c", "ew", "p", "q", "p_s", "p_d", "e_r", "e_p", "g_bar",
];

const LAYOUT: &str = "# columns: axis value, G, model_* analytic fields, model_error, \
sim_replications, sim_* means with sim_*_hw 95% half-widths, relerr_* model vs sim; \
rows grouped by G with ascending axis value";

pub fn header(axis: Axis) -> Vec<String> {
    let mut cols = vec![axis.name().to_string(), "G".to_string()];
    cols.extend(MODEL_FIELDS.iter().map(|f| format!("model_{f}")));
    cols.push("model_error".into());
    cols.push("sim_replications".into());
    for f in SIM_FIELDS {
        cols.push(format!("sim_{f}"));
        cols.push(format!("sim_{f}_hw"));
    }
    cols.extend(COMPARED_METRICS.iter().map(|m| format!("relerr_{m}")));
    cols
}

fn cell(v: Option<&Value>) -> String {
    match v {
        Some(Value::Number(n)) => match n.as_u64() {
            Some(u) => u.to_string(),
            None => n.as_f64().map(|x| x.to_string()).unwrap_or_default(),
        },
        _ => String::new(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

fn record(row: &Row) -> Vec<String> {
    let mut out = vec![row.point.axis_value.to_string(), row.point.g.to_string()];
    match &row.model {
        Ok(sol) => {
            let v = serde_json::to_value(sol).expect("solution serializes");
            out.extend(MODEL_FIELDS.iter().map(|f| cell(v.get(f))));
            out.push(String::new());
        }
        Err(msg) => {
            out.extend(MODEL_FIELDS.iter().map(|_| String::new()));
            out.push(msg.clone());
        }
    }
    match &row.sim {
        Some(sim) => {
            let v = serde_json::to_value(sim).expect("metrics serialize");
            out.push(sim.replications.to_string());
            for f in SIM_FIELDS {
                let est = v.get(f);
                out.push(cell(est.and_then(|e| e.get("mean"))));
                out.push(cell(est.and_then(|e| e.get("half_width"))));
            }
        }
        None => out.extend(std::iter::repeat_n(String::new(), 1 + 2 * SIM_FIELDS.len())),
    }
    out.extend(COMPARED_METRICS.iter().map(|m| opt(row.relative_error(m))));
    out
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<(), ExperimentError> {
    let mut out = out;
    let base = serde_json::to_string(&result.base)?;
    writeln!(out, "# axis={} base={base}", result.axis)?;
    writeln!(out, "{LAYOUT}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(result.axis))?;
    for row in &result.rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn parse_cell(text: &str) -> Value {
    if text.is_empty() {
        Value::Null
    } else if let Ok(u) = text.parse::<u64>() {
        Value::from(u)
    } else {
        text.parse::<f64>().map(Value::from).unwrap_or(Value::Null)
    }
}

fn parse_num<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, ExperimentError> {
    text.parse()
        .map_err(|_| ExperimentError::Csv(format!("bad {what} `{text}`")))
}

struct Columns<'a> {
    names: &'a [String],
    rec: &'a csv::StringRecord,
}

impl Columns<'_> {
    fn get(&self, name: &str) -> Result<&str, ExperimentError> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ExperimentError::Csv(format!("missing column `{name}`")))?;
        Ok(self.rec.get(idx).unwrap_or(""))
    }
}

fn read_row(cols: &Columns<'_>, axis: Axis) -> Result<Row, ExperimentError> {
    let point = GridPoint {
        axis_value: parse_num(cols.get(axis.name())?, "axis value")?,
        g: parse_num(cols.get("G")?, "G")?,
    };
    let error = cols.get("model_error")?;
    let model = if error.is_empty() {
        let mut map = Map::new();
        for f in MODEL_FIELDS {
            map.insert(f.to_string(), parse_cell(cols.get(&format!("model_{f}"))?));
        }
        Ok(serde_json::from_value(Value::Object(map))?)
    } else {
        Err(error.to_string())
    };
    let reps = cols.get("sim_replications")?;
    let sim = if reps.is_empty() {
        None
    } else {
        let mut map = Map::new();
        map.insert("replications".into(), parse_cell(reps));
        for f in SIM_FIELDS {
            let mean = parse_cell(cols.get(&format!("sim_{f}"))?);
            let est = if mean.is_null() {
                Value::Null
            } else {
                let hw = parse_cell(cols.get(&format!("sim_{f}_hw"))?);
                serde_json::json!({ "mean": mean, "half_width": hw })
            };
            map.insert(f.to_string(), est);
        }
        Some(serde_json::from_value(Value::Object(map))?)
    };
    Ok(Row { point, model, sim })
}

pub fn read_csv<R: Read>(input: R) -> Result<SweepResult, ExperimentError> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .trim_end()
        .strip_prefix("# axis=")
        .ok_or_else(|| ExperimentError::Csv("missing `# axis=` line".into()))?;
    let (axis, base) = meta
        .split_once(" base=")
        .ok_or_else(|| ExperimentError::Csv("missing base configuration".into()))?;
    let axis: Axis = axis.parse()?;
    let base: NetworkConfig = serde_json::from_str(base)?;

    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let names: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in csv.records() {
        let rec = rec?;
        rows.push(read_row(
            &Columns {
                names: &names,
                rec: &rec,
            },
            axis,
        )?);
    }
    Ok(SweepResult { base, axis, rows })
}
