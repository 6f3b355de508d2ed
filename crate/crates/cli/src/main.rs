use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pgpoll_core::{solve, ConfigError, NetworkConfig, Options, Solution, ValidConfig};
use pgpoll_experiments::table::MODEL_FIELDS;
use pgpoll_experiments::{
    compare, default_tolerances, figure, full_grid, run_sweep, small_grid, to_csv_string, Axis,
    ExperimentError, Report, Status, SweepResult, SweepSpec, FIGURES,
};
use pgpoll_sim::{SimConfig, SimMetrics};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("model: {0}")]
    Solve(String),
    #[error("simulator: {0}")]
    Sim(String),
    #[error("cannot read config {path}: {source}")]
    ConfigFile {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("validation failed: at least one metric exceeds its tolerance")]
    ValidationFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Config(_)
            | CliError::ConfigFile { .. }
            | CliError::Experiment(ExperimentError::InvalidSweep(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pgpoll",
    version,
    about = "Broadcast polling with piggybacked bandwidth requests: model, simulator, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the analytical model for one configuration.
    Solve {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate one configuration.
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a parameter sweep and write its table.
    Sweep {
        #[command(flatten)]
        net: NetArgs,
        /// Canned sweep to run (fig3, fig4, fig5, fig6, fig7).
        #[arg(long, conflicts_with_all = ["axis", "config"])]
        figure: Option<String>,
        /// Swept parameter: L, rho_in, N or G.
        #[arg(long, value_parser = parse_axis, requires = "values")]
        axis: Option<Axis>,
        /// Comma-separated axis values, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated piggyback depths, one curve each.
        #[arg(long = "g", value_delimiter = ',', default_value = "0,1,3,5")]
        g_values: Vec<u32>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare model and simulator over a validation grid.
    Validate {
        #[arg(long, value_enum, default_value_t = Grid::Small)]
        grid: Grid,
        #[command(flatten)]
        sim: SimArgs,
        /// Path of the JSON report.
        #[arg(long, default_value = "validation_report.json")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run every canned sweep and write one CSV per figure.
    Figures {
        #[command(flatten)]
        sim: SimArgs,
        /// Output directory.
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct NetArgs {
    /// Configuration file, JSON or key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter after the file is loaded, e.g. `--set L=21`.
    #[arg(long = "set", value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Measured frames per replication.
    #[arg(long)]
    frames: Option<u64>,
    /// Warm-up frames discarded before measuring.
    #[arg(long)]
    warmup: Option<u64>,
    /// Skip the simulator and report the model only.
    #[arg(long)]
    no_sim: bool,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Grid {
    Small,
    Full,
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: ExperimentError| e.to_string())
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        let d = SimConfig::default();
        SimConfig {
            seed: self.seed.unwrap_or(d.seed),
            warmup_frames: self.warmup.unwrap_or(d.warmup_frames),
            measure_frames: self.frames.unwrap_or(d.measure_frames),
            replications: self.replications.unwrap_or(d.replications),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn apply_overrides(cfg: &mut NetworkConfig, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects K=V, got `{item}`")))?;
        cfg.set(k, v)?;
    }
    Ok(())
}

fn load(net: &NetArgs) -> Result<ValidConfig, CliError> {
    let mut cfg = match &net.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
                path: path.display().to_string(),
                source,
            })?;
            NetworkConfig::parse_any(&text)?
        }
        None => NetworkConfig::default(),
    };
    apply_overrides(&mut cfg, &net.overrides)?;
    Ok(cfg.validate()?)
}

fn meta_lines(command: &str, cfg: &NetworkConfig, overrides: &[String]) -> String {
    let mut s = format!("# pgpoll {command}\n# config: {cfg}\n");
    if !overrides.is_empty() {
        s.push_str(&format!("# overrides: {}\n", overrides.join(" ")));
    }
    s
}

fn number(v: &Value) -> String {
    match v {
        Value::Null => "n/a".into(),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.to_string(),
            None => n.as_f64().map(|x| x.to_string()).unwrap_or_default(),
        },
        other => other.to_string(),
    }
}

fn render_solution(
    sol: &Solution,
    cfg: &NetworkConfig,
    overrides: &[String],
    format: Format,
) -> String {
    let v = serde_json::to_value(sol).expect("solution serializes");
    match format {
        Format::Json => {
            let doc =
                json!({ "command": "solve", "config": cfg, "overrides": overrides, "solution": v });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for f in MODEL_FIELDS {
                s.push_str(&format!("{f},{}\n", number(&v[f]).replace("n/a", "")));
            }
            s
        }
        Format::Text => {
            let mut s = meta_lines("solve", cfg, overrides);
            for f in MODEL_FIELDS {
                s.push_str(&format!("{f} = {}\n", number(&v[f])));
            }
            s
        }
    }
}

fn render_metrics(
    m: &SimMetrics,
    cfg: &NetworkConfig,
    sim: &SimConfig,
    overrides: &[String],
    format: Format,
) -> String {
    let v = serde_json::to_value(m).expect("metrics serialize");
    let est = |name: &str| -> (String, String) {
        let e = &v[name];
        (number(&e["mean"]), number(&e["half_width"]))
    };
    let names: Vec<&str> = m.means().into_iter().map(|(n, _)| n).collect();
    match format {
        Format::Json => {
            let doc = json!({
                "command": "simulate",
                "config": cfg,
                "sim": sim,
                "overrides": overrides,
                "metrics": v,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("metric,mean,half_width\n");
            for n in names {
                let (mean, hw) = est(n);
                s.push_str(&format!(
                    "{n},{},{}\n",
                    mean.replace("n/a", ""),
                    hw.replace("n/a", "")
                ));
            }
            s
        }
        Format::Text => {
            let mut s = meta_lines("simulate", cfg, overrides);
            s.push_str(&format!(
                "# seed={} replications={} warmup={} frames={}\n",
                sim.seed, sim.replications, sim.warmup_frames, sim.measure_frames
            ));
            for n in names {
                let (mean, hw) = est(n);
                s.push_str(&format!("{n} = {mean} +/- {hw}\n"));
            }
            s
        }
    }
}

fn sweep_json(result: &SweepResult) -> String {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "axis_value": r.point.axis_value,
                "G": r.point.g,
                "model": r.model.as_ref().ok(),
                "model_error": r.model.as_ref().err(),
                "sim": r.sim,
            })
        })
        .collect();
    let doc = json!({ "axis": result.axis.name(), "base": result.base, "rows": rows });
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

fn sweep_text(result: &SweepResult) -> String {
    let mut s = format!("# base: {}\n", result.base);
    s.push_str(&format!(
        "{:>8} {:>2} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9}\n",
        result.axis, "G", "th", "th_sim", "p", "p_sim", "es", "es_sim"
    ));
    let f = |x: Option<f64>| x.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    for r in &result.rows {
        let m = r.model.as_ref().ok();
        let sm = r.sim.as_ref();
        s.push_str(&format!(
            "{:>8} {:>2} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9}\n",
            r.point.axis_value,
            r.point.g,
            f(m.map(|m| m.th)),
            f(sm.map(|x| x.th.mean)),
            f(m.map(|m| m.p)),
            f(sm.and_then(|x| x.p.map(|e| e.mean))),
            f(m.map(|m| m.es)),
            f(sm.and_then(|x| x.es.map(|e| e.mean))),
        ));
    }
    s
}

fn with_overrides(csv: String, overrides: &[String]) -> String {
    if overrides.is_empty() {
        return csv;
    }
    let (first, rest) = csv.split_once('\n').unwrap_or((&csv, ""));
    format!("{first}\n# overrides: {}\n{rest}", overrides.join(" "))
}

fn report_text(report: &Report, path: &Path) -> String {
    let mut s = format!(
        "# validation over {} points, report written to {}\n",
        report.points,
        path.display()
    );
    for m in &report.metrics {
        let status = match m.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotCompared => "not compared",
        };
        let worst = m
            .worst
            .map(|w| {
                format!(
                    "max {:.2}% at {} model={:.5} sim={:.5}",
                    100.0 * w.rel_err,
                    w.point,
                    w.model,
                    w.sim
                )
            })
            .unwrap_or_default();
        s.push_str(&format!(
            "{:<5} tol {:>3.0}%  {status:<12} {worst}\n",
            m.metric,
            100.0 * m.tolerance
        ));
    }
    s.push_str(if report.passed() {
        "overall: PASS\n"
    } else {
        "overall: FAIL\n"
    });
    s
}

fn run_command(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { net, out } => {
            let cfg = load(&net)?;
            let sol =
                solve(&cfg, &Options::default()).map_err(|e| CliError::Solve(e.to_string()))?;
            let text = render_solution(
                &sol,
                &cfg,
                &net.overrides,
                out.format.unwrap_or(Format::Text),
            );
            emit(out.out.as_deref(), &text)
        }
        Command::Simulate { net, sim, out } => {
            if sim.no_sim {
                return Err(CliError::Usage(
                    "--no-sim makes no sense for simulate".into(),
                ));
            }
            let cfg = load(&net)?;
            let sim_cfg = sim.config();
            let metrics =
                pgpoll_sim::run(&cfg, &sim_cfg).map_err(|e| CliError::Sim(e.to_string()))?;
            let text = render_metrics(
                &metrics,
                &cfg,
                &sim_cfg,
                &net.overrides,
                out.format.unwrap_or(Format::Text),
            );
            emit(out.out.as_deref(), &text)
        }
        Command::Sweep {
            net,
            figure: name,
            axis,
            values,
            g_values,
            sim,
            out,
        } => {
            let mut spec = match (name, axis) {
                (Some(name), _) => {
                    let mut spec = figure(&name, sim.config()).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown figure `{name}`, expected one of {}",
                            FIGURES.join(", ")
                        ))
                    })?;
                    apply_overrides(&mut spec.base, &net.overrides)?;
                    spec
                }
                (None, Some(axis)) => SweepSpec {
                    base: load(&net)?.into_inner(),
                    axis,
                    values,
                    g_values: if axis == Axis::G {
                        Vec::new()
                    } else {
                        g_values
                    },
                    sim: sim.config(),
                    run_sim: true,
                },
                (None, None) => {
                    return Err(CliError::Usage(
                        "sweep needs --figure or --axis with --values".into(),
                    ))
                }
            };
            spec.run_sim = !sim.no_sim;
            let result = run_sweep(&spec)?;
            let text = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => with_overrides(to_csv_string(&result), &net.overrides),
                Format::Json => sweep_json(&result),
                Format::Text => sweep_text(&result),
            };
            emit(out.out.as_deref(), &text)
        }
        Command::Validate {
            grid,
            sim,
            out,
            format,
        } => {
            if sim.no_sim {
                return Err(CliError::Usage("validate needs the simulator".into()));
            }
            let specs = match grid {
                Grid::Small => small_grid(sim.config()),
                Grid::Full => full_grid(sim.config()),
            };
            let mut reports = Vec::new();
            for spec in &specs {
                reports.push(compare(&run_sweep(spec)?, &default_tolerances()));
            }
            let report = Report::merge(&reports);
            write(&out, &report.to_json())?;
            let text = match format {
                Format::Json => report.to_json(),
                _ => report_text(&report, &out),
            };
            emit(None, &text)?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::ValidationFailed)
            }
        }
        Command::Figures { sim, out } => {
            fs::create_dir_all(&out).map_err(|source| CliError::Io {
                path: out.display().to_string(),
                source,
            })?;
            let mut listing = String::new();
            for name in FIGURES {
                let mut spec = figure(name, sim.config()).expect("canned figure");
                spec.run_sim = !sim.no_sim;
                let path = out.join(format!("{name}.csv"));
                write(&path, &to_csv_string(&run_sweep(&spec)?))?;
                listing.push_str(&format!("{}\n", path.display()));
            }
            emit(None, &listing)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("run `pgpoll --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
