//! Command-line front end: config-driven runs, figure presets, CSV/JSON
//! output.
//!
//! Experiment files are TOML. The model keys (`theta`, `[rate]`, `[service]`)
//! are shared; each command reads its own section:
//!
//! ```toml
//! theta = 0.6
//! [rate]
//! kind = "sinusoid"
//! params = [1.7, 1.0, 1.8]
//! [service]
//! kind = "erlang"
//! params = [5, 0.16666666666666666]
//!
//! [tv]                 # solve-tv
//! times = [10.0]
//! xs = [0.5, 1.0, 2.0]
//!
//! [stationary]         # solve-stationary (constant rate only)
//! xs = [0.5, 1.0]
//! pdf = true
//! method = "euler"     # or "talbot"
//!
//! [simulate]           # simulate
//! t = 10.0
//! xs = [0.5, 1.0]
//! replications = 100000
//! seed = 7
//!
//! [schedule]           # optimize (service only; rate is the output)
//! times = [0.0, 8.0, 16.0]
//! thresholds = [7.5, 6.5]
//! probabilities = [0.9, 0.9]
//! ```
//!
//! Column order per command:
//!
//! | command | columns |
//! |---------|---------|
//! | `solve-tv` | `t, x, phi` |
//! | `solve-stationary` | `x, cdf, pdf` |
//! | `simulate` | `x, empirical, n, seed` |
//! | `optimize` | `plan, start, end, rate` |

pub mod figures;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{AoiError, Result};
use crate::model::config::{RateSpec, ServiceSpec};
use crate::model::{ModelSpec, SystemConfig};
use crate::optimizer::{
    benchmark_constant_rate, log_grid, optimize_rates, ConstraintSchedule, OptimizerSettings,
};
use crate::simulator::{empirical_cdf, SimRequest};
use crate::stationary::{aoi_cdf_stationary, aoi_pdf_stationary, InversionSettings, StationaryModel};
use crate::tv_solver::{SolverSettings, TvSolver};

pub use figures::FigureId;

pub const DEFAULT_REPLICATIONS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "aoi", version, about = "Age of Information distributions for M_t/G/1/1 queues with probabilistic preemption")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Time-varying solver grid intervals over the horizon.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Successive-approximation tolerance.
    #[arg(long)]
    pub etol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Φ(t, x) under a time-varying rate.
    SolveTv(CommonArgs),
    /// Steady-state CDF (and PDF) for a constant rate.
    SolveStationary(CommonArgs),
    /// Empirical CDF from the discrete-event simulator.
    Simulate(CommonArgs),
    /// Piecewise-constant rate plan under AoI constraints.
    Optimize(CommonArgs),
    /// Built-in parameter sets with analytic and simulated columns.
    ReproduceFigure {
        #[arg(long, value_enum)]
        figure: FigureId,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::SolveTv(c)
            | Command::SolveStationary(c)
            | Command::Simulate(c)
            | Command::Optimize(c) => c,
            Command::ReproduceFigure { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub theta: f64,
    pub rate: Option<RateSpec>,
    pub service: Option<ServiceSpec>,
    pub tv: Option<TvSection>,
    pub stationary: Option<StationarySection>,
    pub simulate: Option<SimulateSection>,
    pub schedule: Option<ConstraintSchedule>,
    pub optimizer: Option<OptimizerSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSection {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub horizon: Option<f64>,
    pub grid_n: Option<usize>,
    pub etol: Option<f64>,
    pub ite_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    pub xs: Vec<f64>,
    #[serde(default)]
    pub pdf: bool,
    pub method: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub t: f64,
    pub xs: Vec<f64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub rate_min: Option<f64>,
    pub rate_max: Option<f64>,
    pub rate_count: Option<usize>,
    pub epsilon: Option<f64>,
    pub ite_max: Option<usize>,
    pub eval_spacing: Option<f64>,
    pub solver_step: Option<f64>,
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AoiError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AoiError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn model(&self) -> Result<SystemConfig> {
        let (Some(rate), Some(service)) = (&self.rate, &self.service) else {
            return Err(AoiError::Config("experiment needs [rate] and [service]".into()));
        };
        ModelSpec {
            rate: rate.clone(),
            service: service.clone(),
            theta: self.theta,
        }
        .build()
    }

    fn section<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
        opt.as_ref()
            .ok_or_else(|| AoiError::Config(format!("experiment needs a [{name}] section")))
    }
}

/// One output value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// 16 significant digits, round-trip exact.
pub fn format_number(v: f64) -> String {
    format!("{v:.15e}")
}

/// Rows under a fixed header plus `key = value` summary entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Summary lines start with `#`, then the header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k}={}\n", v.csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    m.insert(c.clone(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.json());
        }
        json!({ "columns": self.columns, "rows": rows, "summary": summary })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json value");
                s.push('\n');
                s
            }
        }
    }
}

/// Solver overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOverrides {
    pub grid_n: Option<usize>,
    pub etol: Option<f64>,
    pub ite_max: Option<usize>,
}

impl SolverOverrides {
    pub fn settings(&self, config: &SystemConfig, horizon: f64) -> Result<SolverSettings> {
        let mut s = SolverSettings::for_config(config, horizon)?;
        if let Some(n) = self.grid_n {
            s.grid_n = n;
        }
        if let Some(e) = self.etol {
            s.etol = e;
        }
        if let Some(m) = self.ite_max {
            s.ite_max = m;
        }
        s.validate()?;
        Ok(s)
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentFile> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| AoiError::Config("--config is required for this command".into()))?;
    ExperimentFile::load(path)
}

pub fn solve_tv(file: &ExperimentFile, common: &CommonArgs) -> Result<Table> {
    let cfg = file.model()?;
    let sec = ExperimentFile::section(&file.tv, "tv")?;
    if sec.times.is_empty() || sec.xs.is_empty() {
        return Err(AoiError::Config("[tv] needs nonempty times and xs".into()));
    }
    let t_max = sec.times.iter().copied().fold(0.0, f64::max);
    let horizon = sec.horizon.unwrap_or(t_max).max(t_max);
    if !(horizon > 0.0) {
        return Err(AoiError::Config("[tv] horizon must be positive".into()));
    }
    let overrides = SolverOverrides {
        grid_n: common.grid_n.or(sec.grid_n),
        etol: common.etol.or(sec.etol),
        ite_max: sec.ite_max,
    };
    let solver = TvSolver::new(cfg, overrides.settings(&file.model()?, horizon)?)?;
    let mut table = Table::new(&["t", "x", "phi"]);
    for &t in &sec.times {
        let phis = solver.cdf_many(t, &sec.xs)?;
        for (&x, phi) in sec.xs.iter().zip(phis) {
            table.push(vec![t.into(), x.into(), phi.into()]);
        }
    }
    table.note("idle_iterations", Cell::Int(solver.idle().iterations() as i64));
    table.note("idle_residual", solver.idle().residual());
    Ok(table)
}

pub fn inversion_from(method: Option<&str>) -> Result<InversionSettings> {
    match method.unwrap_or("euler") {
        "euler" => Ok(InversionSettings::euler()),
        "talbot" => Ok(InversionSettings::talbot()),
        other => Err(AoiError::Config(format!("unknown inversion method `{other}`"))),
    }
}

pub fn solve_stationary(file: &ExperimentFile) -> Result<Table> {
    let cfg = file.model()?;
    let sec = ExperimentFile::section(&file.stationary, "stationary")?;
    let lambda = cfg
        .rate
        .is_constant()
        .ok_or_else(|| AoiError::Config("steady state needs a constant rate".into()))?;
    let model = StationaryModel::new(lambda, cfg.service, cfg.theta)?;
    let inv = inversion_from(sec.method.as_deref())?;
    let mut table = Table::new(&["x", "cdf", "pdf"]);
    for &x in &sec.xs {
        let cdf = aoi_cdf_stationary(&model, x, &inv)?;
        let pdf = if sec.pdf {
            Some(aoi_pdf_stationary(&model, x, &inv)?)
        } else {
            None
        };
        table.push(vec![x.into(), cdf.into(), pdf.into()]);
    }
    Ok(table)
}

pub fn simulate(file: &ExperimentFile, common: &CommonArgs) -> Result<Table> {
    let cfg = file.model()?;
    let sec = ExperimentFile::section(&file.simulate, "simulate")?;
    let reps = common.replications.or(sec.replications).unwrap_or(DEFAULT_REPLICATIONS);
    let seed = common.seed.or(sec.seed).unwrap_or(DEFAULT_SEED);
    let req = SimRequest::new(cfg, sec.t, reps, seed)?;
    let cdf = empirical_cdf(&req, &sec.xs)?;
    let mut table = Table::new(&["x", "empirical", "n", "seed"]);
    for (&x, p) in sec.xs.iter().zip(cdf) {
        table.push(vec![x.into(), p.into(), Cell::Int(reps as i64), Cell::Int(seed as i64)]);
    }
    table.note("t", sec.t);
    Ok(table)
}

pub fn optimizer_settings(sec: Option<&OptimizerSection>, etol: Option<f64>) -> Result<OptimizerSettings> {
    let d = OptimizerSettings::default();
    let sec = sec.cloned().unwrap_or_default();
    let grid = match (sec.rate_min, sec.rate_max, sec.rate_count) {
        (None, None, None) => d.rate_grid.clone(),
        (lo, hi, n) => log_grid(lo.unwrap_or(0.05), hi.unwrap_or(20.0), n.unwrap_or(60)),
    };
    let s = OptimizerSettings {
        rate_grid: grid,
        epsilon: sec.epsilon.unwrap_or(d.epsilon),
        ite_max: sec.ite_max.unwrap_or(d.ite_max),
        eval_spacing: sec.eval_spacing.unwrap_or(d.eval_spacing),
        solver_step: sec.solver_step,
        solver_etol: etol.unwrap_or(d.solver_etol),
        ..d
    };
    s.validate()?;
    Ok(s)
}

pub fn optimize(file: &ExperimentFile, common: &CommonArgs) -> Result<Table> {
    let service = ExperimentFile::section(&file.service, "service")?.build()?;
    let schedule = ExperimentFile::section(&file.schedule, "schedule")?;
    schedule.validate()?;
    let settings = optimizer_settings(file.optimizer.as_ref(), common.etol)?;
    let heuristic = optimize_rates(&service, schedule, &settings)?.into_result()?;
    let bench = benchmark_constant_rate(&service, schedule, &settings)?.into_result()?;
    let mut table = Table::new(&["plan", "start", "end", "rate"]);
    for (name, plan) in [("heuristic", &heuristic.plan), ("benchmark", &bench.plan)] {
        for (a, b, r) in plan.rows() {
            table.push(vec![name.into(), a.into(), b.into(), r.into()]);
        }
    }
    table.note("theta", heuristic.theta);
    table.note("heuristic_cost", heuristic.plan.cost());
    table.note("benchmark_cost", bench.plan.cost());
    table.note("heuristic_iterations", Cell::Int(heuristic.iterations as i64));
    table.note("benchmark_iterations", Cell::Int(bench.iterations as i64));
    Ok(table)
}

/// Runs one command and returns its table.
pub fn run(command: &Command) -> Result<Table> {
    let common = command.common();
    match command {
        Command::SolveTv(c) => solve_tv(&load_config(c)?, c),
        Command::SolveStationary(c) => solve_stationary(&load_config(c)?),
        Command::Simulate(c) => simulate(&load_config(c)?, c),
        Command::Optimize(c) => optimize(&load_config(c)?, c),
        Command::ReproduceFigure { figure, .. } => figures::reproduce(
            *figure,
            &figures::PresetOptions {
                replications: common.replications.unwrap_or(DEFAULT_REPLICATIONS),
                seed: common.seed.unwrap_or(DEFAULT_SEED),
                solver: SolverOverrides {
                    grid_n: common.grid_n,
                    etol: common.etol,
                    ite_max: None,
                },
            },
        ),
    }
}

/// 0 success, 2 configuration, 3 convergence or inversion, 4 infeasible.
pub fn exit_code(err: &AoiError) -> i32 {
    match err {
        AoiError::Convergence { .. } | AoiError::Inversion(_) => 3,
        AoiError::Infeasible(_) => 4,
        _ => 2,
    }
}

/// Machine-readable error record.
pub fn error_record(err: &AoiError) -> Value {
    let mut v = json!({ "error": err.kind(), "message": err.to_string(), "exit_code": exit_code(err) });
    if let AoiError::Convergence {
        iterations,
        residual,
    } = err
    {
        v["iterations"] = json!(iterations);
        v["residual"] = json!(residual);
    }
    v
}

fn write_output(table: &Table, common: &CommonArgs) -> Result<()> {
    let text = table.render(common.format);
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs the parsed command line; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let outcome = run(&cli.command).and_then(|t| write_output(&t, cli.command.common()));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_render() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1.into(), Cell::Missing]);
        t.push(vec!["x,y".into(), Cell::Int(3)]);
        t.note("cost", 2.5);
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "# cost=2.500000000000000e0\na,b\n1.000000000000000e-1,\n\"x,y\",3\n"
        );
        let j = t.to_json();
        assert_eq!(j["rows"][0]["a"], json!(0.1));
        assert_eq!(j["rows"][0]["b"], Value::Null);
        assert_eq!(j["summary"]["cost"], json!(2.5));
        assert_eq!(format_number(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&AoiError::Config("x".into())), 2);
        assert_eq!(exit_code(&AoiError::Inversion("x".into())), 3);
        assert_eq!(
            exit_code(&AoiError::Convergence {
                iterations: 3,
                residual: 1.0
            }),
            3
        );
        assert_eq!(exit_code(&AoiError::Infeasible("x".into())), 4);
        let rec = error_record(&AoiError::Convergence {
            iterations: 3,
            residual: 0.5,
        });
        assert_eq!(rec["error"], "convergence");
        assert_eq!(rec["iterations"], 3);
    }

    #[test]
    fn experiment_sections() {
        let f = ExperimentFile::from_toml(
            r#"
            theta = 0.0
            [rate]
            kind = "constant"
            params = [0.8]
            [service]
            kind = "exponential"
            params = [1.2]
            [stationary]
            xs = [1.0]
        "#,
        )
        .unwrap();
        let t = solve_stationary(&f).unwrap();
        match t.rows[0][1] {
            Cell::Num(v) => assert!((v - 0.188_024_569_616_407).abs() < 1e-10),
            _ => panic!(),
        }
        assert!(matches!(
            solve_tv(&f, &CommonArgs::default()),
            Err(AoiError::Config(_))
        ));
        assert!(ExperimentFile::from_toml("bogus = 1").is_err());
    }
}
