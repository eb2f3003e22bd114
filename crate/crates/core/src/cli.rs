//! `mginf` command line: evaluates PME laws and transforms, runs the forward
//! and inverse busy-period maps and the simulator, and writes CSV or JSON
//! tables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::busy_period::{
    busy_tail, busy_tail_lt, classify_equilibrium_moment, recover_service_from_pme_busy, EquilibriumSource, QueueParams,
};
use crate::dist_core::{pme_moment, pme_pdf, pme_tail, PmeParams, ServiceModel};
use crate::error::Error;
use crate::ext_real::ExtReal;
use crate::laplace::{pme_lt, pme_tail_lt, pme_tail_lt_deriv, pme_tail_lt_deriv_at_zero, InversionConfig};
use crate::simulator::{empirical_tail, simulate, SimConfig, StopRule};

#[derive(Debug, Parser)]
#[command(name = "mginf", version, about = "PME laws and M|G|inf busy-period transforms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PME density, tail and moments.
    Pme(PmeArgs),
    /// PME transforms, tail-transform derivatives and their limits at zero.
    Lt(LtArgs),
    /// Busy-period tail transform and inverted tail for a given service law.
    Busy(BusyArgs),
    /// Service law recovered from a PME(r) busy period.
    Recover(RecoverArgs),
    /// Discrete-event simulation of busy and idle periods.
    Sim(SimArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid as start:stop:count.
    #[arg(long)]
    pub grid: Option<String>,
    /// Space the grid logarithmically.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InversionArgs {
    /// Terms of the alternating series before Euler averaging.
    #[arg(long, default_value_t = 40)]
    pub series: usize,
    /// Terms used for Euler averaging.
    #[arg(long, default_value_t = 14)]
    pub euler: usize,
    /// Target decimal digits of the inversion.
    #[arg(long, default_value_t = 10)]
    pub digits: u32,
}

#[derive(Debug, Args)]
pub struct PmeArgs {
    #[arg(long)]
    pub r: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct LtArgs {
    #[arg(long)]
    pub r: f64,
    /// Highest derivative order of the tail transform.
    #[arg(long, default_value_t = 3)]
    pub max_order: u32,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct BusyArgs {
    #[arg(long)]
    pub lambda: f64,
    /// Service law: exp:RATE, det:D, pareto:R or pme:R.
    #[arg(long)]
    pub service: String,
    /// Transform grid as start:stop:count (log spaced).
    #[arg(long)]
    pub s_grid: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Highest equilibrium-moment order to classify.
    #[arg(long, default_value_t = 4)]
    pub max_order: u32,
    /// First truncation time of the divergence diagnostic.
    #[arg(long, default_value_t = 1250.0)]
    pub truncation: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub service: String,
    /// Number of complete busy periods.
    #[arg(long = "n", default_value_t = 100_000)]
    pub count: usize,
    /// Stop at this simulated time instead of after a fixed count.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also invert the analytic busy tail and report the sup distance.
    #[arg(long)]
    pub compare: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
}

/// Failure of a run, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_domain() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn domain(msg: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: msg.into(),
    }
}

/// Grid of `count` points from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn parse(text: &str, log: bool) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(domain(format!("grid must look like start:stop:count (got {text:?})")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| domain(format!("bad grid bound {s:?}")))
        };
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| domain(format!("bad grid count {:?}", parts[2])))?;
        let spec = GridSpec { start, stop, count, log };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(domain("grid bounds must be finite"));
        }
        if self.count == 0 {
            return Err(domain("grid count must be at least 1"));
        }
        if self.count > 1 && self.stop <= self.start {
            return Err(domain("grid stop must exceed start"));
        }
        if self.log && self.start <= 0.0 {
            return Err(domain("log grid needs a positive start"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                if i + 1 == self.count {
                    self.stop
                } else if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

const DEFAULT_TIME_GRID: GridSpec = GridSpec {
    start: 1e-3,
    stop: 50.0,
    count: 400,
    log: true,
};

fn grid_or(args: &GridArgs, default: GridSpec) -> Result<Vec<f64>, CliError> {
    match &args.grid {
        Some(text) => Ok(GridSpec::parse(text, args.log)?.points()),
        None => Ok(default.points()),
    }
}

fn positive_grid(grid: &[f64], what: &str) -> Result<(), CliError> {
    if grid.iter().any(|&t| t <= 0.0) {
        return Err(domain(format!("{what} grid must be positive")));
    }
    Ok(())
}

fn inversion(args: &InversionArgs) -> Result<InversionConfig, CliError> {
    Ok(InversionConfig::new(args.series, args.euler, args.digits)?)
}

/// Table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(ExtReal),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v.into())
    }
}

impl From<ExtReal> for Cell {
    fn from(v: ExtReal) -> Self {
        Cell::Num(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_table_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(ExtReal::Finite(v)) if v.is_nan() => Value::String("nan".into()),
            Cell::Num(v) => serde_json::to_value(v).expect("finite number"),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// Named block of rows. Column headers carry their unit.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[(&str, &'static str)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|(c, u)| (c.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn column(&self, j: usize) -> Value {
        Value::Array(self.rows.iter().map(|r| r[j].json()).collect())
    }

    fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for ((name, _), c) in self.columns.iter().zip(r) {
                        m.insert(name.clone(), c.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// Output of one subcommand. In JSON the columns of `main` become top-level
/// arrays (the first is keyed "grid"), `summary` becomes an object and every
/// other block a list of records.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub summary: Vec<(String, Cell)>,
    pub main: Table,
    pub blocks: Vec<Table>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut sections = Vec::new();
        if !self.summary.is_empty() {
            let mut t = Table::new("summary", &[("key", "label"), ("value", "mixed")]);
            for (k, v) in &self.summary {
                t.push(vec![Cell::Text(k.clone()), v.clone()]);
            }
            sections.push(t);
        }
        sections.push(self.main.clone());
        sections.extend(self.blocks.iter().cloned());
        for (i, t) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# {}", t.name);
            let header: Vec<String> = t.columns.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
            let _ = writeln!(out, "{}", header.join(","));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.command.into()));
        if !self.summary.is_empty() {
            let mut s = Map::new();
            for (k, v) in &self.summary {
                s.insert(k.clone(), v.json());
            }
            top.insert("summary".into(), Value::Object(s));
        }
        for (j, (name, _)) in self.main.columns.iter().enumerate() {
            let key = if j == 0 { "grid".to_string() } else { name.clone() };
            top.insert(key, self.main.column(j));
        }
        for b in &self.blocks {
            top.insert(b.name.clone(), b.records());
        }
        Value::Object(top)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

fn parse_service(text: &str) -> Result<ServiceModel, CliError> {
    Ok(text.parse::<ServiceModel>()?)
}

pub fn cmd_pme(args: &PmeArgs) -> Result<Report, CliError> {
    let p = PmeParams::new(args.r)?;
    let grid = grid_or(&args.grid, DEFAULT_TIME_GRID)?;
    if grid.iter().any(|&t| t < 0.0) {
        return Err(domain("time grid must be non-negative"));
    }
    let mut main = Table::new("density", &[("t", "time"), ("pdf", "1/time"), ("tail", "dimensionless")]);
    for &t in &grid {
        main.push(vec![t.into(), pme_pdf(&p, t)?.into(), pme_tail(&p, t)?.into()]);
    }
    let mut moments = Table::new("moments", &[("n", "order"), ("value", "time^n")]);
    let top = args.r.ceil() as u32 + 2;
    for n in 1..=top {
        moments.push(vec![Cell::Int(n as i64), pme_moment(&p, n)?.into()]);
    }
    Ok(Report {
        command: "pme",
        summary: vec![("r".into(), args.r.into()), ("x_m".into(), p.x_m().into())],
        main,
        blocks: vec![moments],
    })
}

pub fn cmd_lt(args: &LtArgs) -> Result<Report, CliError> {
    PmeParams::new(args.r)?;
    let default = GridSpec {
        start: 1e-3,
        stop: 1e3,
        count: 30,
        log: true,
    };
    let grid = grid_or(&args.grid, default)?;
    if grid.iter().any(|&s| s < 0.0) {
        return Err(domain("transform grid must be non-negative"));
    }
    let mut cols: Vec<(String, String)> = vec![
        ("s".into(), "1/time".into()),
        ("g_hat".into(), "dimensionless".into()),
        ("h_hat".into(), "time".into()),
    ];
    for n in 1..=args.max_order {
        cols.push((format!("h_hat_d{n}"), format!("time^{}", n + 1)));
    }
    let mut main = Table {
        name: "transforms".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for &s in &grid {
        let mut row: Vec<Cell> = vec![
            s.into(),
            pme_lt(args.r, s)?.value.into(),
            pme_tail_lt(args.r, s)?.value.into(),
        ];
        for n in 1..=args.max_order {
            let v = if s == 0.0 {
                pme_tail_lt_deriv_at_zero(args.r, n)?
            } else {
                pme_tail_lt_deriv(args.r, s, n)?
            };
            row.push(v.value.into());
        }
        main.push(row);
    }
    let mut limits = Table::new("limits_at_zero", &[("n", "order"), ("value", "time^(n+1)")]);
    for n in 0..=args.max_order {
        limits.push(vec![
            Cell::Int(n as i64),
            pme_tail_lt_deriv_at_zero(args.r, n)?.value.into(),
        ]);
    }
    Ok(Report {
        command: "lt",
        summary: vec![("r".into(), args.r.into())],
        main,
        blocks: vec![limits],
    })
}

pub fn cmd_busy(args: &BusyArgs) -> Result<Report, CliError> {
    let q = QueueParams::new(args.lambda, parse_service(&args.service)?)?;
    let cfg = inversion(&args.inversion)?;
    let grid = grid_or(&args.grid, DEFAULT_TIME_GRID)?;
    positive_grid(&grid, "time")?;
    let s_grid = match &args.s_grid {
        Some(text) => GridSpec::parse(text, true)?.points(),
        None => GridSpec {
            start: 1e-3,
            stop: 1e3,
            count: 30,
            log: true,
        }
        .points(),
    };

    let u0 = busy_tail_lt(&q, 0.0)?;
    let reference = q.mean_busy_period();
    let mut transform = Table::new("transform", &[("s", "1/time"), ("u", "time")]);
    for &s in &s_grid {
        transform.push(vec![s.into(), busy_tail_lt(&q, s)?.into()]);
    }
    let tail = busy_tail(&q, &grid, &cfg)?;
    let mut main = Table::new("busy_tail", &[("t", "time"), ("tail", "dimensionless")]);
    for (&t, &v) in tail.curve.grid().iter().zip(tail.curve.values()) {
        main.push(vec![t.into(), v.into()]);
    }
    Ok(Report {
        command: "busy",
        summary: vec![
            ("lambda".into(), q.lambda().into()),
            ("service".into(), Cell::Text(q.service().label())),
            ("rho".into(), q.rho().into()),
            ("u0".into(), u0.into()),
            ("reference_mean".into(), reference.into()),
            ("excursion".into(), tail.excursion.into()),
        ],
        main,
        blocks: vec![transform],
    })
}

pub fn cmd_recover(args: &RecoverArgs) -> Result<Report, CliError> {
    PmeParams::new(args.r)?;
    if !(args.truncation > 0.0 && args.truncation.is_finite()) {
        return Err(domain("truncation time must be positive"));
    }
    let cfg = inversion(&args.inversion)?;
    let default = GridSpec {
        start: 1e-3,
        stop: 1e4,
        count: 600,
        log: true,
    };
    let grid = grid_or(&args.grid, default)?;
    positive_grid(&grid, "time")?;
    let end = grid[grid.len() - 1];
    if 8.0 * args.truncation > end {
        return Err(domain(format!(
            "eight times the truncation time ({}) must not exceed the grid end {end}",
            8.0 * args.truncation
        )));
    }
    let rec = recover_service_from_pme_busy(args.r, args.lambda, &grid, &cfg)?;

    let mut main = Table::new(
        "service",
        &[("t", "time"), ("tail", "dimensionless"), ("density", "1/time"), ("cdf", "dimensionless")],
    );
    for (i, (&t, &v)) in rec.tail.grid().iter().zip(rec.tail.values()).enumerate() {
        main.push(vec![t.into(), v.into(), rec.density[i].into(), rec.cdf[i].into()]);
    }
    let mut moments = Table::new(
        "equilibrium_moments",
        &[
            ("n", "order"),
            ("class", "label"),
            ("m_T", "time^n"),
            ("m_2T", "time^n"),
            ("m_4T", "time^n"),
            ("m_8T", "time^n"),
        ],
    );
    for n in 0..=args.max_order {
        let (class, v) = classify_equilibrium_moment(EquilibriumSource::Curve(&rec.tail), n, args.truncation)?;
        moments.push(vec![
            Cell::Int(n as i64),
            Cell::Text(class.as_str().into()),
            v[0].into(),
            v[1].into(),
            v[2].into(),
            v[3].into(),
        ]);
    }
    Ok(Report {
        command: "recover",
        summary: vec![
            ("r".into(), args.r.into()),
            ("lambda".into(), args.lambda.into()),
            ("implied_alpha".into(), rec.implied_mean.into()),
            ("integrated_alpha".into(), rec.integrated_mean.into()),
            ("excursion".into(), rec.excursion.into()),
        ],
        main,
        blocks: vec![moments],
    })
}

pub fn cmd_sim(args: &SimArgs) -> Result<Report, CliError> {
    let q = QueueParams::new(args.lambda, parse_service(&args.service)?)?;
    let stop = match args.horizon {
        Some(h) => StopRule::Horizon(h),
        None => StopRule::BusyPeriods(args.count),
    };
    let cfg = SimConfig::new(q.clone(), stop, args.seed)?;
    let grid = grid_or(&args.grid, DEFAULT_TIME_GRID)?;
    positive_grid(&grid, "time")?;
    let inv = inversion(&args.inversion)?;

    let res = simulate(&cfg);
    let empirical = empirical_tail(&res.busy_lengths, &grid)?;
    let analytic = if args.compare { Some(busy_tail(&q, &grid, &inv)?) } else { None };

    let mut summary: Vec<(String, Cell)> = vec![
        ("lambda".into(), q.lambda().into()),
        ("service".into(), Cell::Text(q.service().label())),
        ("seed".into(), Cell::Int(args.seed as i64)),
        ("busy_periods".into(), Cell::Int(res.busy_lengths.len() as i64)),
        ("customers".into(), Cell::Int(res.customers as i64)),
        ("rng_draws".into(), Cell::Int(res.rng_draws as i64)),
        ("mean_busy".into(), res.mean_busy().into()),
        ("mean_busy_std_error".into(), res.busy_std_error().into()),
        ("reference_mean_busy".into(), q.mean_busy_period().into()),
        ("empty_fraction".into(), res.empty_fraction().into()),
        ("reference_empty_fraction".into(), (-q.rho()).exp().into()),
    ];
    let mut main = match &analytic {
        Some(_) => Table::new(
            "busy_tail",
            &[("t", "time"), ("empirical", "dimensionless"), ("analytic", "dimensionless")],
        ),
        None => Table::new("busy_tail", &[("t", "time"), ("empirical", "dimensionless")]),
    };
    for (i, (&t, &v)) in empirical.grid().iter().zip(empirical.values()).enumerate() {
        let mut row: Vec<Cell> = vec![t.into(), v.into()];
        if let Some(a) = &analytic {
            row.push(a.curve.values()[i].into());
        }
        main.push(row);
    }
    if let Some(a) = &analytic {
        summary.push(("sup_distance".into(), empirical.sup_distance(&a.curve)?.into()));
    }
    Ok(Report {
        command: "sim",
        summary,
        main,
        blocks: Vec::new(),
    })
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Pme(a) => cmd_pme(a),
        Command::Lt(a) => cmd_lt(a),
        Command::Busy(a) => cmd_busy(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Sim(a) => cmd_sim(a),
    }
}

/// Runs a parsed command line and writes the report.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = execute(cli)?.render(cli.format);
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Single-line diagnostic, coloured unless `NO_COLOR` is set or stderr is not a terminal.
pub fn diagnostic(message: &str) -> String {
    use std::io::IsTerminal;
    let line = message.replace('\n', " ");
    let colour = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal();
    if colour {
        format!("\x1b[31merror:\x1b[0m {line}")
    } else {
        format!("error: {line}")
    }
}
