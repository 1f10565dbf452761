//! Command-line front end of the `heis` binary.
//!
//! Subcommands `constants`, `verify`, `optimize`, `heat` and `selftest` each
//! produce one table, printed as CSV or JSON to standard output or written
//! atomically to `--output`. Floats carry 17 significant digits so every
//! value survives a round trip.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage errors, 3 when a
//! parameter lies outside its admissible window and 4 on I/O errors.
//!
//! A `--config` file of `key = value` lines presets any of `n`, `s`, `beta`,
//! `q`, `sigma`, `p`, `tol`, `seed`, `format`, `half_width_xi`,
//! `half_width_tau`, `points_xi` and `points_tau`. Flags on the command line
//! win over the file. `HEIS_THREADS` caps the worker pool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::calculus::{lp_norm, GridFunction, GridSpec, Measure};
use crate::constants::{gross_gamma, gross_gamma_limit, hls_constant, sobolev_constant_int, us_bound, vs_bound, ConstantsTable};
use crate::heat::{check_decay_bound, decay_bound, heat_grid, heat_solve_with, initial_norms, HeatMethod};
use crate::inequalities::{
    ball_battery, ball_grid, run_suite, standard_battery, CheckOptions, InequalityReport, Suite, Variant, Verdict,
};
use crate::optimizer::{minimize_nash_quotient, minimize_sobolev_quotient, OptimizationResult, OptimizerConfig};
use crate::spectral::{analyze, synthesize, AnalysisConfig, Multiplier};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARAMETER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Failure of a CLI invocation, mapped onto an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parameter: {0}")]
    Parameter(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Io(io) => CliError::Io(io.to_string()),
            crate::Error::Format(m) => CliError::Usage(m),
            other => CliError::Parameter(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Sobolev,
    Logsobolev,
    Gn,
    Hardy,
    Nash,
    Gross,
    Poincare,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Sobolev => Suite::Sobolev,
            SuiteArg::Logsobolev => Suite::LogSobolev,
            SuiteArg::Gn => Suite::Gn,
            SuiteArg::Hardy => Suite::Hardy,
            SuiteArg::Nash => Suite::Nash,
            SuiteArg::Gross => Suite::Gross,
            SuiteArg::Poincare => Suite::Poincare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Sobolev,
    Nash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Horizontal,
    Modified,
    Fracpower,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Horizontal => Variant::Horizontal,
            VariantArg::Modified => Variant::Modified,
            VariantArg::Fracpower => Variant::FracPower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Spectral,
    Euler,
}

#[derive(Debug, Parser)]
#[command(name = "heis", version, about = "Constants and numerical checks of functional inequalities on the Heisenberg group")]
struct Cli {
    /// File of `key = value` defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct ParamArgs {
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Relative slack of the pass/fail decision.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
struct GridArgs {
    #[arg(long, global = true)]
    half_width_xi: Option<f64>,
    #[arg(long, global = true)]
    half_width_tau: Option<f64>,
    #[arg(long, global = true)]
    points_xi: Option<usize>,
    #[arg(long, global = true)]
    points_tau: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Print the table of explicit constants.
    Constants,
    /// Check the inequalities on the built-in battery of test functions.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
    },
    /// Minimize a Rayleigh quotient and report the implied constant.
    Optimize {
        #[arg(long, value_enum, default_value = "sobolev")]
        target: Target,
        /// Defaults to `horizontal` at s = 1 and `modified` otherwise.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Random smooth seeds on top of the trial-family start.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Convergence trace CSV; defaults to `<output>.trace.csv` when
        /// `--output` is set.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve the heat equation from a Gaussian and check the decay bound.
    Heat {
        #[arg(long, default_value_t = 2.0)]
        t_final: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, value_enum, default_value = "spectral")]
        method: MethodArg,
        /// Euler step; at most the stability limit.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run fast consistency checks and print one PASS/FAIL line each.
    Selftest,
}

/// Parameters after merging the config file with command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    pub n: Option<u32>,
    pub s: Option<f64>,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub tol: Option<f64>,
}

/// Overrides of the default grid of a subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridOverrides {
    pub half_width_xi: Option<f64>,
    pub half_width_tau: Option<f64>,
    pub points_xi: Option<usize>,
    pub points_tau: Option<usize>,
}

impl GridOverrides {
    fn apply(&self, base: GridSpec) -> CliResult<GridSpec> {
        Ok(GridSpec::new(
            base.n,
            self.half_width_xi.unwrap_or(base.half_width_xi),
            self.half_width_tau.unwrap_or(base.half_width_tau),
            self.points_xi.unwrap_or(base.points_xi),
            self.points_tau.unwrap_or(base.points_tau),
        )?)
    }
}

/// Fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: Command,
    pub params: ParamSet,
    pub grid: GridOverrides,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{v}`")))
}

impl RunConfig {
    fn from_cli(cli: Cli) -> CliResult<Self> {
        let mut params = ParamSet::default();
        let mut grid = GridOverrides::default();
        let mut format = None;
        let mut seed = None;
        if let Some(path) = &cli.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            for (k, v) in parse_config(&text)? {
                match k.as_str() {
                    "n" => params.n = Some(parse_value(&k, &v)?),
                    "s" => params.s = Some(parse_value(&k, &v)?),
                    "beta" => params.beta = Some(parse_value(&k, &v)?),
                    "q" => params.q = Some(parse_value(&k, &v)?),
                    "sigma" => params.sigma = Some(parse_value(&k, &v)?),
                    "p" => params.p = Some(parse_value(&k, &v)?),
                    "tol" => params.tol = Some(parse_value(&k, &v)?),
                    "seed" => seed = Some(parse_value(&k, &v)?),
                    "format" => {
                        format = Some(Format::from_str(&v, true).map_err(|_| CliError::Usage(format!("unknown format `{v}`")))?)
                    }
                    "half_width_xi" => grid.half_width_xi = Some(parse_value(&k, &v)?),
                    "half_width_tau" => grid.half_width_tau = Some(parse_value(&k, &v)?),
                    "points_xi" => grid.points_xi = Some(parse_value(&k, &v)?),
                    "points_tau" => grid.points_tau = Some(parse_value(&k, &v)?),
                    _ => return Err(CliError::Usage(format!("unknown config key `{k}`"))),
                }
            }
        }
        let a = cli.params;
        params.n = a.n.or(params.n);
        params.s = a.s.or(params.s);
        params.beta = a.beta.or(params.beta);
        params.q = a.q.or(params.q);
        params.sigma = a.sigma.or(params.sigma);
        params.p = a.p.or(params.p);
        params.tol = a.tol.or(params.tol);
        let g = cli.grid;
        grid.half_width_xi = g.half_width_xi.or(grid.half_width_xi);
        grid.half_width_tau = g.half_width_tau.or(grid.half_width_tau);
        grid.points_xi = g.points_xi.or(grid.points_xi);
        grid.points_tau = g.points_tau.or(grid.points_tau);
        Ok(Self {
            command: cli.command,
            params,
            grid,
            format: cli.format.or(format).unwrap_or_default(),
            output: cli.output,
            seed: cli.seed.or(seed).unwrap_or(0),
        })
    }

    /// Reject parameters outside the windows shared by all subcommands.
    fn validate(&self) -> CliResult<()> {
        let p = &self.params;
        let bad = |m: String| Err(CliError::Parameter(m));
        if let Some(n) = p.n {
            if n == 0 {
                return bad("group index n must be at least 1".into());
            }
        }
        if let Some(s) = p.s {
            if !(s > 0.0 && s <= 1.0) {
                return bad(format!("order s must lie in (0, 1], got {s}"));
            }
        }
        if let Some(b) = p.beta {
            let top = 2.0 * p.s.unwrap_or(1.0);
            if !(b >= 0.0 && b <= top) {
                return bad(format!("beta must lie in [0, {top}], got {b}"));
            }
        }
        if let Some(q) = p.q {
            if !(q >= 1.0 && q.is_finite()) {
                return bad(format!("q must be a finite exponent ≥ 1, got {q}"));
            }
        }
        if let Some(sg) = p.sigma {
            if !(sg > 0.0 && sg.is_finite()) {
                return bad(format!("sigma must be positive, got {sg}"));
            }
        }
        if let Some(pp) = p.p {
            if !(1.0..=2.0).contains(&pp) {
                return bad(format!("p must lie in the tested range [1, 2], got {pp}"));
            }
        }
        if let Some(t) = p.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        Ok(())
    }

    fn check_options(&self) -> CheckOptions {
        let mut o = CheckOptions::default();
        if let Some(t) = self.params.tol {
            o.tol = t;
        }
        o
    }

    fn require_h1(&self, what: &str) -> CliResult<()> {
        match self.params.n {
            None | Some(1) => Ok(()),
            Some(n) => Err(CliError::Parameter(format!("{what} runs on H^1 only, got n={n}"))),
        }
    }
}

/// A rendered report: CSV columns plus an equivalent JSON document.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
}

impl Table {
    fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Csv => csv_bytes(&self.header, &self.rows),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::Io(e.to_string()))?;
                s.push('\n');
                Ok(s.into_bytes())
            }
        }
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Write `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Result of one subcommand before it is written out.
struct Outcome {
    table: Table,
    /// A check failed.
    failed: bool,
    /// Extra files, written next to the report.
    extra: Vec<(PathBuf, Vec<u8>)>,
    /// Human-readable summary for standard error.
    summary: Vec<String>,
}

fn constants_cmd(cfg: &RunConfig) -> CliResult<Outcome> {
    let p = &cfg.params;
    let t = ConstantsTable::new(p.n.unwrap_or(1), p.s.unwrap_or(1.0), p.beta, p.q)?;
    let fields = t.fields();
    let header = fields.iter().map(|(k, _)| k.to_string()).collect();
    let row = fields.iter().map(|(_, v)| v.map(fmt_f64).unwrap_or_default()).collect();
    let mut obj = Map::new();
    for (k, v) in &fields {
        obj.insert(k.to_string(), v.map(num).unwrap_or(Value::Null));
    }
    Ok(Outcome {
        table: Table { header, rows: vec![row], json: Value::Object(obj) },
        failed: false,
        extra: Vec::new(),
        summary: Vec::new(),
    })
}

fn matches(filter: Option<f64>, value: Option<f64>) -> bool {
    match (filter, value) {
        (Some(f), Some(v)) => (f - v).abs() <= 1e-12 * f.abs().max(1.0),
        _ => true,
    }
}

/// Keep reports compatible with every parameter fixed on the command line.
/// Reports that do not carry a given parameter are kept.
fn filter_reports(reports: Vec<InequalityReport>, p: &ParamSet) -> Vec<InequalityReport> {
    reports
        .into_iter()
        .filter(|r| {
            let q = &r.params;
            matches(p.s, q.s) && matches(p.beta, q.beta) && matches(p.q, q.q) && matches(p.sigma, q.sigma) && matches(p.p, q.p)
        })
        .collect()
}

/// Table of inequality reports in CSV and JSON form.
pub fn reports_table(reports: &[InequalityReport]) -> Table {
    Table {
        header: InequalityReport::csv_header().into_iter().map(String::from).collect(),
        rows: reports.iter().map(InequalityReport::csv_row).collect(),
        json: Value::Array(reports.iter().map(InequalityReport::to_json).collect()),
    }
}

fn verify_cmd(cfg: &RunConfig, suite: SuiteArg) -> CliResult<Outcome> {
    cfg.require_h1("verify")?;
    let spec = cfg.grid.apply(GridSpec::desk(1)?)?;
    let subjects = standard_battery(&spec)?;
    let balls = ball_battery(&ball_grid()?)?;
    let reports = run_suite(suite.into(), &subjects, &balls, &cfg.check_options())?;
    let reports = filter_reports(reports, &cfg.params);
    let failed: Vec<&InequalityReport> = reports.iter().filter(|r| r.verdict == Verdict::Fails).collect();
    let inconclusive = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let mut summary = vec![format!(
        "{} reports: {} hold, {} fail, {} inconclusive",
        reports.len(),
        reports.len() - failed.len() - inconclusive,
        failed.len(),
        inconclusive
    )];
    summary.extend(failed.iter().map(|r| format!("FAIL {} on {} (ratio {:.4})", r.name, r.subject, r.ratio)));
    Ok(Outcome { table: reports_table(&reports), failed: !failed.is_empty(), extra: Vec::new(), summary })
}

fn trace_csv(res: &OptimizationResult) -> CliResult<Vec<u8>> {
    let header = vec!["iteration".to_string(), "quotient".to_string()];
    let rows: Vec<Vec<String>> = res.trace.iter().enumerate().map(|(i, q)| vec![i.to_string(), fmt_f64(*q)]).collect();
    csv_bytes(&header, &rows)
}

fn optimize_cmd(
    cfg: &RunConfig,
    target: Target,
    variant: Option<VariantArg>,
    seeds: Option<usize>,
    iters: Option<usize>,
    trace: Option<&Path>,
) -> CliResult<Outcome> {
    cfg.require_h1("optimize")?;
    let base = OptimizerConfig::default();
    let s = if target == Target::Nash { 1.0 } else { cfg.params.s.unwrap_or(1.0) };
    let variant = match (target, variant) {
        (Target::Nash, _) => Variant::Horizontal,
        (_, Some(v)) => v.into(),
        (_, None) if s == 1.0 => Variant::Horizontal,
        _ => Variant::Modified,
    };
    let opt = OptimizerConfig {
        s,
        variant,
        grid: cfg.grid.apply(base.grid.clone())?,
        max_iters: iters.unwrap_or(base.max_iters),
        restart_count: seeds.unwrap_or(base.restart_count),
        seed: cfg.seed,
        tolerance: cfg.params.tol.unwrap_or(base.tolerance),
        ..base
    };
    let res = match target {
        Target::Sobolev => minimize_sobolev_quotient(&opt)?,
        Target::Nash => minimize_nash_quotient(&opt)?,
    };
    let target_name = match target {
        Target::Sobolev => "sobolev",
        Target::Nash => "nash",
    };
    // The paper constant must not be beaten by more than the stated grid slack.
    let violated = res.converged && res.best_quotient < (1.0 - 0.10) / res.reference_constant;
    let fields: Vec<(&str, String, Value)> = vec![
        ("target", target_name.into(), json!(target_name)),
        ("variant", variant.as_str().into(), json!(variant.as_str())),
        ("s", fmt_f64(s), num(s)),
        ("best_quotient", fmt_f64(res.best_quotient), num(res.best_quotient)),
        ("implied_constant", fmt_f64(res.implied_constant), num(res.implied_constant)),
        ("reference_constant", fmt_f64(res.reference_constant), num(res.reference_constant)),
        ("iterations", res.iterations.to_string(), json!(res.iterations)),
        ("converged", res.converged.to_string(), json!(res.converged)),
        ("gradient_check", fmt_f64(res.gradient_check), num(res.gradient_check)),
        ("start", res.start.clone(), json!(res.start)),
        ("seed", cfg.seed.to_string(), json!(cfg.seed)),
    ];
    let mut obj = Map::new();
    for (k, _, v) in &fields {
        obj.insert(k.to_string(), v.clone());
    }
    obj.insert(
        "trial_scan".into(),
        Value::Array(
            res.trial_scan
                .iter()
                .map(|r| json!({"eps": num(r.eps), "center": r.center, "quotient": num(r.quotient)}))
                .collect(),
        ),
    );
    obj.insert("trial_family".into(), json!("heuristic"));
    let trace_path = trace.map(Path::to_path_buf).or_else(|| {
        cfg.output.as_ref().map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".trace.csv");
            PathBuf::from(s)
        })
    });
    match &trace_path {
        Some(p) => {
            obj.insert("trace_file".into(), json!(p.display().to_string()));
        }
        None => {
            obj.insert("trace".into(), Value::Array(res.trace.iter().map(|q| num(*q)).collect()));
        }
    }
    let extra = match trace_path {
        Some(p) => vec![(p, trace_csv(&res)?)],
        None => Vec::new(),
    };
    let summary = vec![format!(
        "{target_name}: best quotient {:.6}, implied constant {:.6} (reference {:.6}), {} iterations, converged {}",
        res.best_quotient, res.implied_constant, res.reference_constant, res.iterations, res.converged
    )];
    Ok(Outcome {
        table: Table {
            header: vec!["field".into(), "value".into()],
            rows: fields.into_iter().map(|(k, s, _)| vec![k.to_string(), s]).collect(),
            json: Value::Object(obj),
        },
        failed: violated,
        extra,
        summary,
    })
}

/// Initial datum of the `heat` subcommand: `exp(−|ξ|²/2 − τ²/2)`.
pub fn heat_initial(spec: &GridSpec) -> GridFunction {
    GridFunction::from_real_fn(spec, |x, t| (-0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5 * t * t).exp())
}

fn heat_cmd(cfg: &RunConfig, t_final: f64, steps: usize, method: MethodArg, dt: Option<f64>) -> CliResult<Outcome> {
    cfg.require_h1("heat")?;
    let spec = cfg.grid.apply(heat_grid()?)?;
    let f0 = heat_initial(&spec);
    let method = match method {
        MethodArg::Spectral => HeatMethod::SpectralExp,
        MethodArg::Euler => HeatMethod::ExplicitEuler,
    };
    let traj = heat_solve_with(&f0, t_final, steps, method, dt)?;
    let norms = initial_norms(&f0)?;
    let mut report = check_decay_bound(&traj, norms)?;
    if let Some(t) = cfg.params.tol {
        report.tol = t;
        report.verdict = if report.ratio <= 1.0 + t { Verdict::Holds } else { Verdict::Fails };
        report.holds = report.verdict == Verdict::Holds;
    }
    let header: Vec<String> = crate::heat::HeatTrajectory::header().iter().map(|s| s.to_string()).collect();
    let rows_num = traj.rows();
    let rows = rows_num.iter().map(|r| r.iter().map(|v| fmt_f64(*v)).collect()).collect();
    let json_rows: Vec<Value> = rows_num
        .iter()
        .map(|r| {
            let mut o = Map::new();
            for (k, v) in header.iter().zip(r) {
                o.insert(k.clone(), num(*v));
            }
            Value::Object(o)
        })
        .collect();
    let json = json!({
        "method": method.as_str(),
        "dt": traj.dt.map(num),
        "dt_limit": traj.dt_limit.map(num),
        "mass_drift": num(traj.mass_drift()),
        "decay_check": report.to_json(),
        "rows": json_rows,
    });
    let summary = vec![format!(
        "{}: decay bound {} (worst ratio {:.6}), mass drift {:.3e}",
        method.as_str(),
        report.verdict.as_str(),
        report.ratio,
        traj.mass_drift()
    )];
    Ok(Outcome { table: Table { header, rows, json }, failed: report.verdict == Verdict::Fails, extra: Vec::new(), summary })
}

/// One self-test line.
#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Fast checks of the constants, the spectral transform and the decay bound.
pub fn selftest_checks() -> CliResult<Vec<SelfCheck>> {
    use std::f64::consts::PI;
    let mut out = Vec::new();
    let mut push = |name, value: f64, expected: f64, tol: f64| {
        let pass = rel(value, expected) <= tol;
        out.push(SelfCheck { name, value, expected, tol, pass });
    };
    push("c_sobolev_int_n1", sobolev_constant_int(1)?, 1.0 / PI, 1e-12);
    push("gross_gamma_n1", gross_gamma(1)?, 1.0 / (PI * PI), 1e-12);
    push("u_bound_half", us_bound(1, 0.5)?, 1.5f64.sqrt(), 1e-14);
    push("v_bound_half", vs_bound(1, 0.5)?, 5.0 / 3.0, 1e-14);
    push("c_hls_n1", hls_constant(1, 2.0)?, 4.0, 1e-12);
    push("stirling_n1000", gross_gamma_limit(1000)?, (2.0 * PI).powf(-0.5), 1e-2);

    let spec = GridSpec::new(1, 7.0, 7.0, 48, 48)?;
    let f = GridFunction::from_real_fn(&spec, |x, t| (-0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5 * t * t).exp());
    let c = analyze(&f, &AnalysisConfig::default())?;
    let g = synthesize(&c, &spec)?;
    let num: f64 = g.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = f.values.iter().map(|b| b.norm_sqr()).sum();
    push("spectral_round_trip", 1.0 + (num / den).sqrt(), 1.0, 1e-6);
    let l2 = lp_norm(&f, 2.0, &Measure::Haar)?.powi(2);
    push("plancherel", c.energy(&Multiplier::Identity), l2, 1e-4);

    let (l1, l2, t) = (3.0, 0.5, 0.25);
    push("decay_bound_q4", decay_bound(1, l1, l2, t)?, 1.0 / (1.0 / l2 + PI * t / l1), 1e-14);
    Ok(out)
}

fn selftest_cmd() -> CliResult<Outcome> {
    let checks = selftest_checks()?;
    let header = ["check", "status", "value", "expected", "tol"].map(String::from).to_vec();
    let status = |c: &SelfCheck| if c.pass { "PASS" } else { "FAIL" };
    let rows = checks
        .iter()
        .map(|c| vec![c.name.to_string(), status(c).to_string(), fmt_f64(c.value), fmt_f64(c.expected), fmt_f64(c.tol)])
        .collect();
    let json = Value::Array(
        checks
            .iter()
            .map(|c| json!({"check": c.name, "status": status(c), "value": num(c.value), "expected": num(c.expected), "tol": c.tol}))
            .collect(),
    );
    let summary = checks.iter().map(|c| format!("{} {}", status(c), c.name)).collect();
    Ok(Outcome { table: Table { header, rows, json }, failed: checks.iter().any(|c| !c.pass), extra: Vec::new(), summary })
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("HEIS_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("HEIS_THREADS must be a positive integer, got `{v}`")))?;
        if k == 0 {
            return Err(CliError::Usage("HEIS_THREADS must be at least 1".into()));
        }
        // A pool built earlier in the same process stays in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    match &cfg.command {
        Command::Constants => constants_cmd(cfg),
        Command::Verify { suite } => verify_cmd(cfg, *suite),
        Command::Optimize { target, variant, seeds, iters, trace } => {
            optimize_cmd(cfg, *target, *variant, *seeds, *iters, trace.as_deref())
        }
        Command::Heat { t_final, steps, method, dt } => heat_cmd(cfg, *t_final, *steps, *method, *dt),
        Command::Selftest => selftest_cmd(),
    }
}

/// Run the CLI on `argv` (including the program name), writing the report to
/// `out` unless `--output` is given and diagnostics to `err`. Returns the
/// exit code.
pub fn run_with<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = init_threads().and_then(|_| RunConfig::from_cli(cli)).and_then(|cfg| {
        let outcome = execute(&cfg)?;
        let bytes = outcome.table.render(cfg.format)?;
        match &cfg.output {
            Some(p) => write_atomic(p, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            None => out.write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?,
        }
        for (p, b) in &outcome.extra {
            write_atomic(p, b).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(outcome)
    });
    match result {
        Ok(o) => {
            for line in &o.summary {
                let _ = writeln!(err, "{line}");
            }
            if o.failed {
                EXIT_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("heis").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn constants_table_at_s1() {
        let (code, out, _) = call(&["constants", "--n", "1", "--s", "1"]);
        assert_eq!(code, 0);
        let mut rdr = csv::Reader::from_reader(out.as_bytes());
        let header = rdr.headers().unwrap().clone();
        let row = rdr.records().next().unwrap().unwrap();
        let idx = header.iter().position(|h| h == "c_sobolev_int").unwrap();
        let v: f64 = row[idx].parse().unwrap();
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    }

    #[test]
    fn json_and_csv_carry_the_same_numbers() {
        let (_, csv_out, _) = call(&["constants", "--s", "0.5"]);
        let (_, json_out, _) = call(&["constants", "--s", "0.5", "--format", "json"]);
        let v: Value = serde_json::from_str(&json_out).unwrap();
        let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
        let header = rdr.headers().unwrap().clone();
        let row = rdr.records().next().unwrap().unwrap();
        for (h, cell) in header.iter().zip(row.iter()) {
            match v[h].as_f64() {
                Some(x) => assert_eq!(cell.parse::<f64>().unwrap(), x, "{h}"),
                None => assert!(cell.is_empty(), "{h}"),
            }
        }
    }

    #[test]
    fn parameter_window_errors_exit_3() {
        assert_eq!(call(&["verify", "--s", "1.5"]).0, EXIT_PARAMETER);
        assert_eq!(call(&["verify", "--n", "2"]).0, EXIT_PARAMETER);
        assert_eq!(call(&["constants", "--s", "0"]).0, EXIT_PARAMETER);
        assert_eq!(call(&["constants", "--s", "0.5", "--beta", "1.5"]).0, EXIT_PARAMETER);
        assert_eq!(call(&["heat", "--n", "2"]).0, EXIT_PARAMETER);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--suite", "nope"]).0, EXIT_USAGE);
        assert_eq!(call(&["constants", "--s", "abc"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn config_parsing() {
        let kv = parse_config("# defaults\nn = 1\n\ns=0.5 # trailing\nhalf-width-xi = 6\n").unwrap();
        assert_eq!(
            kv,
            vec![("n".into(), "1".into()), ("s".into(), "0.5".into()), ("half_width_xi".into(), "6".into())]
        );
        assert!(matches!(parse_config("no equals sign"), Err(CliError::Usage(_))));
    }

    #[test]
    fn config_file_presets_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("heis.conf");
        fs::write(&cfg, "s = 0.5\nformat = json\n").unwrap();
        let path = cfg.to_str().unwrap();
        let (code, out, _) = call(&["constants", "--config", path]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["s"].as_f64(), Some(0.5));
        let (_, out, _) = call(&["constants", "--config", path, "--s", "1"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["s"].as_f64(), Some(1.0));
        fs::write(&cfg, "colour = blue\n").unwrap();
        assert_eq!(call(&["constants", "--config", path]).0, EXIT_USAGE);
        assert_eq!(call(&["constants", "--config", dir.path().join("missing").to_str().unwrap()]).0, EXIT_IO);
    }

    #[test]
    fn output_file_is_written_whole() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let (code, out, _) = call(&["constants", "--output", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,Q,s,"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let bad = dir.path().join("no_such_dir").join("c.csv");
        assert_eq!(call(&["constants", "--output", bad.to_str().unwrap()]).0, EXIT_IO);
    }

    #[test]
    fn selftest_passes() {
        let (code, _, err) = call(&["selftest"]);
        assert_eq!(code, 0, "{err}");
        assert!(err.lines().all(|l| l.starts_with("PASS ")));
    }

    #[test]
    fn filter_keeps_reports_without_the_parameter() {
        let mut p = crate::inequalities::Params { n: 1, s: None, beta: None, q: None, sigma: None, a: None, p: None };
        let a = InequalityReport::linear("x", 1.0, 2.0, p.clone(), 1e-3);
        p.s = Some(0.5);
        let b = InequalityReport::linear("y", 1.0, 2.0, p.clone(), 1e-3);
        p.s = Some(0.25);
        let c = InequalityReport::linear("z", 1.0, 2.0, p, 1e-3);
        let keep = filter_reports(vec![a, b, c], &ParamSet { s: Some(0.5), ..Default::default() });
        let names: Vec<&str> = keep.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["x", "y"]);
    }
}
