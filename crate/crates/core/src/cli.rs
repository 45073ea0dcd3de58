//! Command-line surface.
//!
//! Arguments are parsed by clap into [`Cli`], validated into a [`RunConfig`]
//! before any numeric work, and executed into an [`Output`] holding the text
//! for stdout and any files. Files are written only after every computation
//! has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::error::Error;
use crate::intervals::{self, build_interval, CurveTable, IntervalRule, Quantity};
use crate::kernel::PretestSpec;
use crate::kernel::RHO_MAX as RHO_LIMIT;
use crate::linmod::{self, Dataset};
use crate::mc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Significant digits of every number written by the CLI.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn flag(flag: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("--{flag}: {reason}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bagged-ci",
    version,
    about = "Coverage and scaled expected length of confidence intervals centered on bootstrap smoothed estimators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate one functional over a gamma grid as CSV.
    Curve(CurveArgs),
    /// Minimum coverage over gamma for one or more interval rules.
    Cmin(CminArgs),
    /// Data for both panels of the headline coverage / length figure.
    Figure1(Figure1Args),
    /// Fit a linear model from CSV files and report all four intervals.
    Fit(FitArgs),
    /// Compare Monte Carlo estimates with the exact formulas.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PretestArgs {
    /// Size of the preliminary test (default 0.1).
    #[arg(long, conflicts_with = "cutoff_d")]
    pub pretest_size: Option<f64>,
    /// Cutoff d of the preliminary test |gamma_hat| <= d.
    #[arg(long)]
    pub cutoff_d: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub quantity: String,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub pretest: PretestArgs,
    #[arg(long, default_value_t = 10.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CminArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub pretest: PretestArgs,
    /// Comma-separated rules among sd, sd_delta, pms.
    #[arg(long, default_value = "sd,sd_delta,pms")]
    pub rule: String,
    /// Also write the reports as CSV rows to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub pretest: PretestArgs,
    #[arg(long, default_value_t = 10.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Directory receiving figure1_top.csv and figure1_bottom.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV design matrix, one row per observation.
    #[arg(long)]
    pub design: PathBuf,
    /// CSV response vector.
    #[arg(long)]
    pub response: PathBuf,
    /// Contrast a with theta = a'beta: a CSV file or an inline list like 1,0,0.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_vec: String,
    /// Contrast b with tau = b'beta: a CSV file or an inline list.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_vec: String,
    /// Known error standard deviation.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub pretest: PretestArgs,
    /// The CSV files start with a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 20_170_301)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub pretest: PretestArgs,
    /// Comma-separated gamma grid.
    #[arg(long, default_value = "0,1,3", allow_hyphen_values = true)]
    pub gammas: String,
    /// Comma-separated rho grid.
    #[arg(long, default_value = "0,0.4,0.7", allow_hyphen_values = true)]
    pub rhos: String,
    /// Largest accepted |z| of a comparison.
    #[arg(long, default_value_t = 3.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Curve,
    Cmin,
    Figure1,
    Fit,
    Verify,
}

/// Source of a contrast vector.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

/// Fully validated run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub rho: f64,
    pub alpha: f64,
    pub pretest: PretestSpec,
    pub gamma_max: f64,
    pub step: f64,
    pub quantity: Option<Quantity>,
    pub rules: Vec<IntervalRule>,
    pub replications: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub gammas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub design: Option<PathBuf>,
    pub response: Option<PathBuf>,
    pub theta_vec: Option<VectorSource>,
    pub tau_vec: Option<VectorSource>,
    pub sigma: f64,
    pub header: bool,
    pub out: Option<PathBuf>,
}

/// Text destined for stdout plus files to create.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    pub exit_code: i32,
}

impl Output {
    /// Writes the files; stdout is left to the caller.
    pub fn write_files(&self) -> Result<(), CliError> {
        for (path, body) in &self.files {
            fs::write(path, body)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<f64, CliError> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(CliError::flag(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ))
    }
}

fn check_rho(flag: &str, rho: f64) -> Result<f64, CliError> {
    if rho.is_finite() && rho.abs() <= RHO_LIMIT {
        Ok(rho)
    } else {
        Err(CliError::flag(
            flag,
            format!("must satisfy |rho| <= {RHO_LIMIT}, got {rho}"),
        ))
    }
}

fn check_pos(flag: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::flag(
            flag,
            format!("must be finite and positive, got {x}"),
        ))
    }
}

fn pretest(args: &PretestArgs) -> Result<PretestSpec, CliError> {
    match (args.pretest_size, args.cutoff_d) {
        (Some(_), Some(_)) => Err(CliError::Validation(
            "--pretest-size and --cutoff-d are mutually exclusive".into(),
        )),
        (Some(size), None) => {
            PretestSpec::from_size(size).map_err(|e| CliError::flag("pretest-size", e))
        }
        (None, Some(d)) => PretestSpec::from_cutoff(d).map_err(|e| CliError::flag("cutoff-d", e)),
        (None, None) => Ok(PretestSpec::from_size(0.1).expect("default pretest size is valid")),
    }
}

fn check_grid(gamma_max: f64, step: f64) -> Result<(), CliError> {
    check_pos("step", step)?;
    check_pos("gamma-max", gamma_max)?;
    intervals::gamma_grid(gamma_max, step).map_err(|e| CliError::flag("gamma-max", e))?;
    Ok(())
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| {
            CliError::flag(
                flag,
                format!("expected a comma-separated list of numbers: {e}"),
            )
        })?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::flag(flag, "expected finite numbers"));
    }
    Ok(values)
}

fn vector_source(flag: &str, text: &str) -> Result<VectorSource, CliError> {
    if let Ok(values) = parse_list(flag, text) {
        return Ok(VectorSource::Inline(values));
    }
    let path = PathBuf::from(text);
    if path.is_file() {
        Ok(VectorSource::File(path))
    } else {
        Err(CliError::flag(
            flag,
            format!("`{text}` is neither a list of numbers nor a readable file"),
        ))
    }
}

fn check_input(flag: &str, path: &Path) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::flag(
            flag,
            format!("{} is not a readable file", path.display()),
        ))
    }
}

fn check_output_file(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        return Err(CliError::flag(
            "out",
            format!("{} is a directory", path.display()),
        ));
    }
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(CliError::flag(
            "out",
            format!("directory {} does not exist", parent.display()),
        ));
    }
    Ok(())
}

impl RunConfig {
    fn base(command: CommandKind, alpha: f64, pretest: PretestSpec) -> Self {
        Self {
            command,
            rho: 0.0,
            alpha,
            pretest,
            gamma_max: 10.0,
            step: 0.05,
            quantity: None,
            rules: Vec::new(),
            replications: 0,
            seed: 0,
            tolerance: 3.0,
            gammas: Vec::new(),
            rhos: Vec::new(),
            design: None,
            response: None,
            theta_vec: None,
            tau_vec: None,
            sigma: 1.0,
            header: false,
            out: None,
        }
    }

    /// Checks every flag; no numeric work happens here.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        match &cli.command {
            Command::Curve(a) => {
                let mut c = Self::base(
                    CommandKind::Curve,
                    check_alpha(a.alpha)?,
                    pretest(&a.pretest)?,
                );
                c.rho = check_rho("rho", a.rho)?;
                c.quantity = Some(
                    a.quantity
                        .parse()
                        .map_err(|e| CliError::flag("quantity", e))?,
                );
                check_grid(a.gamma_max, a.step)?;
                c.gamma_max = a.gamma_max;
                c.step = a.step;
                if let Some(out) = &a.out {
                    check_output_file(out)?;
                }
                c.out = a.out.clone();
                Ok(c)
            }
            Command::Cmin(a) => {
                let mut c = Self::base(
                    CommandKind::Cmin,
                    check_alpha(a.alpha)?,
                    pretest(&a.pretest)?,
                );
                c.rho = check_rho("rho", a.rho)?;
                for name in a.rule.split(',') {
                    let rule: IntervalRule =
                        name.trim().parse().map_err(|e| CliError::flag("rule", e))?;
                    if rule == IntervalRule::FullModel {
                        return Err(CliError::flag("rule", "choose among sd, sd_delta, pms"));
                    }
                    if !c.rules.contains(&rule) {
                        c.rules.push(rule);
                    }
                }
                if let Some(out) = &a.out {
                    check_output_file(out)?;
                }
                c.out = a.out.clone();
                Ok(c)
            }
            Command::Figure1(a) => {
                let mut c = Self::base(
                    CommandKind::Figure1,
                    check_alpha(a.alpha)?,
                    pretest(&a.pretest)?,
                );
                c.rho = check_rho("rho", a.rho)?;
                check_grid(a.gamma_max, a.step)?;
                c.gamma_max = a.gamma_max;
                c.step = a.step;
                if !a.out.is_dir() {
                    return Err(CliError::flag(
                        "out",
                        format!("{} is not a directory", a.out.display()),
                    ));
                }
                c.out = Some(a.out.clone());
                Ok(c)
            }
            Command::Fit(a) => {
                let mut c = Self::base(
                    CommandKind::Fit,
                    check_alpha(a.alpha)?,
                    pretest(&a.pretest)?,
                );
                c.design = Some(check_input("design", &a.design)?);
                c.response = Some(check_input("response", &a.response)?);
                c.theta_vec = Some(vector_source("theta-vec", &a.theta_vec)?);
                c.tau_vec = Some(vector_source("tau-vec", &a.tau_vec)?);
                c.sigma = check_pos("sigma", a.sigma)?;
                c.header = a.header;
                if let Some(out) = &a.out {
                    check_output_file(out)?;
                }
                c.out = a.out.clone();
                Ok(c)
            }
            Command::Verify(a) => {
                let mut c = Self::base(
                    CommandKind::Verify,
                    check_alpha(a.alpha)?,
                    pretest(&a.pretest)?,
                );
                if a.reps == 0 {
                    return Err(CliError::flag("reps", "must be at least 1"));
                }
                c.replications = a.reps;
                c.seed = a.seed;
                c.tolerance = check_pos("tolerance", a.tolerance)?;
                c.gammas = parse_list("gammas", &a.gammas)?;
                c.rhos = parse_list("rhos", &a.rhos)?;
                for &r in &c.rhos {
                    check_rho("rhos", r)?;
                }
                if let Some(out) = &a.out {
                    check_output_file(out)?;
                }
                c.out = a.out.clone();
                Ok(c)
            }
        }
    }
}

/// `%.{digits}g`-style formatting: shortest of fixed or scientific notation
/// with trailing zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn num(x: f64) -> String {
    fmt_sig(x, SIGNIFICANT_DIGITS)
}

/// CSV with header `gamma,value,quantity,rho,alpha,pretest_size`.
pub fn curve_csv(table: &CurveTable) -> String {
    let mut s = String::from("gamma,value,quantity,rho,alpha,pretest_size\n");
    for (g, v) in table.gammas.iter().zip(&table.values) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(*g),
            num(*v),
            table.quantity,
            num(table.scenario_rho),
            num(table.alpha),
            num(table.pretest.size())
        );
    }
    s
}

pub fn cmd_curve(c: &RunConfig) -> Result<Output, CliError> {
    let quantity = c.quantity.expect("validated");
    let table = intervals::curve(quantity, c.rho, &c.pretest, c.alpha, c.gamma_max, c.step)?;
    let csv = curve_csv(&table);
    Ok(match &c.out {
        Some(path) => Output {
            stdout: String::new(),
            files: vec![(path.clone(), csv)],
            exit_code: EXIT_OK,
        },
        None => Output {
            stdout: csv,
            files: Vec::new(),
            exit_code: EXIT_OK,
        },
    })
}

pub fn cmd_cmin(c: &RunConfig) -> Result<Output, CliError> {
    let mut text = String::new();
    let mut csv = String::from(
        "rule,c_min,argmin_gamma,rho,alpha,pretest_size,search_grid_step,search_max,refinement_tolerance\n",
    );
    for &rule in &c.rules {
        let rep = intervals::min_coverage(c.rho, &c.pretest, c.alpha, rule)?;
        let _ = writeln!(
            text,
            "rule={} c_min={} argmin_gamma={} rho={} alpha={} pretest_size={} search_grid_step={} search_max={} refinement_tolerance={}",
            rule,
            num(rep.c_min),
            num(rep.argmin_gamma),
            num(c.rho),
            num(c.alpha),
            num(c.pretest.size()),
            num(rep.search_grid_step),
            num(rep.search_max),
            num(rep.refinement_tolerance)
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            rule,
            num(rep.c_min),
            num(rep.argmin_gamma),
            num(c.rho),
            num(c.alpha),
            num(c.pretest.size()),
            num(rep.search_grid_step),
            num(rep.search_max),
            num(rep.refinement_tolerance)
        );
    }
    let files = c.out.iter().map(|p| (p.clone(), csv.clone())).collect();
    Ok(Output {
        stdout: text,
        files,
        exit_code: EXIT_OK,
    })
}

pub const FIGURE1_TOP: &str = "figure1_top.csv";
pub const FIGURE1_BOTTOM: &str = "figure1_bottom.csv";

pub fn cmd_figure1(c: &RunConfig) -> Result<Output, CliError> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let cp_delta = intervals::curve(
        Quantity::CpDelta,
        c.rho,
        &c.pretest,
        c.alpha,
        c.gamma_max,
        c.step,
    )?;
    let cp_pms = intervals::curve(
        Quantity::CpPms,
        c.rho,
        &c.pretest,
        c.alpha,
        c.gamma_max,
        c.step,
    )?;
    let sel = intervals::curve(
        Quantity::SelDelta,
        c.rho,
        &c.pretest,
        c.alpha,
        c.gamma_max,
        c.step,
    )?;

    let mut top = String::from("gamma,cp_delta,cp_pms\n");
    for i in 0..cp_delta.len() {
        let _ = writeln!(
            top,
            "{},{},{}",
            num(cp_delta.gammas[i]),
            num(cp_delta.values[i]),
            num(cp_pms.values[i])
        );
    }
    let mut bottom = String::from("gamma,sel_delta\n");
    for (g, v) in sel.gammas.iter().zip(&sel.values) {
        let _ = writeln!(bottom, "{},{}", num(*g), num(*v));
    }

    let (g_cd, min_cd) = cp_delta.min();
    let (g_cp, min_cp) = cp_pms.min();
    let (g_sel, max_sel) = sel.max();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "rho={} alpha={} pretest_size={}",
        num(c.rho),
        num(c.alpha),
        num(c.pretest.size())
    );
    let _ = writeln!(text, "min cp_delta={} at gamma={}", num(min_cd), num(g_cd));
    let _ = writeln!(text, "min cp_pms={} at gamma={}", num(min_cp), num(g_cp));
    let _ = writeln!(text, "sel_delta(0)={}", num(sel.values[0]));
    let _ = writeln!(
        text,
        "max sel_delta={} at gamma={}",
        num(max_sel),
        num(g_sel)
    );
    let _ = writeln!(
        text,
        "c_min(sd_delta)={}",
        num(sel.c_min.expect("sel curve carries c_min"))
    );

    Ok(Output {
        stdout: text,
        files: vec![
            (dir.join(FIGURE1_TOP), top),
            (dir.join(FIGURE1_BOTTOM), bottom),
        ],
        exit_code: EXIT_OK,
    })
}

fn read_csv_numbers(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: line {line}, column {}: `{field}` is not a decimal number",
                    path.display(),
                    col + 1
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_vector(src: &VectorSource, header: bool) -> Result<Vec<f64>, CliError> {
    match src {
        VectorSource::Inline(v) => Ok(v.clone()),
        VectorSource::File(p) => Ok(read_csv_numbers(p, header)?.into_iter().flatten().collect()),
    }
}

/// Loads the data set named by a `fit` configuration.
pub fn load_dataset(c: &RunConfig) -> Result<Dataset, CliError> {
    let design_path = c.design.as_ref().expect("validated");
    let rows = read_csv_numbers(design_path, c.header)?;
    let p = rows.first().map(Vec::len).unwrap_or(0);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
        return Err(CliError::Validation(format!(
            "{}: data row {} has {} columns, expected {p}",
            design_path.display(),
            i + 1,
            row.len()
        )));
    }
    let x = DMatrix::from_row_iterator(rows.len(), p, rows.into_iter().flatten());
    let y = read_vector(
        &VectorSource::File(c.response.clone().expect("validated")),
        c.header,
    )?;
    let a = read_vector(c.theta_vec.as_ref().expect("validated"), c.header)?;
    let b = read_vector(c.tau_vec.as_ref().expect("validated"), c.header)?;
    Ok(Dataset::new(
        x,
        DVector::from_vec(y),
        c.sigma,
        DVector::from_vec(a),
        DVector::from_vec(b),
    )?)
}

/// Structured result of `fit`.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub least_squares: linmod::LeastSquares,
    pub residuals: linmod::ResidualDiagnostic,
    pub intervals: Vec<intervals::IntervalReport>,
}

pub fn fit_report(c: &RunConfig) -> Result<FitReport, CliError> {
    let data = load_dataset(c)?;
    let ls = linmod::fit_full(&data)?;
    let residuals = linmod::residual_check(&data, &ls);
    let intervals = IntervalRule::ALL
        .iter()
        .map(|&rule| build_interval(&ls.model, &c.pretest, c.alpha, rule))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FitReport {
        least_squares: ls,
        residuals,
        intervals,
    })
}

pub fn cmd_fit(c: &RunConfig) -> Result<Output, CliError> {
    let rep = fit_report(c)?;
    let m = &rep.least_squares.model;
    let mut s = String::from("field,value\n");
    for (name, v) in [
        ("theta_hat", m.theta_hat),
        ("tau_hat", rep.least_squares.tau_hat),
        ("gamma_hat", m.gamma_hat),
        ("sigma", m.sigma),
        ("v_theta", m.v_theta),
        ("v_tau", m.v_tau),
        ("rho", m.rho),
        ("pretest_cutoff", c.pretest.cutoff()),
        ("pretest_size", c.pretest.size()),
        ("rss", rep.residuals.rss),
        ("rss_ratio", rep.residuals.ratio),
    ] {
        let _ = writeln!(s, "{name},{}", num(v));
    }
    let _ = writeln!(s, "pretest_accepts,{}", c.pretest.accepts(m.gamma_hat));
    s.push('\n');
    s.push_str("rule,lower,upper,center,half_width,nominal_coverage\n");
    for i in &rep.intervals {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            i.rule,
            num(i.lower),
            num(i.upper),
            num(i.center),
            num(i.half_width),
            num(i.nominal_coverage)
        );
    }
    let files = c.out.iter().map(|p| (p.clone(), s.clone())).collect();
    Ok(Output {
        stdout: s,
        files,
        exit_code: EXIT_OK,
    })
}

/// Replication counts below this get a warning about wide standard errors.
const SMALL_SAMPLE: u64 = 10_000;

pub fn cmd_verify(c: &RunConfig) -> Result<Output, CliError> {
    let comparisons = mc::oracle_agreement(
        &c.gammas,
        &c.rhos,
        &c.pretest,
        c.alpha,
        c.replications,
        c.seed,
    )?;
    let mut s = String::new();
    if c.replications < SMALL_SAMPLE {
        let _ = writeln!(
            s,
            "# note: {} replications give wide Monte Carlo standard errors",
            c.replications
        );
    }
    s.push_str("quantity,gamma,rho,analytic,empirical,std_error,z,status\n");
    let mut all_pass = true;
    for cmp in &comparisons {
        let pass = cmp.passes(c.tolerance);
        all_pass &= pass;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            cmp.label,
            num(cmp.gamma),
            num(cmp.rho),
            num(cmp.analytic),
            num(cmp.empirical),
            num(cmp.std_error),
            num(cmp.z_score()),
            if pass { "pass" } else { "fail" }
        );
    }
    let _ = writeln!(
        s,
        "overall,{},replications={},seed={},tolerance={}",
        if all_pass { "pass" } else { "fail" },
        c.replications,
        c.seed,
        num(c.tolerance)
    );
    let files = c.out.iter().map(|p| (p.clone(), s.clone())).collect();
    Ok(Output {
        stdout: s,
        files,
        exit_code: if all_pass { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

pub fn execute(c: &RunConfig) -> Result<Output, CliError> {
    match c.command {
        CommandKind::Curve => cmd_curve(c),
        CommandKind::Cmin => cmd_cmin(c),
        CommandKind::Figure1 => cmd_figure1(c),
        CommandKind::Fit => cmd_fit(c),
        CommandKind::Verify => cmd_verify(c),
    }
}

/// Parses, validates, runs, writes files, and returns `(stdout, stderr, exit code)`.
pub fn run_with_args<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                (text, String::new(), code)
            } else {
                (String::new(), text, code)
            };
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|c| {
        let out = execute(&c)?;
        out.write_files()?;
        Ok(out)
    });
    match result {
        Ok(out) => (out.stdout, String::new(), out.exit_code),
        Err(e) => (String::new(), format!("error: {e}\n"), e.exit_code()),
    }
}
