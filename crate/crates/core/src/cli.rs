//! Command-line front end.
//!
//! Every command produces one or more flat records, written as CSV (one
//! header line, one row per record) or JSON (an object, or an array of
//! objects for multi-record commands). Floating-point values are printed
//! with 15 significant digits.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::error::Error;
use crate::expansion::{exact_log_ratio, exact_ratio, log_ratio_expansion, ratio_expansion};
use crate::quantile::{QuantileMethod, QuantileRequest};
use crate::special::Probability;
use crate::student::{standardize, student_pdf, student_sf_exact, DegreesOfFreedom};
use crate::survival::{
    extremal_constant, fit_loglog_slope_with, legacy_leading_constant, max_error_scan_with, survival_approx,
    ApproxOrder, ScanOptions,
};

/// Exit status for usage and domain errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "student-refine", version, about = "Refined normal approximations to the Student t distribution")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    format: OutputFormat,

    /// Write output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Student t density f_nu(x).
    Pdf {
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
    },
    /// Exact or approximate survival function P(X > a).
    Sf {
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        /// Exact value from the incomplete beta function (default).
        #[arg(long, conflicts_with = "order")]
        exact: bool,
        /// Shifted-normal approximation of this order (0-3).
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        order: Option<u8>,
    },
    /// Local expansion of the density ratio against its exact value.
    Ratio {
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        /// Expansion order (1-3).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        order: u8,
        /// Use the log of the ratio.
        #[arg(long)]
        log: bool,
    },
    /// Approximate upper-alpha percentage point.
    Quantile {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Extremal constants of the error bounds.
    Constants,
    /// Maximal approximation error for each nu.
    Scan {
        /// Degrees of freedom to scan, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        nu_list: Vec<f64>,
        /// Approximation order (0-3).
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        order: u8,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Log-log slope of the maximal error against nu.
    Slopes {
        /// Approximation order (0-3).
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        order: u8,
        /// Degrees of freedom to fit over, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        nu_list: Vec<f64>,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MethodArgs {
    /// Invert the survival approximation of this order (0-3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    invert_order: Option<u8>,
    /// Solve the Mills-ratio equation of this level (1-3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    mills_level: Option<u8>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Number of grid points in the delta window.
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    /// Half-width of the delta window.
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    /// Bulk parameter used to clip the window.
    #[arg(long, default_value_t = 0.5, conflicts_with = "full_window")]
    eta: f64,
    /// Scan the whole window without clipping to the bulk.
    #[arg(long)]
    full_window: bool,
}

impl ScanArgs {
    fn options(&self) -> ScanOptions {
        ScanOptions {
            grid_points: self.grid,
            window_delta: self.window,
            bulk_eta: if self.full_window { None } else { Some(self.eta) },
            ..ScanOptions::default()
        }
    }
}

/// Everything a `scan` invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub nu_list: Vec<f64>,
    pub order: ApproxOrder,
    pub options: ScanOptions,
    pub format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.nu_list.is_empty() {
            return Err(Error::domain("nu_list", f64::NAN, "at least one nu is required"));
        }
        for &nu in &self.nu_list {
            DegreesOfFreedom::new(nu)?;
        }
        self.options.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    List(Vec<f64>),
}

type Record = Vec<(&'static str, Field)>;

enum Output {
    One(Record),
    Many(Vec<Record>),
}

/// Formats like C's `%.15g`.
pub fn sig15(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..15).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (14 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_cell(field: &Field) -> String {
    match field {
        Field::Num(x) => sig15(*x),
        Field::Int(n) => n.to_string(),
        Field::Text(s) => s.clone(),
        Field::List(xs) => xs.iter().map(|x| sig15(*x)).collect::<Vec<_>>().join(";"),
    }
}

fn json_number(x: f64) -> Value {
    let rounded: f64 = sig15(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

fn json_record(record: &Record) -> Value {
    let mut map = Map::new();
    for (key, field) in record {
        let v = match field {
            Field::Num(x) => json_number(*x),
            Field::Int(n) => Value::from(*n),
            Field::Text(s) => Value::from(s.clone()),
            Field::List(xs) => Value::Array(xs.iter().map(|x| json_number(*x)).collect()),
        };
        map.insert((*key).to_string(), v);
    }
    Value::Object(map)
}

fn render(output: &Output, format: OutputFormat, out: &mut dyn Write) -> io::Result<()> {
    match format {
        OutputFormat::Json => {
            let value = match output {
                Output::One(r) => json_record(r),
                Output::Many(rs) => Value::Array(rs.iter().map(json_record).collect()),
            };
            serde_json::to_writer_pretty(&mut *out, &value)?;
            writeln!(out)
        }
        OutputFormat::Csv => {
            let records: &[Record] = match output {
                Output::One(r) => std::slice::from_ref(r),
                Output::Many(rs) => rs,
            };
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = records.first() {
                w.write_record(first.iter().map(|(k, _)| *k))?;
            }
            for r in records {
                w.write_record(r.iter().map(|(_, f)| csv_cell(f)))?;
            }
            w.flush()
        }
    }
}

fn order_of(order: u8) -> Result<ApproxOrder, Error> {
    ApproxOrder::try_from(order)
}

fn probability(alpha: f64) -> Result<Probability, Error> {
    Probability::new(alpha)
}

fn execute(cli: &Cli) -> Result<Output, Error> {
    match &cli.command {
        Command::Pdf { nu, x } => {
            let dof = DegreesOfFreedom::new(*nu)?;
            Ok(Output::One(vec![
                ("nu", Field::Num(*nu)),
                ("x", Field::Num(*x)),
                ("pdf", Field::Num(student_pdf(dof, *x))),
            ]))
        }
        Command::Sf { nu, a, exact: _, order } => {
            let dof = DegreesOfFreedom::new(*nu)?;
            let (method, value) = match order {
                Some(o) => (format!("order{o}"), survival_approx(dof, *a, order_of(*o)?)?),
                None => ("exact".to_string(), student_sf_exact(dof, *a)?),
            };
            Ok(Output::One(vec![
                ("nu", Field::Num(*nu)),
                ("a", Field::Num(*a)),
                ("method", Field::Text(method)),
                ("sf", Field::Num(value.get())),
            ]))
        }
        Command::Ratio { nu, x, order, log } => {
            let dof = DegreesOfFreedom::new(*nu)?;
            let delta = standardize(dof, *x);
            let (form, expansion, exact) = if *log {
                ("log", log_ratio_expansion(dof, delta, *order)?, exact_log_ratio(dof, delta))
            } else {
                ("ratio", ratio_expansion(dof, delta, *order)?, exact_ratio(dof, delta))
            };
            Ok(Output::One(vec![
                ("nu", Field::Num(*nu)),
                ("x", Field::Num(*x)),
                ("delta", Field::Num(delta.get())),
                ("order", Field::Int(u64::from(*order))),
                ("form", Field::Text(form.into())),
                ("expansion", Field::Num(expansion)),
                ("exact", Field::Num(exact)),
                ("difference", Field::Num(exact - expansion)),
            ]))
        }
        Command::Quantile { nu, alpha, method } => {
            let dof = DegreesOfFreedom::new(*nu)?;
            let m = match (method.invert_order, method.mills_level) {
                (Some(o), _) => QuantileMethod::InvertSurvival { order: order_of(o)? },
                (None, Some(l)) => QuantileMethod::MillsEquation { level: l },
                (None, None) => unreachable!("clap enforces one method"),
            };
            let res = QuantileRequest::new(dof, probability(*alpha)?, m)?.solve()?;
            let (method_name, param_name, param) = match res.method {
                QuantileMethod::InvertSurvival { order } => ("invert_survival", "order", order.get()),
                QuantileMethod::MillsEquation { level } => ("mills_equation", "level", level),
            };
            Ok(Output::One(vec![
                ("nu", Field::Num(*nu)),
                ("alpha", Field::Num(*alpha)),
                ("lambda", Field::Num(res.lambda)),
                ("residual", Field::Num(res.residual)),
                ("iterations", Field::Int(res.iterations as u64)),
                ("method", Field::Text(method_name.into())),
                (param_name, Field::Int(u64::from(param))),
            ]))
        }
        Command::Constants => {
            let refs = ["0.137647", "0.353017", "0.758112"];
            let mut rows = Vec::new();
            for (i, reference) in refs.iter().enumerate() {
                rows.push(constant_row(format!("M{i}"), extremal_constant(i as u8)?, reference));
            }
            rows.push(constant_row("M0_legacy".into(), legacy_leading_constant(), "0.1582"));
            Ok(Output::Many(rows))
        }
        Command::Scan { nu_list, order, scan } => {
            let config = ScanConfig {
                nu_list: nu_list.clone(),
                order: order_of(*order)?,
                options: scan.options(),
                format: cli.format,
                output_path: cli.output.clone(),
            };
            Ok(Output::Many(scan_records(&config)?))
        }
        Command::Slopes { order, nu_list, scan } => {
            let fit = fit_loglog_slope_with(order_of(*order)?, nu_list, &scan.options())?;
            Ok(Output::One(vec![
                ("order", Field::Int(u64::from(fit.order.get()))),
                ("slope", Field::Num(fit.slope)),
                ("intercept", Field::Num(fit.intercept)),
                ("nu_values", Field::List(fit.nu_values)),
                ("errors", Field::List(fit.errors)),
                ("excluded_nu", Field::List(fit.excluded_nu)),
            ]))
        }
    }
}

fn constant_row(name: String, value: f64, reference: &str) -> Record {
    vec![
        ("name", Field::Text(name)),
        ("computed", Field::Num(value)),
        ("reference", Field::Text(reference.into())),
    ]
}

fn scan_records(config: &ScanConfig) -> Result<Vec<Record>, Error> {
    use rayon::prelude::*;

    config.validate()?;
    let reports = config
        .nu_list
        .par_iter()
        .map(|&nu| max_error_scan_with(DegreesOfFreedom::new(nu)?, config.order, &config.options))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(reports
        .into_iter()
        .map(|r| {
            vec![
                ("nu", Field::Num(r.nu.get())),
                ("order", Field::Int(u64::from(r.order.get()))),
                ("max_error", Field::Num(r.max_error)),
                ("argmax_a", Field::Num(r.argmax_a)),
                ("grid_points", Field::Int(r.grid_points as u64)),
            ]
        })
        .collect())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            };
            return code;
        }
    };

    let output = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };

    let written = match &cli.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut f = io::BufWriter::new(f);
            render(&output, cli.format, &mut f)?;
            f.flush()
        }),
        None => render(&output, cli.format, stdout),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot write output: {e}");
            EXIT_FAILURE
        }
    }
}
