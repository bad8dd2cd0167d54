//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for computation errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::batemanhorn::{bh_constant, count_prime_values, BhConstant, PolynomialSystem};
use crate::cramer::{lyapunov_ratio, moments, simulate_batch, UrnLaw, UrnModel};
use crate::error::{Error, Result};
use crate::euler::{SingularSeriesResult, DEFAULT_PRIME_LIMIT, TABLE_PRIME_LIMIT};
use crate::logint::{sum_integral_gap, DEFAULT_REL_TOL};
use crate::primes::sieve_primes;
use crate::report::{bh_report, render, tuple_report, value_table, Format};
use crate::tuples::{count_prime_tuples, tuple_constant, TuplePattern};

pub const THREADS_ENV: &str = "PRIMEBAND_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "primeband",
    version,
    about = "Prime constellation counts, singular-series constants and deviation bands"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    /// Write the result to a file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
            OutputFormat::Text => Format::Text,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prime k-tuples (Hardy-Littlewood).
    #[command(subcommand)]
    Tuples(TuplesCommand),
    /// Simultaneous prime values of polynomials (Bateman-Horn).
    #[command(subcommand)]
    Bh(BhCommand),
    /// Generalized Cramér urn model.
    #[command(subcommand)]
    Cramer(CramerCommand),
    /// Gap between the sum and the integral of 1/ln^r.
    Gap(GapArgs),
}

#[derive(Debug, Args)]
pub struct PatternArg {
    /// Pattern elements including the leading 0, e.g. 0,4,6.
    #[arg(long, value_parser = parse_pattern)]
    pub pattern: TuplePattern,
}

#[derive(Debug, Subcommand)]
pub enum TuplesCommand {
    /// Count prime tuples with first element n <= x.
    Count {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e5")]
        x: Vec<u64>,
    },
    /// Singular-series constant of the pattern.
    Constant {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PRIME_LIMIT)]
        prime_limit: u64,
    },
    /// Deviation report: actual versus predicted counts.
    Table {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', required = true)]
        x: Vec<u64>,
        #[arg(long, value_parser = parse_count, default_value_t = TABLE_PRIME_LIMIT)]
        prime_limit: u64,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct PolysArg {
    /// Constant-first coefficients, polynomials separated by ';' (1,0,1 is n^2+1).
    #[arg(long, value_parser = parse_polys)]
    pub polys: PolynomialSystem,
}

#[derive(Debug, Subcommand)]
pub enum BhCommand {
    /// Count n in [n_start, x] where every polynomial is prime.
    Count {
        #[command(flatten)]
        polys: PolysArg,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e4")]
        x: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        n_start: u64,
    },
    /// Bateman-Horn constant.
    Constant {
        #[command(flatten)]
        polys: PolysArg,
        #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PRIME_LIMIT)]
        prime_limit: u64,
    },
    /// Deviation report: actual versus predicted counts.
    Table {
        #[command(flatten)]
        polys: PolysArg,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', required = true)]
        x: Vec<u64>,
        #[arg(long, value_parser = parse_count, default_value_t = TABLE_PRIME_LIMIT)]
        prime_limit: u64,
        #[arg(long, default_value_t = 1)]
        n_start: u64,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Classic,
    Tuple,
    Bh,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Classic)]
    pub model: ModelKind,
    /// Constant C of the tuple or Bateman-Horn law.
    #[arg(long = "C", alias = "constant")]
    pub constant: Option<f64>,
    /// Tuple size k (tuple model).
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Number of polynomials r (Bateman-Horn model).
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    /// Product of the polynomial degrees (Bateman-Horn model).
    #[arg(long, default_value_t = 1.0)]
    pub degree_product: f64,
    /// First urn; defaults to the smallest index with p_i <= 1.
    #[arg(long)]
    pub start: Option<u64>,
}

impl ModelArgs {
    fn build(&self) -> Result<UrnModel> {
        let need_c = || {
            self.constant
                .ok_or_else(|| Error::Usage("this model needs --C, e.g. --C 1.3203".into()))
        };
        let law = match self.model {
            ModelKind::Classic => UrnLaw::Classic,
            ModelKind::Tuple => UrnLaw::Tuple {
                constant: need_c()?,
                k: self.k,
            },
            ModelKind::Bh => UrnLaw::BatemanHorn {
                constant: need_c()?,
                degree_product: self.degree_product,
                r: self.r,
            },
        };
        match self.start {
            Some(s) => UrnModel::with_start(law, s),
            None => UrnModel::new(law),
        }
        .map_err(|e| match e {
            Error::Domain(m) => Error::Usage(m),
            other => other,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum CramerCommand {
    /// Monte Carlo batch compared with the exact moments.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_count, default_value = "1e5")]
        x: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Include every trial's z-score in JSON output.
        #[arg(long)]
        z_scores: bool,
    },
    /// Lyapunov ratio and its bound 1/sqrt(D_n).
    Lyapunov {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e4,1e5,1e6")]
        x: Vec<u64>,
    },
    /// Exact mean, variance and standard deviation of the count.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e5")]
        x: Vec<u64>,
    },
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e5,1e6")]
    pub x: Vec<u64>,
}

/// Parses `100000`, `1e5` or `1.8e5`; the value must be a whole number.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim().replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t
        .parse()
        .map_err(|_| format!("cannot read {s:?} as a count (try 100000 or 1e5)"))?;
    if !f.is_finite() || f < 0.0 || f.fract() != 0.0 || f > 2f64.powi(63) {
        return Err(format!("{s:?} is not a non-negative whole number"));
    }
    Ok(f as u64)
}

pub fn parse_count_list(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(',').map(parse_count).collect()
}

fn parse_pattern(s: &str) -> std::result::Result<TuplePattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_polys(s: &str) -> std::result::Result<PolynomialSystem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Flattens a serializable value into ordered scalar columns.
fn flatten_record(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_record(&key, v, out);
            }
        }
        Value::Array(_) => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_cell(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn render_records<T: Serialize>(records: &[T], format: Format) -> Result<Vec<u8>> {
    let values: Vec<Value> = records
        .iter()
        .map(|r| serde_json::to_value(r).map_err(|e| Error::Contract(e.to_string())))
        .collect::<Result<_>>()?;
    if format == Format::Json {
        let v = if values.len() == 1 {
            values.into_iter().next().unwrap()
        } else {
            Value::Array(values)
        };
        let mut out = serde_json::to_vec_pretty(&v).map_err(|e| Error::Contract(e.to_string()))?;
        out.push(b'\n');
        return Ok(out);
    }
    let rows: Vec<Vec<(String, String)>> = values
        .iter()
        .map(|v| {
            let mut cols = Vec::new();
            flatten_record("", v, &mut cols);
            cols
        })
        .collect();
    let header: Vec<String> = rows
        .first()
        .map(|r| r.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for r in &rows {
                let cells: Vec<String> = r.iter().map(|(_, v)| csv_cell(v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        _ => {
            let mut widths: Vec<usize> = header.iter().map(String::len).collect();
            for r in &rows {
                for (w, (_, v)) in widths.iter_mut().zip(r) {
                    *w = (*w).max(v.len());
                }
            }
            let fmt_line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            out.push_str(&fmt_line(header.iter().map(String::as_str).collect()));
            out.push('\n');
            for r in &rows {
                out.push_str(&fmt_line(r.iter().map(|(_, v)| v.as_str()).collect()));
                out.push('\n');
            }
        }
    }
    Ok(out.into_bytes())
}

#[derive(Serialize)]
struct CountRecord {
    subject: String,
    x: u64,
    count: u64,
}

#[derive(Serialize)]
struct ConstantRecord {
    subject: String,
    method: String,
    #[serde(flatten)]
    result: SingularSeriesResult,
}

#[derive(Serialize)]
struct MomentRecord {
    model: UrnModel,
    x: u64,
    mean: f64,
    variance: f64,
    sd: f64,
}

#[derive(Serialize)]
struct LyapunovRecord {
    model: UrnModel,
    #[serde(flatten)]
    check: crate::cramer::LyapunovCheck,
}

#[derive(Serialize)]
struct SimulationRecord {
    model: UrnModel,
    #[serde(flatten)]
    summary: Value,
}

fn require_admissible(p: &TuplePattern) -> Result<()> {
    match p.obstructing_prime() {
        Some(prime) => Err(Error::Inadmissible { prime }),
        None => Ok(()),
    }
}

fn caveats(system: &PolynomialSystem, c: &BhConstant, err: &mut Vec<u8>) {
    if !c.result.tail_rigorous {
        let _ = writeln!(
            err,
            "note: the tail estimate for primes above {} is heuristic for this system",
            c.result.prime_limit
        );
    }
    if system.has_repeats() {
        let _ = writeln!(
            err,
            "note: the system repeats a polynomial; the heuristic counts it twice"
        );
    }
    if system.polys().iter().any(|f| f.degree() > 1) {
        let _ = writeln!(err, "note: irreducibility of the polynomials is not checked");
    }
}

fn execute(cli: &Cli, err: &mut Vec<u8>) -> Result<Vec<u8>> {
    let format: Format = cli.format.into();
    match &cli.command {
        Command::Tuples(cmd) => match cmd {
            TuplesCommand::Count { pattern, x } => {
                let pattern = &pattern.pattern;
                require_admissible(pattern)?;
                let xs = x.clone();
                let max = xs.iter().copied().max().unwrap_or(2);
                let table = sieve_primes((max + pattern.max_offset()).max(2))?;
                let records = xs
                    .iter()
                    .map(|&x| {
                        Ok(CountRecord {
                            subject: pattern.to_string(),
                            x,
                            count: count_prime_tuples(pattern, x, &table)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                render_records(&records, format)
            }
            TuplesCommand::Constant {
                pattern,
                prime_limit,
            } => {
                let pattern = &pattern.pattern;
                require_admissible(pattern)?;
                let result = tuple_constant(pattern, *prime_limit)?;
                render_records(
                    &[ConstantRecord {
                        subject: pattern.to_string(),
                        method: "tuple".into(),
                        result,
                    }],
                    format,
                )
            }
            TuplesCommand::Table {
                pattern,
                x,
                prime_limit,
                tol,
            } => {
                let report = tuple_report(&pattern.pattern, &x.clone(), *prime_limit, *tol)?;
                render(&report, format)
            }
        },
        Command::Bh(cmd) => match cmd {
            BhCommand::Count { polys, x, n_start } => {
                let system = &polys.polys;
                let xs = x.clone();
                let table = value_table(system, xs.iter().copied().max().unwrap_or(2))?;
                let records = xs
                    .iter()
                    .map(|&x| {
                        Ok(CountRecord {
                            subject: system.to_string(),
                            x,
                            count: count_prime_values(system, x, *n_start, &table)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                render_records(&records, format)
            }
            BhCommand::Constant { polys, prime_limit } => {
                let system = &polys.polys;
                let c = bh_constant(system, *prime_limit)?;
                caveats(system, &c, err);
                let method = serde_json::to_value(c.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                render_records(
                    &[ConstantRecord {
                        subject: system.to_string(),
                        method,
                        result: c.result,
                    }],
                    format,
                )
            }
            BhCommand::Table {
                polys,
                x,
                prime_limit,
                n_start,
                tol,
            } => {
                let system = &polys.polys;
                let report = bh_report(system, &x.clone(), *prime_limit, *n_start, *tol)?;
                if !report.metadata.tail_rigorous {
                    let _ = writeln!(err, "note: the constant's tail estimate is heuristic");
                }
                render(&report, format)
            }
        },
        Command::Cramer(cmd) => match cmd {
            CramerCommand::Simulate {
                model,
                x,
                trials,
                seed,
                z_scores,
            } => {
                let m = model.build()?;
                let summary = simulate_batch(&m, *x, *trials, *seed)?;
                let mut value =
                    serde_json::to_value(&summary).map_err(|e| Error::Contract(e.to_string()))?;
                if !z_scores {
                    if let Value::Object(map) = &mut value {
                        map.remove("z_scores");
                    }
                }
                render_records(&[SimulationRecord { model: m, summary: value }], format)
            }
            CramerCommand::Lyapunov { model, x } => {
                let m = model.build()?;
                let records = x
                    .iter()
                    .map(|&n| {
                        Ok(LyapunovRecord {
                            model: m,
                            check: lyapunov_ratio(&m, n)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                render_records(&records, format)
            }
            CramerCommand::Moments { model, x } => {
                let m = model.build()?;
                let records = x
                    .iter()
                    .map(|&x| {
                        let e = moments(&m, x)?;
                        Ok(MomentRecord {
                            model: m,
                            x,
                            mean: e.mean,
                            variance: e.variance,
                            sd: e.sd,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                render_records(&records, format)
            }
        },
        Command::Gap(args) => {
            let records = args
                .x
                .iter()
                .map(|&x| sum_integral_gap(x, args.r))
                .collect::<Result<Vec<_>>>()?;
            render_records(&records, format)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut notes = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli, &mut notes)),
            Err(e) => Err(Error::Resource(format!("cannot start worker pool: {e}"))),
        },
        None => execute(&cli, &mut notes),
    };
    let _ = err.write_all(&notes);
    let bytes = match result {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if e.is_usage() { 1 } else { 2 };
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &bytes),
        None => out.write_all(&bytes),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write output: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_in_scientific_notation() {
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("1.4e7"), Ok(14_000_000));
        assert_eq!(parse_count("1.8e5"), Ok(180_000));
        assert_eq!(parse_count("12345"), Ok(12345));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("abc").is_err());
        assert_eq!(parse_count_list("1e4,1e5"), Ok(vec![10_000, 100_000]));
    }

    #[test]
    fn flatten_nested() {
        let v = serde_json::json!({"a": 1, "b": {"c": "x", "d": [1, 2]}, "e": null});
        let mut cols = Vec::new();
        flatten_record("", &v, &mut cols);
        assert_eq!(
            cols,
            vec![
                ("a".to_string(), "1".to_string()),
                ("b.c".to_string(), "x".to_string()),
                ("e".to_string(), String::new()),
            ]
        );
    }
}
