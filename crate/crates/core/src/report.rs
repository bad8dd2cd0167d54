//! Deviation reports: building them from a pattern or polynomial system and
//! rendering them as CSV, JSON or an aligned text table.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::batemanhorn::{bh_constant, bh_prediction_from_constant, count_prime_values, PolynomialSystem};
use crate::error::{Error, Result};
use crate::primes::{sieve_primes, PrimeTable};
use crate::stats::{deviation_row, DeviationRow};
use crate::tuples::{count_prime_tuples, predicted_from_constant, tuple_constant_with_table, TuplePattern};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest prime table built for polynomial-value lookups; bigger values
/// are tested with Miller-Rabin instead.
pub const VALUE_SIEVE_CAP: u64 = 1 << 26;

pub const CSV_HEADER: &str = "x,actual,predicted,difference,sd,z,band_probability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            other => Err(Error::Usage(format!(
                "unknown format {other:?}; expected csv, json or text"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Pattern (`0,4,6`) or polynomial system (`1,0,1`).
    pub subject: String,
    pub constant: f64,
    pub constant_method: String,
    /// Prime limit actually used for the constant.
    pub prime_limit: u64,
    pub tail_factor_bound: f64,
    pub tail_rigorous: bool,
    pub rel_tol: f64,
    /// Smallest argument `n` that is counted.
    pub n_start: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub metadata: ReportMetadata,
    pub rows: Vec<DeviationRow>,
}

impl Report {
    pub fn validate(&self) -> Result<()> {
        if !self.rows.windows(2).all(|w| w[0].x < w[1].x) {
            return Err(Error::Contract("report rows must be sorted by x".into()));
        }
        let m = &self.metadata;
        if self.title.is_empty()
            || m.subject.is_empty()
            || m.constant_method.is_empty()
            || m.version.is_empty()
        {
            return Err(Error::Contract("report metadata has an empty field".into()));
        }
        Ok(())
    }
}

/// Format `v` with `digits` significant digits in positional notation.
pub fn fmt_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let mut decimals = digits as i64 - 1 - magnitude;
    let mut s = format!("{:.*}", decimals.max(0) as usize, v);
    // rounding may carry into a new leading digit (9.999995 -> 10.00000)
    let int_digits = s.trim_start_matches('-').split('.').next().unwrap().trim_start_matches('0').len() as i64;
    if int_digits > magnitude + 1 && decimals > 0 {
        decimals -= 1;
        s = format!("{:.*}", decimals as usize, v);
    }
    if decimals < 0 {
        let scale = 10f64.powi((-decimals) as i32);
        s = format!("{:.0}", (v / scale).round() * scale);
    }
    s
}

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>> {
    report.validate()?;
    match format {
        Format::Csv => Ok(render_csv(report).into_bytes()),
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report)
                .map_err(|e| Error::Contract(format!("cannot serialize report: {e}")))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Text => Ok(render_text(report).into_bytes()),
    }
}

fn csv_fields(row: &DeviationRow) -> [String; 7] {
    [
        row.x.to_string(),
        row.actual.to_string(),
        fmt_significant(row.predicted, 6),
        format!("{:.2}", row.difference),
        fmt_significant(row.sd, 6),
        fmt_significant(row.z, 6),
        fmt_significant(row.band_probability, 6),
    ]
}

fn render_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&csv_fields(row).join(","));
        out.push('\n');
    }
    out
}

fn render_text(report: &Report) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "{}", report.title);
    let _ = writeln!(out, "subject          {}", m.subject);
    let _ = writeln!(
        out,
        "constant         {:.9} ({}, primes <= {}, tail factor <= {:.3e}{})",
        m.constant,
        m.constant_method,
        m.prime_limit,
        m.tail_factor_bound - 1.0,
        if m.tail_rigorous { "" } else { ", heuristic" }
    );
    let _ = writeln!(out, "quadrature tol   {:e}", m.rel_tol);
    let _ = writeln!(out, "counting from n  {}", m.n_start);
    let _ = writeln!(out, "version          {}", m.version);
    let _ = writeln!(out);

    let header = ["x", "actual", "predicted", "rounded", "difference", "sd", "z", "band_probability"];
    let rows: Vec<[String; 8]> = report
        .rows
        .iter()
        .map(|r| {
            let f = csv_fields(r);
            [
                f[0].clone(),
                f[1].clone(),
                f[2].clone(),
                r.predicted_rounded.to_string(),
                f[3].clone(),
                f[4].clone(),
                f[5].clone(),
                f[6].clone(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(&header));
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{}", line(&cells));
    }
    out
}

fn sorted_xs(xs: &[u64]) -> Vec<u64> {
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    xs
}

/// Actual and predicted counts of a tuple pattern at each `x`.
pub fn tuple_report(
    pattern: &TuplePattern,
    xs: &[u64],
    prime_limit: u64,
    rel_tol: f64,
) -> Result<Report> {
    if let Some(prime) = pattern.obstructing_prime() {
        return Err(Error::Inadmissible { prime });
    }
    let xs = sorted_xs(xs);
    let max_x = xs.last().copied().unwrap_or(2);
    let table = sieve_primes((max_x + pattern.max_offset()).max(prime_limit).max(2))?;
    let constant = tuple_constant_with_table(pattern, prime_limit, &table)?;
    let k = pattern.k() as u32;
    let rows = xs
        .iter()
        .map(|&x| {
            let actual = count_prime_tuples(pattern, x, &table)?;
            let m = predicted_from_constant(&constant, k, 1.0, x as f64, rel_tol)?;
            deviation_row(x, actual, &m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        title: format!("Prime {k}-tuples with pattern {pattern}"),
        metadata: ReportMetadata {
            subject: pattern.to_string(),
            constant: constant.value,
            constant_method: "tuple".into(),
            prime_limit: constant.prime_limit,
            tail_factor_bound: constant.tail_factor_bound,
            tail_rigorous: constant.tail_rigorous,
            rel_tol,
            n_start: 1,
            version: VERSION.into(),
        },
        rows,
    })
}

/// Prime table for looking up the values of `system` on `n <= max_x`.
pub fn value_table(system: &PolynomialSystem, max_x: u64) -> Result<PrimeTable> {
    let mut top: u64 = 2;
    for f in system.polys() {
        let v = f.eval(max_x)?;
        top = top.max(v.clamp(2, VALUE_SIEVE_CAP as i128) as u64);
    }
    sieve_primes(top.min(VALUE_SIEVE_CAP))
}

/// Actual and predicted prime-value counts of a polynomial system.
pub fn bh_report(
    system: &PolynomialSystem,
    xs: &[u64],
    prime_limit: u64,
    n_start: u64,
    rel_tol: f64,
) -> Result<Report> {
    let constant = bh_constant(system, prime_limit)?;
    if constant.result.vanished {
        return Err(Error::Degenerate(format!(
            "Bateman-Horn constant vanishes: every residue mod {} is a root",
            constant.result.vanishing_prime.unwrap_or(0)
        )));
    }
    let xs = sorted_xs(xs);
    let table = value_table(system, xs.last().copied().unwrap_or(2))?;
    let rows = xs
        .iter()
        .map(|&x| {
            let actual = count_prime_values(system, x, n_start, &table)?;
            let m = bh_prediction_from_constant(system, &constant.result, x as f64, rel_tol)?;
            deviation_row(x, actual, &m)
        })
        .collect::<Result<Vec<_>>>()?;
    let method = serde_json::to_value(constant.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "unknown".into());
    Ok(Report {
        title: format!(
            "Simultaneous prime values of {}",
            system
                .polys()
                .iter()
                .map(|f| f.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        metadata: ReportMetadata {
            subject: system.to_string(),
            constant: constant.result.value,
            constant_method: method,
            prime_limit: constant.result.prime_limit,
            tail_factor_bound: constant.result.tail_factor_bound,
            tail_rigorous: constant.result.tail_rigorous,
            rel_tol,
            n_start,
            version: VERSION.into(),
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cramer::MomentEstimates;

    fn sample() -> Report {
        let rows = vec![
            deviation_row(100_000, 1224, &MomentEstimates::new(1248.708820, 1226.5)).unwrap(),
            deviation_row(1_000_000, 8169, &MomentEstimates::new(8248.030249, 8171.4)).unwrap(),
        ];
        Report {
            title: "twins".into(),
            metadata: ReportMetadata {
                subject: "0,2".into(),
                constant: 1.3203236,
                constant_method: "tuple".into(),
                prime_limit: 10_000_000,
                tail_factor_bound: 1.0000000124,
                tail_rigorous: true,
                rel_tol: 1e-10,
                n_start: 1,
                version: VERSION.into(),
            },
            rows,
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_significant(1248.70882, 6), "1248.71");
        assert_eq!(fmt_significant(35.021477, 6), "35.0215");
        assert_eq!(fmt_significant(624896.996, 6), "624897");
        assert_eq!(fmt_significant(55490.8756, 6), "55490.9");
        assert_eq!(fmt_significant(9.9999996, 6), "10.0000");
        assert_eq!(fmt_significant(1234567.0, 6), "1234570");
        assert_eq!(fmt_significant(-0.71348, 6), "-0.713480");
        assert_eq!(fmt_significant(0.0, 6), "0");
    }

    #[test]
    fn csv_layout() {
        let csv = String::from_utf8(render(&sample(), Format::Csv).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first = lines.next().unwrap();
        assert!(first.starts_with("100000,1224,1248.71,24.71,35.0214,"), "{first}");
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut r = sample();
        r.rows.clear();
        let csv = render(&r, Format::Csv).unwrap();
        assert_eq!(csv, format!("{CSV_HEADER}\n").into_bytes());
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let bytes = render(&r, Format::Json).unwrap();
        let back: Report = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn text_has_every_row() {
        let text = String::from_utf8(render(&sample(), Format::Text).unwrap()).unwrap();
        assert!(text.contains("1248.71"));
        assert!(text.contains("8248.03"));
        assert!(text.contains(" 1249 "));
    }

    #[test]
    fn unsorted_rows_rejected() {
        let mut r = sample();
        r.rows.reverse();
        assert!(matches!(render(&r, Format::Csv), Err(Error::Contract(_))));
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert!(matches!("xml".parse::<Format>(), Err(Error::Usage(_))));
    }

    #[test]
    fn small_tuple_report() {
        let p: TuplePattern = "0,2".parse().unwrap();
        let r = tuple_report(&p, &[1000, 100], 10_000, 1e-10).unwrap();
        assert_eq!(r.rows.iter().map(|r| r.x).collect::<Vec<_>>(), vec![100, 1000]);
        assert_eq!(r.rows[0].actual, 8);
        assert_eq!(r.rows[1].actual, 35);
        let bad: TuplePattern = "0,2,4".parse().unwrap();
        assert_eq!(
            tuple_report(&bad, &[100], 1000, 1e-10).unwrap_err(),
            Error::Inadmissible { prime: 3 }
        );
    }
}
