//! Versioned CSV/JSON result files.
//!
//! Every CSV starts with a `#` line naming its schema and version, followed
//! by a fixed header; readers reject files whose schema line or header
//! differs instead of reinterpreting columns.

use std::io::{BufRead, Write};

use covert_dht_core::covertness::CovertnessReport;
use covert_dht_core::simulation::{Estimate, Method};
use covert_dht_core::{LogBase, SimulationResult};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SIMULATE_SCHEMA: &str = "# covert-dht simulate v1 base=bits";
pub const SIMULATE_COLUMNS: &[&str] = &[
    "scheme", "n", "mu", "k", "alpha", "alpha_ci", "beta", "beta_ci", "method", "seed", "beta_exponent_bits",
    "mean_weight", "abar",
];

pub const COVERTNESS_SCHEMA: &str = "# covert-dht verify-covertness v1 base=bits";
pub const COVERTNESS_COLUMNS: &[&str] = &[
    "n", "k", "delta_n", "d_n_exact", "quad_bound", "type_bound", "log2_d_n", "log2_quad_bound", "within_quad_bound",
];

/// Probability column: the value, or `<bound` when Monte Carlo saw no
/// events (rule of three).
fn probability(e: &Estimate) -> String {
    match e.below {
        Some(b) => format!("<{b:e}"),
        None => format!("{:e}", e.value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub scheme: String,
    pub n: usize,
    pub mu: f64,
    pub k: usize,
    pub alpha: String,
    pub alpha_ci: f64,
    pub beta: String,
    pub beta_ci: f64,
    pub method: String,
    pub seed: Option<u64>,
    /// `-(1/n) log2 beta_n`; a lower bound when `beta` is `<bound`.
    pub beta_exponent_bits: f64,
    pub mean_weight: f64,
    pub abar: f64,
}

impl SimulateRow {
    pub fn new(r: &SimulationResult) -> Self {
        Self {
            scheme: r.scheme.to_string(),
            n: r.n,
            mu: r.mu,
            k: r.k,
            alpha: probability(&r.alpha),
            alpha_ci: r.alpha.ci_half_width,
            beta: probability(&r.beta),
            beta_ci: r.beta.ci_half_width,
            method: match r.alpha.method {
                Method::Exact => "exact",
                Method::Mc => "mc",
            }
            .into(),
            seed: r.seed,
            beta_exponent_bits: -r.beta.ln_or_bound() * std::f64::consts::LOG2_E / r.n as f64,
            mean_weight: r.weight_stats.mean_weight_fraction,
            abar: r.weight_stats.abar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertnessRow {
    pub n: usize,
    pub k: usize,
    pub delta_n: f64,
    pub d_n_exact: Option<f64>,
    pub quad_bound: f64,
    pub type_bound: f64,
    pub log2_d_n: Option<f64>,
    pub log2_quad_bound: f64,
    pub within_quad_bound: bool,
}

/// `log2` of a nats-valued quantity once expressed in bits.
fn log2_in_bits(ln_nats: f64) -> f64 {
    (ln_nats - std::f64::consts::LN_2.ln()) * std::f64::consts::LOG2_E
}

impl CovertnessRow {
    pub fn new(r: &CovertnessReport) -> Self {
        debug_assert_eq!(r.base, LogBase::Bits);
        Self {
            n: r.n,
            k: r.active_uses,
            delta_n: r.delta_n.value,
            d_n_exact: r.d_n(),
            quad_bound: r.quad_bound(),
            type_bound: r.type_bound(),
            log2_d_n: r.d_n_exact.map(|d| log2_in_bits(d.ln)),
            log2_quad_bound: log2_in_bits(r.bounds.quad.ln),
            within_quad_bound: r.within_quad_bound(),
        }
    }
}

/// Writes `rows` under a schema line and a fixed header, then optional
/// trailing `#` comment lines.
pub fn write_csv<W: Write + ?Sized, R: Serialize>(
    out: &mut W,
    schema: &str,
    columns: &[&str],
    rows: &[R],
    trailer: &[String],
) -> Result<(), CliError> {
    writeln!(out, "{schema}")?;
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
        w.write_record(columns)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    for line in trailer {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`], rejecting schema or header
/// mismatches.
pub fn read_csv<R: BufRead, T: for<'de> Deserialize<'de>>(
    mut input: R,
    schema: &str,
    columns: &[&str],
) -> Result<Vec<T>, CliError> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    if first.trim_end() != schema {
        return Err(CliError::Parse(format!("expected schema line `{schema}`, found `{}`", first.trim_end())));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != columns {
        return Err(CliError::Parse(format!("header mismatch: expected {columns:?}, found {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(beta: &str) -> SimulateRow {
        SimulateRow {
            scheme: "B".into(),
            n: 40,
            mu: 0.05,
            k: 40,
            alpha: "1.5e-2".into(),
            alpha_ci: 0.0,
            beta: beta.into(),
            beta_ci: 0.0,
            method: "exact".into(),
            seed: None,
            beta_exponent_bits: 0.117,
            mean_weight: 0.01,
            abar: 0.1,
        }
    }

    #[test]
    fn round_trip_and_header_check() {
        let rows = vec![row("1e-3"), row("<3e-6")];
        let mut buf = Vec::new();
        write_csv(&mut buf, SIMULATE_SCHEMA, SIMULATE_COLUMNS, &rows, &["fit slope 0.1".into()]).unwrap();
        let back: Vec<SimulateRow> = read_csv(&buf[..], SIMULATE_SCHEMA, SIMULATE_COLUMNS).unwrap();
        assert_eq!(back, rows);

        let text = String::from_utf8(buf).unwrap();
        let renamed = text.replacen("beta_ci", "beta_err", 1);
        assert!(read_csv::<_, SimulateRow>(renamed.as_bytes(), SIMULATE_SCHEMA, SIMULATE_COLUMNS).is_err());
        let old = text.replacen("v1", "v0", 1);
        assert!(read_csv::<_, SimulateRow>(old.as_bytes(), SIMULATE_SCHEMA, SIMULATE_COLUMNS).is_err());
    }
}
