//! Finite-`n` exponent extraction from a sweep of `beta_n` values.

use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub n: usize,
    /// `-(1/n) log2 beta_n`.
    pub exponent_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub points: Vec<ExponentPoint>,
    /// Least-squares slope of `-log2 beta_n` against `n`.
    pub slope: f64,
    pub intercept: f64,
    /// Blocklengths dropped because `beta_n` was exactly zero.
    pub excluded: Vec<usize>,
    /// Whether the per-`n` exponents increase along the grid; reported, not
    /// smoothed.
    pub monotone_increasing: bool,
}

/// Fits `-log2 beta_n` over `(n, ln beta_n)` pairs. Needs at least three
/// distinct blocklengths with `beta_n > 0`.
pub fn empirical_exponent(ln_betas: &[(usize, f64)]) -> Result<ExponentFit> {
    let mut sorted: Vec<(usize, f64)> = ln_betas.to_vec();
    sorted.sort_by_key(|p| p.0);
    sorted.dedup_by_key(|p| p.0);
    let (mut points, mut excluded) = (Vec::new(), Vec::new());
    for &(n, ln_beta) in &sorted {
        if ln_beta == f64::NEG_INFINITY || n == 0 {
            excluded.push(n);
        } else {
            points.push(ExponentPoint { n, exponent_bits: -ln_beta * math::LOG2_E / n as f64 });
        }
    }
    if points.len() < 3 {
        return Err(Error::DegenerateInput(alloc::format!(
            "{} usable blocklengths (beta_n = 0 at {:?}); need at least 3",
            points.len(),
            excluded
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.exponent_bits * p.n as f64).collect();
    let (slope, intercept) = math::linear_fit(&xs, &ys);
    let monotone_increasing = points.windows(2).all(|w| w[1].exponent_bits >= w[0].exponent_bits);
    Ok(ExponentFit { points, slope, intercept, excluded, monotone_increasing })
}
