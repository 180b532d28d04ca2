//! The set of source types for which the sensor switches on its non-zero
//! symbol: `{pi_U : D(pi_U || P_U) >= tau(x1)}` with
//! `tau(x1) = max_pi [D(pi || W0) - 3/2 D(pi || W1)]`, where `W0`, `W1` are the
//! warden's output laws for inputs `0` and `x1`.
//!
//! The objective rearranges to `H(pi)/2 + sum_z pi(z) ln(W1(z)^{3/2} / W0(z))`,
//! a Gibbs free energy, so the maximum is `1/2 ln sum_z W1^3 / W0^2` attained at
//! `pi* ∝ W1^3 / W0^2`.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::channel::Dmc;
use crate::error::{Error, Result};
use crate::math::{self, LogSum};
use crate::probability::{kl_nats, LogBase, Pmf};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbarSet {
    /// Index of the non-zero input symbol.
    pub x1: usize,
    /// Threshold in nats.
    pub tau_nats: f64,
    /// Warden output type attaining the threshold.
    pub maximizer: Pmf,
}

impl PbarSet {
    pub fn tau(&self, base: LogBase) -> f64 {
        base.from_nats(self.tau_nats)
    }
}

/// `D(pi || W0) - 3/2 D(pi || W1)` in nats (`-inf` if `pi` leaves `supp W1`).
pub fn pbar_objective(pi: &[f64], w0: &[f64], w1: &[f64]) -> f64 {
    match (kl_nats(pi, w0), kl_nats(pi, w1)) {
        (Some(a), Some(b)) => a - 1.5 * b,
        (None, _) => f64::INFINITY,
        (_, None) => f64::NEG_INFINITY,
    }
}

/// Closed-form threshold for input `x1`.
pub fn pbar_threshold(dmc: &Dmc, x1: usize) -> Result<PbarSet> {
    if x1 >= dmc.input_alphabet().len() || x1 == dmc.zero() {
        return Err(Error::InvalidArgument(format!("x1 = {x1} must be a non-zero input symbol")));
    }
    let w0 = dmc.z_row(dmc.zero()).probs();
    let w1 = dmc.z_row(x1).probs();
    let mut log_weights = Vec::with_capacity(w0.len());
    let mut total = LogSum::new();
    for (z, (&a, &b)) in w0.iter().zip(w1).enumerate() {
        if b > 0.0 && a == 0.0 {
            return Err(Error::SupportViolation(format!(
                "warden output `{}` is possible under input `{}` but not under the zero input, so the threshold is unbounded",
                dmc.z_alphabet().label(z),
                dmc.input_alphabet().label(x1)
            )));
        }
        let lw = if b > 0.0 { 3.0 * math::ln(b) - 2.0 * math::ln(a) } else { f64::NEG_INFINITY };
        total.add(lw);
        log_weights.push(lw);
    }
    let ln_total = total.ln();
    let maximizer: Vec<f64> = log_weights.iter().map(|&lw| math::exp(lw - ln_total)).collect();
    Ok(PbarSet {
        x1,
        // the maximum is at least D(W1 || W0) >= 0; clamp rounding noise
        tau_nats: (0.5 * ln_total).max(0.0),
        maximizer: Pmf::new(dmc.z_alphabet().clone(), maximizer)?,
    })
}

/// Membership of `pi_u` in the closed set `D(pi_u || p_u) >= tau`; types not
/// dominated by `p_u` have infinite divergence and always belong.
pub fn pbar_contains(pi_u: &Pmf, p_u: &Pmf, pbar: &PbarSet) -> bool {
    debug_assert_eq!(pi_u.alphabet(), p_u.alphabet());
    contains_raw(pi_u.probs(), p_u.probs(), pbar.tau_nats)
}

/// Slack on the membership test so that rounding in `tau` cannot drop
/// boundary types.
const MEMBERSHIP_SLACK: f64 = 1e-12;

pub(crate) fn contains_raw(pi_u: &[f64], p_u: &[f64], tau_nats: f64) -> bool {
    kl_nats(pi_u, p_u).map_or(true, |d| d >= tau_nats - MEMBERSHIP_SLACK)
}
