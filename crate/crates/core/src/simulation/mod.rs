//! The two achievability schemes: encoders, decision rules, an exact
//! error-probability engine over types, and a Monte-Carlo engine.
//!
//! Sparse scheme (`A`): the sensor sends `x_hat^k` on the first `k(n)` uses
//! when `U^n` is atypical and zeros otherwise; the decision center accepts
//! the null iff `y_star` appears among those `k` outputs and `V^n` is
//! typical. Threshold scheme (`B`): the sensor sends `x1^n` iff the type of
//! `U^n` falls in the switching set; the decision center accepts iff both
//! `V^n` and `Y^n` are typical, the latter for the zero-input output law.

mod exact;
mod fit;
mod monte_carlo;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::Dmc;
use crate::error::{Error, Result};
use crate::exponents::pbar::{contains_raw, pbar_threshold, PbarSet};
use crate::math;
use crate::probability::{counts_are_typical, Categorical, JointPmf, Pmf, Sequence};

pub use exact::{exact_error_probs, ExactErrors, EXACT_MAX_ALPHABET, EXACT_WORK_BUDGET};
pub use fit::{empirical_exponent, ExponentFit, ExponentPoint};
pub use monte_carlo::{
    run_trials, simulate_trial, trial_seed, wilson_interval, Estimate, Method, SimulationResult, Tally,
    TrialOutcome, WeightStats, WILSON_Z,
};

/// Number of active channel uses for the sparse scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// `ceil(sqrt n)`
    Sqrt,
    /// `ceil(ln n)`
    Log,
    /// `ceil(n^exponent)` with `0 < exponent < 1`
    Power { exponent: f64 },
}

impl Default for KRule {
    fn default() -> Self {
        KRule::Sqrt
    }
}

impl KRule {
    /// `k(n)`, clamped to `1..=n`.
    pub fn k(&self, n: usize) -> usize {
        let nf = n as f64;
        let raw = match *self {
            KRule::Sqrt => math::ceil(math::sqrt(nf)),
            KRule::Log => math::ceil(math::ln(nf)),
            KRule::Power { exponent } => math::ceil(math::powf(nf, exponent)),
        };
        (raw as usize).clamp(1, n.max(1))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            KRule::Power { exponent } if !(exponent > 0.0 && exponent < 1.0) => Err(Error::ConfigMismatch(format!(
                "k-rule exponent {exponent} must lie in (0, 1) so that k(n)/n -> 0"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    A { x_hat: usize, y_star: usize, #[serde(default)] k_rule: KRule },
    B { x1: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::A { .. } => "A",
            Scheme::B { .. } => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Strong-typicality slack.
    pub mu: f64,
}

impl SchemeConfig {
    pub fn scheme_a(x_hat: usize, y_star: usize, k_rule: KRule, mu: f64) -> Self {
        Self { scheme: Scheme::A { x_hat, y_star, k_rule }, mu }
    }

    pub fn scheme_b(x1: usize, mu: f64) -> Self {
        Self { scheme: Scheme::B { x1 }, mu }
    }

    /// Active channel uses at blocklength `n`.
    pub fn active_uses(&self, n: usize) -> usize {
        match self.scheme {
            Scheme::A { k_rule, .. } => k_rule.k(n),
            Scheme::B { .. } => n,
        }
    }

    /// The symbol sent when the sensor raises the alarm.
    pub fn alarm_symbol(&self) -> usize {
        match self.scheme {
            Scheme::A { x_hat, .. } => x_hat,
            Scheme::B { x1 } => x1,
        }
    }

    /// Checks the configuration against a channel.
    pub fn validate(&self, dmc: &Dmc) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::ConfigMismatch(format!("mu = {} must be positive", self.mu)));
        }
        let x = self.alarm_symbol();
        if x >= dmc.input_alphabet().len() || x == dmc.zero() {
            return Err(Error::ConfigMismatch(format!("input {x} is not a non-zero channel input")));
        }
        if let Scheme::A { x_hat, y_star, k_rule } = self.scheme {
            k_rule.validate()?;
            if y_star >= dmc.y_alphabet().len() {
                return Err(Error::ConfigMismatch(format!("output {y_star} is out of range")));
            }
            if !(dmc.y_row(dmc.zero()).prob(y_star) > 0.0 && dmc.y_row(x_hat).prob(y_star) == 0.0) {
                return Err(Error::ConfigMismatch(format!(
                    "(x_hat, y_star) = ({}, {}) needs W(y_star|0) > 0 and W(y_star|x_hat) = 0",
                    dmc.input_alphabet().label(x_hat),
                    dmc.y_alphabet().label(y_star)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Whether the sparse-scheme sensor raises the alarm for these counts.
pub(crate) fn sparse_alarm(u_counts: &[usize], p_u: &[f64], mu: f64) -> bool {
    !counts_are_typical(u_counts, p_u, mu)
}

/// Whether the threshold-scheme sensor raises the alarm for these counts.
pub(crate) fn threshold_alarm(u_counts: &[usize], p_u: &[f64], tau_nats: f64) -> bool {
    let n: usize = u_counts.iter().sum();
    let pi: Vec<f64> = u_counts.iter().map(|&c| c as f64 / n as f64).collect();
    contains_raw(&pi, p_u, tau_nats)
}

fn encoded(dmc: &Dmc, symbol: usize, active: usize, n: usize) -> Sequence {
    let mut data = alloc::vec![dmc.zero(); n];
    data[..active].iter_mut().for_each(|x| *x = symbol);
    Sequence::from_parts_unchecked(dmc.input_alphabet().clone(), data)
}

/// Sparse-scheme encoder: `x_hat^k 0^{n-k}` if `u` is atypical for `p_u`,
/// else `0^n`.
pub fn encode_scheme_a(u: &Sequence, cfg: &SchemeConfig, p_u: &Pmf, dmc: &Dmc) -> Result<Sequence> {
    let Scheme::A { x_hat, k_rule, .. } = cfg.scheme else {
        return Err(Error::ConfigMismatch("sparse encoder needs a scheme-A configuration".into()));
    };
    u.alphabet().ensure_same(p_u.alphabet(), "encode_scheme_a")?;
    let n = u.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let k = k_rule.k(n);
    let active = if sparse_alarm(&u.counts(), p_u.probs(), cfg.mu) { k } else { 0 };
    Ok(encoded(dmc, x_hat, active, n))
}

/// Sparse-scheme decision: `H0` iff `y_star` occurs among the first `k(n)`
/// outputs and `v` is typical for `p_v`.
pub fn decide_scheme_a(v: &Sequence, y: &Sequence, cfg: &SchemeConfig, p_v: &Pmf) -> Result<Hypothesis> {
    let Scheme::A { y_star, k_rule, .. } = cfg.scheme else {
        return Err(Error::ConfigMismatch("sparse decision needs a scheme-A configuration".into()));
    };
    if v.len() != y.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: y.len() });
    }
    v.alphabet().ensure_same(p_v.alphabet(), "decide_scheme_a")?;
    let k = k_rule.k(y.len());
    let seen = y.data()[..k].contains(&y_star);
    let typical = counts_are_typical(&v.counts(), p_v.probs(), cfg.mu);
    Ok(if seen && typical { Hypothesis::H0 } else { Hypothesis::H1 })
}

/// Threshold-scheme encoder: `x1^n` iff the type of `u` is in the
/// switching set, else `0^n`.
pub fn encode_scheme_b(u: &Sequence, cfg: &SchemeConfig, p_u: &Pmf, pbar: &PbarSet, dmc: &Dmc) -> Result<Sequence> {
    let Scheme::B { x1 } = cfg.scheme else {
        return Err(Error::ConfigMismatch("threshold encoder needs a scheme-B configuration".into()));
    };
    if pbar.x1 != x1 {
        return Err(Error::ConfigMismatch("switching set built for a different input".into()));
    }
    u.alphabet().ensure_same(p_u.alphabet(), "encode_scheme_b")?;
    let n = u.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let active = if threshold_alarm(&u.counts(), p_u.probs(), pbar.tau_nats) { n } else { 0 };
    Ok(encoded(dmc, x1, active, n))
}

/// Threshold-scheme decision: `H0` iff `v` is typical for `p_v` and `y` is
/// typical for the zero-input output law.
pub fn decide_scheme_b(v: &Sequence, y: &Sequence, cfg: &SchemeConfig, p_v: &Pmf, dmc: &Dmc) -> Result<Hypothesis> {
    if v.len() != y.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: y.len() });
    }
    v.alphabet().ensure_same(p_v.alphabet(), "decide_scheme_b")?;
    y.alphabet().ensure_same(dmc.y_alphabet(), "decide_scheme_b")?;
    let v_ok = counts_are_typical(&v.counts(), p_v.probs(), cfg.mu);
    let y_ok = counts_are_typical(&y.counts(), dmc.y_row(dmc.zero()).probs(), cfg.mu);
    Ok(if v_ok && y_ok { Hypothesis::H0 } else { Hypothesis::H1 })
}

/// A validated scheme bound to its sources and channel, with samplers
/// prepared for repeated trials.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: SchemeConfig,
    pub p_uv: JointPmf,
    pub q_uv: JointPmf,
    pub dmc: Dmc,
    pub(crate) p_u: Pmf,
    pub(crate) p_v: Pmf,
    pub(crate) pbar: Option<PbarSet>,
    pub(crate) samplers: [Categorical; 2],
    pub(crate) y_samplers: Vec<Categorical>,
}

impl Experiment {
    pub fn new(cfg: SchemeConfig, p_uv: &JointPmf, q_uv: &JointPmf, dmc: &Dmc) -> Result<Self> {
        p_uv.row_alphabet().ensure_same(q_uv.row_alphabet(), "source U alphabets")?;
        p_uv.col_alphabet().ensure_same(q_uv.col_alphabet(), "source V alphabets")?;
        cfg.validate(dmc)?;
        let pbar = match cfg.scheme {
            Scheme::B { x1 } => Some(pbar_threshold(dmc, x1)?),
            Scheme::A { .. } => None,
        };
        Ok(Self {
            cfg,
            p_uv: p_uv.clone(),
            q_uv: q_uv.clone(),
            dmc: dmc.clone(),
            p_u: p_uv.row_marginal(),
            p_v: p_uv.col_marginal(),
            pbar,
            samplers: [Categorical::new(p_uv.flat_probs()), Categorical::new(q_uv.flat_probs())],
            y_samplers: dmc.y_given_x().rows().iter().map(|r| Categorical::new(r.probs())).collect(),
        })
    }

    pub fn pbar(&self) -> Option<&PbarSet> {
        self.pbar.as_ref()
    }

    pub fn source(&self, h: Hypothesis) -> &JointPmf {
        match h {
            Hypothesis::H0 => &self.p_uv,
            Hypothesis::H1 => &self.q_uv,
        }
    }

    /// Whether the sensor raises the alarm for these `U` counts.
    pub fn alarm(&self, u_counts: &[usize]) -> bool {
        match (&self.cfg.scheme, &self.pbar) {
            (Scheme::B { .. }, Some(pbar)) => threshold_alarm(u_counts, self.p_u.probs(), pbar.tau_nats),
            _ => sparse_alarm(u_counts, self.p_u.probs(), self.cfg.mu),
        }
    }

    /// Sensor output for a full source sequence.
    pub fn encode(&self, u: &Sequence) -> Result<Sequence> {
        match &self.pbar {
            Some(pbar) => encode_scheme_b(u, &self.cfg, &self.p_u, pbar, &self.dmc),
            None => encode_scheme_a(u, &self.cfg, &self.p_u, &self.dmc),
        }
    }

    /// Decision for full `V` and `Y` sequences.
    pub fn decide(&self, v: &Sequence, y: &Sequence) -> Result<Hypothesis> {
        match self.cfg.scheme {
            Scheme::A { .. } => decide_scheme_a(v, y, &self.cfg, &self.p_v),
            Scheme::B { .. } => decide_scheme_b(v, y, &self.cfg, &self.p_v, &self.dmc),
        }
    }
}
