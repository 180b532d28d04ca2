//! Stein exponents under a covertness constraint.
//!
//! * `E1 = min D(pi_UV || Q_UV)` over couplings of `(P_U, P_V)`: the exact
//!   exponent when the channel is partially connected.
//! * `E2(x1)`: the same divergence with only `pi_V = P_V` fixed, minimised
//!   over source types the sensor maps to the zero symbol
//!   (`D(pi_U || P_U) <= tau(x1)`, closure of the complement of the
//!   switching set).
//! * `E3(x1)`: minimised over types that trigger `x1`, plus the receiver's
//!   channel divergence `D(W_Y(.|0) || W_Y(.|x1))`; `E3 = max_x1 E3(x1)`.
//!
//! Everything is computed in nats and converted once when a report is built.

pub mod ipf;
pub mod pbar;
mod search;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::channel::{validate_covert_conditions, Dmc};
use crate::error::{Error, Result};
use crate::probability::{kl_divergence, kl_nats_or_inf, JointPmf, LogBase, Pmf};

pub use ipf::i_projection_coupling;
pub use pbar::{pbar_contains, pbar_objective, pbar_threshold, PbarSet};
pub use search::SearchOptions;

use search::{CouplingCost, Region};

/// Optimum of one of the divergence programs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    /// `+inf` when the feasible region is empty or unreachable.
    #[serde(with = "crate::serde_float")]
    pub value_nats: f64,
    pub pi_u: Option<Pmf>,
    /// Optimal joint law `pi_UV`.
    pub coupling: Option<JointPmf>,
}

impl Minimum {
    pub fn value(&self, base: LogBase) -> f64 {
        base.from_nats(self.value_nats)
    }

    fn infinite() -> Self {
        Self { value_nats: f64::INFINITY, pi_u: None, coupling: None }
    }
}

fn check_sources(p_uv: &JointPmf, q_uv: &JointPmf) -> Result<()> {
    p_uv.row_alphabet().ensure_same(q_uv.row_alphabet(), "source U alphabets")?;
    p_uv.col_alphabet().ensure_same(q_uv.col_alphabet(), "source V alphabets")?;
    if !p_uv.is_dominated_by(q_uv) {
        return Err(Error::SupportViolation(
            "P_UV puts mass where Q_UV has none, so every exponent is infinite".into(),
        ));
    }
    Ok(())
}

fn cost<'a>(q_uv: &'a JointPmf, p_v: &'a Pmf, opts: &SearchOptions) -> CouplingCost<'a> {
    CouplingCost { q: q_uv.probs(), p_v: p_v.probs(), tol: opts.ipf_tol, max_iter: opts.ipf_max_iter }
}

fn minimum_from(q_uv: &JointPmf, c: &CouplingCost<'_>, found: Option<search::Found>) -> Result<Minimum> {
    let Some(found) = found else { return Ok(Minimum::infinite()) };
    let coupling = c
        .coupling(&found.pi_u)?
        .map(|p| JointPmf::new(q_uv.row_alphabet().clone(), q_uv.col_alphabet().clone(), p))
        .transpose()?;
    Ok(Minimum {
        value_nats: found.value,
        pi_u: Some(Pmf::new(q_uv.row_alphabet().clone(), found.pi_u)?),
        coupling,
    })
}

/// Exponent of the decision center ignoring the sensor: `D(P_V || Q_V)`.
pub fn local_exponent(p_v: &Pmf, q_v: &Pmf, base: LogBase) -> Result<f64> {
    kl_divergence(p_v, q_v, base)
}

/// `T_U(u) = sum_v P_V(v) Q_{U|V}(u|v)`, the U-marginal of the coupling
/// that attains the local exponent.
pub fn compute_t_u(p_v: &Pmf, q_uv: &JointPmf) -> Result<Pmf> {
    p_v.alphabet().ensure_same(q_uv.col_alphabet(), "compute_t_u")?;
    let q_v = q_uv.col_marginal();
    let mut t = alloc::vec![0.0; q_uv.n_rows()];
    for v in p_v.support() {
        if q_v.prob(v) <= 0.0 {
            return Err(Error::ConditionalUndefined(p_v.alphabet().label(v).into()));
        }
        let w = p_v.prob(v) / q_v.prob(v);
        for (u, tu) in t.iter_mut().enumerate() {
            *tu += w * q_uv.get(u, v);
        }
    }
    Pmf::new(q_uv.row_alphabet().clone(), t)
}

/// `E1`: I-projection of `Q_UV` onto couplings of the true marginals.
pub fn compute_e1(p_uv: &JointPmf, q_uv: &JointPmf, opts: &SearchOptions) -> Result<Minimum> {
    check_sources(p_uv, q_uv)?;
    let p_u = p_uv.row_marginal();
    let p_v = p_uv.col_marginal();
    let pi = i_projection_coupling(q_uv, &p_u, &p_v, opts.ipf_tol, opts.ipf_max_iter)?;
    Ok(Minimum {
        value_nats: ipf::divergence_nats(pi.probs(), q_uv.probs()),
        pi_u: Some(p_u),
        coupling: Some(pi),
    })
}

/// `E2(x1)`: infimum over the divergence ball `D(pi_U || P_U) <= tau(x1)`.
pub fn compute_e2(p_uv: &JointPmf, q_uv: &JointPmf, pbar: &PbarSet, opts: &SearchOptions) -> Result<Minimum> {
    check_sources(p_uv, q_uv)?;
    let p_u = p_uv.row_marginal();
    let p_v = p_uv.col_marginal();
    let t_u = compute_t_u(&p_v, q_uv)?;
    let c = cost(q_uv, &p_v, opts);
    let found = search::minimize(&c, p_u.probs(), t_u.probs(), pbar.tau_nats, Region::Inside, opts)?;
    minimum_from(q_uv, &c, found)
}

/// Source part of `E3(x1)`: infimum over the switching set
/// `D(pi_U || P_U) >= tau(x1)`.
pub fn compute_e3_source(p_uv: &JointPmf, q_uv: &JointPmf, pbar: &PbarSet, opts: &SearchOptions) -> Result<Minimum> {
    check_sources(p_uv, q_uv)?;
    let p_u = p_uv.row_marginal();
    let p_v = p_uv.col_marginal();
    let t_u = compute_t_u(&p_v, q_uv)?;
    let c = cost(q_uv, &p_v, opts);
    let found = search::minimize(&c, p_u.probs(), t_u.probs(), pbar.tau_nats, Region::Outside, opts)?;
    minimum_from(q_uv, &c, found)
}

/// `E3(x1)` split into its two summands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E3Term {
    pub pbar: PbarSet,
    pub source: Minimum,
    /// `D(W_Y(.|0) || W_Y(.|x1))` in nats.
    #[serde(with = "crate::serde_float")]
    pub channel_nats: f64,
}

impl E3Term {
    pub fn total_nats(&self) -> f64 {
        self.source.value_nats + self.channel_nats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E3Result {
    #[serde(with = "crate::serde_float")]
    pub value_nats: f64,
    /// Index of the maximising input (smallest index on ties).
    pub best_x1: usize,
    /// One entry per non-zero input, in alphabet order.
    pub terms: Vec<E3Term>,
}

impl E3Result {
    pub fn value(&self, base: LogBase) -> f64 {
        base.from_nats(self.value_nats)
    }
}

/// `E3 = max_x1 E3(x1)`.
pub fn compute_e3(p_uv: &JointPmf, q_uv: &JointPmf, dmc: &Dmc, opts: &SearchOptions) -> Result<E3Result> {
    let mut terms = Vec::new();
    for x1 in dmc.nonzero_inputs() {
        let pbar = pbar_threshold(dmc, x1)?;
        let source = compute_e3_source(p_uv, q_uv, &pbar, opts)?;
        let channel_nats = kl_nats_or_inf(dmc.y_row(dmc.zero()).probs(), dmc.y_row(x1).probs());
        terms.push(E3Term { pbar, source, channel_nats });
    }
    let (best, value) = terms
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, t)| if t.total_nats() > bv { (i, t.total_nats()) } else { (bi, bv) });
    Ok(E3Result { value_nats: value, best_x1: terms[best].pbar.x1, terms })
}

/// Whether communication can beat the local exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Improvement {
    /// `T_U = P_U` (e.g. testing against independence), or no switching set
    /// contains `T_U` on a fully-connected channel: no gain is certified.
    NoImprovement,
    /// `T_U != P_U` on a partially-connected channel.
    StrictImprovementPartial,
    /// `T_U` lies in some switching set on a fully-connected channel.
    StrictImprovementFull,
}

/// Sup-norm below which `T_U` and `P_U` are treated as equal.
pub const IMPROVEMENT_EQUALITY_TOL: f64 = 1e-9;

pub fn improvement_check(p_uv: &JointPmf, q_uv: &JointPmf, dmc: &Dmc) -> Result<Improvement> {
    check_sources(p_uv, q_uv)?;
    let p_u = p_uv.row_marginal();
    let t_u = compute_t_u(&p_uv.col_marginal(), q_uv)?;
    if t_u.max_abs_diff(&p_u) <= IMPROVEMENT_EQUALITY_TOL {
        return Ok(Improvement::NoImprovement);
    }
    if crate::channel::find_partial_connectivity(dmc).is_some() {
        return Ok(Improvement::StrictImprovementPartial);
    }
    for x1 in dmc.nonzero_inputs() {
        if pbar_contains(&t_u, &p_u, &pbar_threshold(dmc, x1)?) {
            return Ok(Improvement::StrictImprovementFull);
        }
    }
    Ok(Improvement::NoImprovement)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TheoremCase {
    PartiallyConnected { x_hat: String, y_star: String },
    FullyConnected,
}

/// Per-input quantities of a report, in the report's base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputReport {
    pub input: String,
    #[serde(with = "crate::serde_float")]
    pub tau: f64,
    pub tau_maximizer: Pmf,
    #[serde(with = "crate::serde_float")]
    pub e2: f64,
    pub e2_minimizer: Option<JointPmf>,
    #[serde(with = "crate::serde_float")]
    pub e3_source: f64,
    pub e3_minimizer: Option<JointPmf>,
    #[serde(with = "crate::serde_float")]
    pub channel_divergence: f64,
    #[serde(with = "crate::serde_float")]
    pub e3: f64,
}

/// Everything needed to state the achievable covert exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub base: LogBase,
    /// Type-I error ceiling; recorded only, the exponents do not depend on it.
    pub eps: f64,
    #[serde(with = "crate::serde_float")]
    pub e1: f64,
    pub e1_minimizer: JointPmf,
    #[serde(with = "crate::serde_float")]
    pub local: f64,
    #[serde(with = "crate::serde_float")]
    pub e3: f64,
    pub e3_best_input: String,
    pub per_input: Vec<InputReport>,
    pub t_u: Pmf,
    pub improvement: Improvement,
    pub theorem_case: TheoremCase,
    /// `E1` when partially connected; otherwise `theta_per_input`.
    #[serde(with = "crate::serde_float")]
    pub theta: f64,
    /// `min{E2(x1*), E3}` with `x1*` the maximiser of `E3` (fully connected only).
    #[serde(with = "crate::serde_float::option")]
    pub theta_literal: Option<f64>,
    /// `max_x1 min{E2(x1), E3(x1)}`: what a single-symbol scheme achieves
    /// (fully connected only).
    #[serde(with = "crate::serde_float::option")]
    pub theta_per_input: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentOptions {
    pub base: LogBase,
    pub search: SearchOptions,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        Self { base: LogBase::Bits, search: SearchOptions::default() }
    }
}

/// Exponents, case split and achievable `theta` for a source pair and a
/// channel satisfying the covert-channel conditions.
pub fn theorem_exponent(
    p_uv: &JointPmf,
    q_uv: &JointPmf,
    dmc: &Dmc,
    eps: f64,
    opts: &ExponentOptions,
) -> Result<ExponentReport> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in [0, 1)")));
    }
    let conditions = validate_covert_conditions(dmc);
    if !conditions.all_hold() {
        let reasons: Vec<&str> = [
            &conditions.zero_row_not_mixture,
            &conditions.warden_support_nested,
            &conditions.receiver_support_nested,
        ]
        .iter()
        .filter_map(|c| c.witness.as_deref())
        .collect();
        return Err(Error::InvalidChannel(reasons.join("; ")));
    }
    let base = opts.base;
    let so = &opts.search;
    let e1 = compute_e1(p_uv, q_uv, so)?;
    let p_v = p_uv.col_marginal();
    let local = local_exponent(&p_v, &q_uv.col_marginal(), LogBase::Nats)?;
    let t_u = compute_t_u(&p_v, q_uv)?;
    let e3 = compute_e3(p_uv, q_uv, dmc, so)?;
    let inputs = dmc.input_alphabet();

    let mut per_input = Vec::new();
    let mut e2_nats = Vec::new();
    for term in &e3.terms {
        let e2 = compute_e2(p_uv, q_uv, &term.pbar, so)?;
        e2_nats.push(e2.value_nats);
        per_input.push(InputReport {
            input: inputs.label(term.pbar.x1).into(),
            tau: term.pbar.tau(base),
            tau_maximizer: term.pbar.maximizer.clone(),
            e2: e2.value(base),
            e2_minimizer: e2.coupling,
            e3_source: term.source.value(base),
            e3_minimizer: term.source.coupling.clone(),
            channel_divergence: base.from_nats(term.channel_nats),
            e3: base.from_nats(term.total_nats()),
        });
    }

    let (theorem_case, theta, theta_literal, theta_per_input) = match conditions.partial_connectivity {
        Some(pc) => (
            TheoremCase::PartiallyConnected {
                x_hat: inputs.label(pc.x_hat).into(),
                y_star: dmc.y_alphabet().label(pc.y_star).into(),
            },
            e1.value_nats,
            None,
            None,
        ),
        None => {
            let best = e3.terms.iter().position(|t| t.pbar.x1 == e3.best_x1).unwrap_or(0);
            let literal = e2_nats[best].min(e3.value_nats);
            let per = e3
                .terms
                .iter()
                .zip(&e2_nats)
                .map(|(t, &e2)| e2.min(t.total_nats()))
                .fold(f64::NEG_INFINITY, f64::max);
            (TheoremCase::FullyConnected, per, Some(literal), Some(per))
        }
    };

    Ok(ExponentReport {
        base,
        eps,
        e1: e1.value(base),
        e1_minimizer: e1.coupling.expect("E1 always has a coupling"),
        local: base.from_nats(local),
        e3: e3.value(base),
        e3_best_input: inputs.label(e3.best_x1).into(),
        per_input,
        improvement: improvement_check(p_uv, q_uv, dmc)?,
        t_u,
        theorem_case,
        theta: base.from_nats(theta),
        theta_literal: theta_literal.map(|v| base.from_nats(v)),
        theta_per_input: theta_per_input.map(|v| base.from_nats(v)),
    })
}

/// Sources of the worked binary example: `U ~ Bern(0.2)` under the null and
/// `Bern(0.7)` under the alternative, `V` a constant.
pub fn example_sources() -> (JointPmf, JointPmf) {
    let u = crate::probability::Alphabet::binary();
    let v = crate::probability::Alphabet::new(["0"]).expect("single label");
    let p = JointPmf::from_rows(u.clone(), v.clone(), &[alloc::vec![0.8], alloc::vec![0.2]]).expect("valid");
    let q = JointPmf::from_rows(u, v, &[alloc::vec![0.3], alloc::vec![0.7]]).expect("valid");
    (p, q)
}

/// `D(Bern(a) || Bern(b))` in nats; handy for binary checks.
pub fn binary_kl(a: f64, b: f64) -> f64 {
    kl_nats_or_inf(&[1.0 - a, a], &[1.0 - b, b])
}
