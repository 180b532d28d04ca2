//! What the warden sees under the null hypothesis.
//!
//! Both schemes send either the all-zero word or a constant word `x1^m`, so
//! the warden's output law is the two-point mixture
//! `(1 - delta) W0^m + delta W1^m`, and its divergence from `W0^m` depends on
//! `z^m` only through its type. Everything here is evaluated in the log
//! domain so that values far below the smallest double stay meaningful.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::channel::Dmc;
use crate::error::{Error, Result};
use crate::exponents::pbar::{contains_raw, PbarSet};
use crate::math::{self, LogFactorials, LogSum};
use crate::probability::{chi_squared_raw, counts_are_typical, kl_nats_or_inf, LogBase, Pmf};

/// Largest warden alphabet for which the divergence is enumerated exactly.
pub const EXACT_MAX_WARDEN_ALPHABET: usize = 3;
/// Largest number of types any single enumeration here will visit.
pub const MAX_TYPES: f64 = 2.0e7;

/// A non-negative quantity with its natural logarithm, which stays finite
/// long after the value itself underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub value: f64,
    #[serde(with = "crate::serde_float")]
    pub ln: f64,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { value: math::exp(ln), ln }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, ln: f64::NEG_INFINITY }
    }

    /// `log2` of the value, usable for decay fits.
    pub fn log2(&self) -> f64 {
        self.ln * math::LOG2_E
    }
}

fn check_pair(g0: &Pmf, g1: &Pmf) -> Result<()> {
    g0.alphabet().ensure_same(g1.alphabet(), "warden rows")?;
    if let Some(z) = g1.probs().iter().zip(g0.probs()).position(|(&b, &a)| b > 0.0 && a == 0.0) {
        return Err(Error::SupportViolation(format!(
            "warden output `{}` has positive probability only under the non-zero input",
            g0.alphabet().label(z)
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta = {delta} is not a probability")));
    }
    Ok(())
}

fn ensure_enumerable(n: usize, parts: usize) -> Result<()> {
    if math::composition_count(n, parts) > MAX_TYPES {
        return Err(Error::AlphabetTooLarge(format!("{parts} symbols at blocklength {n}")));
    }
    Ok(())
}

/// `ln f(t)` for `f(t) = (1 + t) ln(1 + t) - t`, `t >= -1`, where `t` is
/// given through its sign and `ln |t|`.
fn ln_f(t_positive: bool, ln_abs_t: f64) -> f64 {
    if ln_abs_t == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if ln_abs_t < math::ln(0.1) {
        // f(t) = sum_{m >= 2} (-1)^m t^m / (m (m - 1))
        let t = if t_positive { math::exp(ln_abs_t) } else { -math::exp(ln_abs_t) };
        let mut series = 0.0;
        let mut power = 1.0;
        for m in 2..40 {
            let m = m as f64;
            series += power / (m * (m - 1.0));
            power *= -t;
        }
        return 2.0 * ln_abs_t + math::ln(series);
    }
    if t_positive && ln_abs_t > 40.0 {
        // f(t) = t (ln t - 1) + O(ln t)
        return ln_abs_t + math::ln(ln_abs_t - 1.0);
    }
    let t = if t_positive { math::exp(ln_abs_t) } else { -math::exp(ln_abs_t) };
    let one_plus = 1.0 + t;
    let f = if one_plus <= 0.0 { 1.0 } else { one_plus * math::ln_1p(t) - t };
    math::ln(f)
}

/// `D((1 - delta) W0^n + delta W1^n || W0^n)` in nats, exact up to rounding,
/// or `None` when the warden alphabet is too large to enumerate.
///
/// Uses `D = sum_types W0^n(T) f(delta (r_T - 1))` with `r_T` the likelihood
/// ratio of the type; every summand is non-negative, so nothing cancels.
pub fn two_point_divergence_exact(g0: &Pmf, g1: &Pmf, delta: f64, n: usize) -> Result<Option<LogValue>> {
    check_pair(g0, g1)?;
    check_delta(delta)?;
    divergence_ln_delta(g0, g1, math::ln(delta), n)
}

/// [`two_point_divergence_exact`] with the weight given as `ln delta`, so
/// weights below the smallest double are still handled.
fn divergence_ln_delta(g0: &Pmf, g1: &Pmf, ln_delta: f64, n: usize) -> Result<Option<LogValue>> {
    if ln_delta == f64::NEG_INFINITY || n == 0 {
        return Ok(Some(LogValue::zero()));
    }
    let support: Vec<usize> = g0.support().collect();
    if support.len() > EXACT_MAX_WARDEN_ALPHABET {
        return Ok(None);
    }
    ensure_enumerable(n, support.len())?;
    let ln_g0: Vec<f64> = support.iter().map(|&z| math::ln(g0.prob(z))).collect();
    let ln_ratio: Vec<f64> = support.iter().map(|&z| math::ln(g1.prob(z)) - math::ln(g0.prob(z))).collect();
    let lf = LogFactorials::new(n);
    let mut acc = LogSum::new();
    math::for_each_composition(n, support.len(), |c| {
        let mut ln_p0 = lf.multinomial(c);
        let mut ln_r = 0.0;
        for ((&k, &a), &b) in c.iter().zip(&ln_g0).zip(&ln_ratio) {
            if k > 0 {
                ln_p0 += k as f64 * a;
                ln_r += k as f64 * b;
            }
        }
        // t = delta (r - 1)
        let ln_abs_t = ln_delta + math::ln_abs_exp_m1(ln_r);
        acc.add(ln_p0 + ln_f(ln_r > 0.0, ln_abs_t));
    });
    Ok(Some(LogValue::from_ln(acc.ln())))
}

/// `chi^2(W1^n || W0^n) = (1 + chi^2(W1 || W0))^n - 1`.
pub fn chi_squared_product(g0: &Pmf, g1: &Pmf, n: usize) -> Result<LogValue> {
    check_pair(g0, g1)?;
    let c = chi_squared_raw(g1.probs(), g0.probs()).expect("support checked");
    let exponent = n as f64 * math::ln_1p(c);
    Ok(LogValue { value: math::exp_m1(exponent), ln: math::ln_abs_exp_m1(exponent) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Bounds {
    /// `delta^2 chi^2(W1^n || W0^n)`.
    pub quad: LogValue,
    /// Type-counting bound on `chi^2(W1^n || W0^n)` with the type
    /// probability taken under `W0`: `(n+1)^|Z| max_T e^{-n D(T||W0)} (r_T - 1)^2`.
    pub chi2_type_bound: LogValue,
    /// `delta^2` times [`Self::chi2_type_bound`]: a bound on the divergence.
    pub type_bound: LogValue,
    /// The same expression with `e^{-n D(T||W1)}` in place of
    /// `e^{-n D(T||W0)}`; not a valid bound in general, kept for comparison.
    pub chi2_type_expression_w1: LogValue,
}

/// Quadratic and type-counting upper bounds on the two-point divergence.
pub fn lemma1_bounds(g0: &Pmf, g1: &Pmf, delta: f64, n: usize) -> Result<Lemma1Bounds> {
    check_pair(g0, g1)?;
    check_delta(delta)?;
    bounds_ln_delta(g0, g1, math::ln(delta), n)
}

fn bounds_ln_delta(g0: &Pmf, g1: &Pmf, ln_delta: f64, n: usize) -> Result<Lemma1Bounds> {
    let chi2 = chi_squared_product(g0, g1, n)?;
    let ln_delta2 = 2.0 * ln_delta;
    let k = g0.len();
    ensure_enumerable(n, k)?;
    let mut best_w0 = f64::NEG_INFINITY;
    let mut best_w1 = f64::NEG_INFINITY;
    let nf = n as f64;
    math::for_each_composition(n, k, |c| {
        let pi: Vec<f64> = c.iter().map(|&x| x as f64 / nf).collect();
        let d0 = kl_nats_or_inf(&pi, g0.probs());
        if !d0.is_finite() {
            return;
        }
        let d1 = kl_nats_or_inf(&pi, g1.probs());
        // ln r_T = -n (D(T||W1) - D(T||W0)), -inf when T leaves supp W1
        let ln_r = if d1.is_finite() { -nf * (d1 - d0) } else { f64::NEG_INFINITY };
        let sq = 2.0 * math::ln_abs_exp_m1(ln_r);
        best_w0 = best_w0.max(-nf * d0 + sq);
        if d1.is_finite() {
            best_w1 = best_w1.max(-nf * d1 + sq);
        }
    });
    let poly = k as f64 * math::ln(nf + 1.0);
    let chi2_type_bound = LogValue::from_ln(poly + best_w0);
    Ok(Lemma1Bounds {
        quad: LogValue::from_ln(ln_delta2 + chi2.ln),
        type_bound: LogValue::from_ln(ln_delta2 + chi2_type_bound.ln),
        chi2_type_bound,
        chi2_type_expression_w1: LogValue::from_ln(poly + best_w1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchProbability {
    /// `Pr[type(U^n) in the switching set]` under `P_U`.
    pub exact: LogValue,
    /// `(n+1)^|U| max_T e^{-n D(T||P_U)}` over `n`-types in the set.
    pub bound: LogValue,
}

/// Probability that the sensor of the threshold scheme sends `x1^n`.
pub fn delta_scheme_b(p_u: &Pmf, pbar: &PbarSet, n: usize) -> Result<SwitchProbability> {
    let k = p_u.len();
    ensure_enumerable(n, k)?;
    let lf = LogFactorials::new(n);
    let nf = n as f64;
    let mut exact = LogSum::new();
    let mut best = f64::NEG_INFINITY;
    math::for_each_composition(n, k, |c| {
        let pi: Vec<f64> = c.iter().map(|&x| x as f64 / nf).collect();
        if contains_raw(&pi, p_u.probs(), pbar.tau_nats) {
            exact.add(math::ln_type_probability(&lf, c, p_u.probs()));
            best = best.max(-nf * kl_nats_or_inf(&pi, p_u.probs()));
        }
    });
    Ok(SwitchProbability {
        exact: LogValue::from_ln(exact.ln().min(0.0)),
        bound: LogValue::from_ln(k as f64 * math::ln(nf + 1.0) + best),
    })
}

/// `Pr[U^n is not strongly typical]` under `P_U`, summed over atypical
/// types so that tiny values keep full relative precision.
pub fn atypicality_probability(p_u: &Pmf, mu: f64, n: usize) -> Result<LogValue> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu = {mu} must be positive")));
    }
    let k = p_u.len();
    ensure_enumerable(n, k)?;
    let lf = LogFactorials::new(n);
    let mut acc = LogSum::new();
    math::for_each_composition(n, k, |c| {
        if !counts_are_typical(c, p_u.probs(), mu) {
            acc.add(math::ln_type_probability(&lf, c, p_u.probs()));
        }
    });
    Ok(LogValue::from_ln(acc.ln().min(0.0)))
}

/// Minima of the three exponents whose positivity drives the decay of the
/// threshold scheme's divergence, over a simplex grid of warden types and
/// a grid of switching-set source types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityMargins {
    /// `3 D(pi||W1) - 2 D(pi||W0) + 2 D(pi_U||P_U)`.
    #[serde(with = "crate::serde_float")]
    pub cubic: f64,
    /// `2 D(pi||W1) - D(pi||W0) + 2 D(pi_U||P_U)`.
    #[serde(with = "crate::serde_float")]
    pub quadratic: f64,
    /// `D(pi||W1) + 2 D(pi_U||P_U)`.
    #[serde(with = "crate::serde_float")]
    pub linear: f64,
    pub all_positive: bool,
}

/// Grid evaluation of [`PositivityMargins`] with step `1/resolution`. The
/// expressions separate into a warden part and a source part, so each is
/// minimised on its own grid.
pub fn scheme_b_positivity(p_u: &Pmf, pbar: &PbarSet, dmc: &Dmc, resolution: usize) -> Result<PositivityMargins> {
    let g0 = dmc.z_row(dmc.zero()).probs();
    let g1 = dmc.z_row(pbar.x1).probs();
    let r = resolution as f64;
    ensure_enumerable(resolution, g0.len())?;
    ensure_enumerable(resolution, p_u.len())?;
    let (mut m3, mut m2, mut m1) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    math::for_each_composition(resolution, g0.len(), |c| {
        let pi: Vec<f64> = c.iter().map(|&x| x as f64 / r).collect();
        let d0 = kl_nats_or_inf(&pi, g0);
        let d1 = kl_nats_or_inf(&pi, g1);
        if !d0.is_finite() || !d1.is_finite() {
            // such types have zero probability under W1 (and W0)
            return;
        }
        m3 = m3.min(3.0 * d1 - 2.0 * d0);
        m2 = m2.min(2.0 * d1 - d0);
        m1 = m1.min(d1);
    });
    let mut source = f64::INFINITY;
    math::for_each_composition(resolution, p_u.len(), |c| {
        let pi: Vec<f64> = c.iter().map(|&x| x as f64 / r).collect();
        if contains_raw(&pi, p_u.probs(), pbar.tau_nats) {
            source = source.min(kl_nats_or_inf(&pi, p_u.probs()));
        }
    });
    let (cubic, quadratic, linear) = (m3 + 2.0 * source, m2 + 2.0 * source, m1 + 2.0 * source);
    Ok(PositivityMargins { cubic, quadratic, linear, all_positive: cubic > 0.0 && quadratic > 0.0 && linear > 0.0 })
}

/// Divergence of the sparse scheme, which uses only the first `k` channel
/// inputs: the remaining outputs are `W0`-distributed under both branches.
pub fn scheme_a_divergence(g0: &Pmf, g1: &Pmf, delta: f64, k: usize) -> Result<(Option<LogValue>, Lemma1Bounds)> {
    check_delta(delta)?;
    scheme_a_ln_delta(g0, g1, math::ln(delta), k)
}

fn scheme_a_ln_delta(g0: &Pmf, g1: &Pmf, ln_delta: f64, k: usize) -> Result<(Option<LogValue>, Lemma1Bounds)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_pair(g0, g1)?;
    Ok((divergence_ln_delta(g0, g1, ln_delta, k)?, bounds_ln_delta(g0, g1, ln_delta, k)?))
}

/// One row of a covertness sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovertnessReport {
    pub n: usize,
    /// Channel uses that can carry the non-zero symbol (`n` for the
    /// threshold scheme, `k(n)` for the sparse one).
    pub active_uses: usize,
    pub base: LogBase,
    pub delta_n: LogValue,
    /// `None` when the warden alphabet is too large for enumeration.
    pub d_n_exact: Option<LogValue>,
    pub bounds: Lemma1Bounds,
    /// Upper bound on `delta_n` used by the threshold scheme's analysis.
    pub delta_bound: Option<LogValue>,
}

impl CovertnessReport {
    /// `d_n` in the report's base.
    pub fn d_n(&self) -> Option<f64> {
        self.d_n_exact.map(|d| self.base.from_nats(d.value))
    }

    pub fn quad_bound(&self) -> f64 {
        self.base.from_nats(self.bounds.quad.value)
    }

    pub fn type_bound(&self) -> f64 {
        self.base.from_nats(self.bounds.type_bound.value)
    }

    /// `d_n <= quad_bound` (vacuous when `d_n` is unavailable).
    pub fn within_quad_bound(&self) -> bool {
        self.d_n_exact.map_or(true, |d| d.ln <= self.bounds.quad.ln + 1e-9)
    }
}

/// Covertness of the threshold scheme at blocklength `n`.
pub fn covertness_scheme_b(p_u: &Pmf, pbar: &PbarSet, dmc: &Dmc, n: usize, base: LogBase) -> Result<CovertnessReport> {
    let g0 = dmc.z_row(dmc.zero());
    let g1 = dmc.z_row(pbar.x1);
    let delta = delta_scheme_b(p_u, pbar, n)?;
    Ok(CovertnessReport {
        n,
        active_uses: n,
        base,
        delta_n: delta.exact,
        d_n_exact: two_point_divergence_exact(g0, g1, delta.exact.value, n)?,
        bounds: lemma1_bounds(g0, g1, delta.exact.value, n)?,
        delta_bound: Some(delta.bound),
    })
}

/// Covertness of the sparse scheme: `delta = Pr[U^n atypical]`, active on
/// the first `k` uses.
pub fn covertness_scheme_a(
    p_u: &Pmf,
    mu: f64,
    dmc: &Dmc,
    x_hat: usize,
    n: usize,
    k: usize,
    base: LogBase,
) -> Result<CovertnessReport> {
    let g0 = dmc.z_row(dmc.zero());
    let g1 = dmc.z_row(x_hat);
    let delta = atypicality_probability(p_u, mu, n)?;
    let (d, bounds) = scheme_a_ln_delta(g0, g1, delta.ln, k)?;
    Ok(CovertnessReport { n, active_uses: k, base, delta_n: delta, d_n_exact: d, bounds, delta_bound: None })
}
