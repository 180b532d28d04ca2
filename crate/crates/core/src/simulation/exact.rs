//! Exact `alpha_n`, `beta_n` by enumerating source types.
//!
//! Given the type of `U^n` the sensor's output is fixed, `V^n` and `Y^n`
//! are conditionally independent, and the decision depends on `V^n` only
//! through its counts. So for each `U`-type we need the conditional law of
//! the `V`-counts (a convolution of multinomials, one per `U` symbol) and
//! the probability that the channel clause holds for each constant input.
//! Acceptance and rejection are accumulated separately as sums of
//! non-negative terms in the log domain, so neither is formed by `1 - x`.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use super::{Experiment, Hypothesis, Scheme};
use crate::covertness::LogValue;
use crate::error::{Error, Result};
use crate::math::{self, LogFactorials, LogSum};
use crate::probability::counts_are_typical;

/// Largest `|U|`, `|V|`, `|Y|` the exact engine accepts.
pub const EXACT_MAX_ALPHABET: usize = 3;
/// Rough operation budget; larger problems should use Monte Carlo.
pub const EXACT_WORK_BUDGET: f64 = 2.0e9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactErrors {
    pub n: usize,
    pub k: usize,
    /// `Pr[decide H1 | H0]`.
    pub alpha: LogValue,
    /// `Pr[decide H0 | H1]`.
    pub beta: LogValue,
    /// `Pr[alarm | H0]`.
    pub alarm_h0: LogValue,
    /// `E[w_H(X^n)] / n` under `H0`.
    pub mean_weight_fraction: f64,
}

impl ExactErrors {
    /// `sqrt(E[w_H(X^n)] / n)` under `H0`.
    pub fn abar(&self) -> f64 {
        math::sqrt(self.mean_weight_fraction)
    }
}

/// Pair of log-probabilities for complementary events.
#[derive(Debug, Clone, Copy)]
struct Split {
    pass: f64,
    fail: f64,
}

fn work_estimate(u: usize, v: usize, n: usize) -> f64 {
    let types = math::composition_count(n, u);
    let conv = u as f64 * math::powf(n as f64 + 1.0, 2.0 * (v as f64 - 1.0));
    types * conv.max(1.0)
}

/// Log-domain distribution of count vectors over `d + 1` symbols with total
/// fixed by context, indexed by the first `d` counts (each `0..=n`).
struct CountLaw {
    d: usize,
    side: usize,
    ln: Vec<f64>,
}

impl CountLaw {
    fn point(d: usize, n: usize) -> Self {
        let side = n + 1;
        let mut ln = alloc::vec![f64::NEG_INFINITY; side.pow(d as u32)];
        ln[0] = 0.0;
        Self { d, side, ln }
    }

    fn index(&self, c: &[usize]) -> usize {
        c[..self.d].iter().fold(0, |acc, &x| acc * self.side + x)
    }

    fn coords(&self, mut idx: usize, out: &mut [usize]) {
        for i in (0..self.d).rev() {
            out[i] = idx % self.side;
            idx /= self.side;
        }
    }

    /// Convolve with `Multinomial(m, row)`.
    fn add_block(&self, m: usize, row: &[f64], lf: &LogFactorials) -> Self {
        let mut block: Vec<(Vec<usize>, f64)> = Vec::new();
        math::for_each_composition(m, self.d + 1, |c| {
            let lp = math::ln_type_probability(lf, c, row);
            if lp > f64::NEG_INFINITY {
                block.push((c[..self.d].to_vec(), lp));
            }
        });
        let mut acc: Vec<LogSum> = alloc::vec![LogSum::new(); self.ln.len()];
        let mut here = alloc::vec![0usize; self.d];
        let mut sum = alloc::vec![0usize; self.d];
        for (idx, &base) in self.ln.iter().enumerate() {
            if base == f64::NEG_INFINITY {
                continue;
            }
            self.coords(idx, &mut here);
            for (c, lp) in &block {
                for i in 0..self.d {
                    sum[i] = here[i] + c[i];
                }
                acc[self.index(&sum)].add(base + lp);
            }
        }
        Self { d: self.d, side: self.side, ln: acc.iter().map(LogSum::ln).collect() }
    }
}

/// Conditional law of the `V`-counts given the `U`-counts, split into
/// typical and atypical mass.
fn v_typicality(u_counts: &[usize], cond: &[Vec<f64>], p_v: &[f64], mu: f64, n: usize, lf: &LogFactorials) -> Split {
    let d = p_v.len() - 1;
    let mut law = CountLaw::point(d, n);
    for (&m, row) in u_counts.iter().zip(cond) {
        if m > 0 {
            law = law.add_block(m, row, lf);
        }
    }
    let (mut pass, mut fail) = (LogSum::new(), LogSum::new());
    let mut full = alloc::vec![0usize; d + 1];
    for (idx, &lp) in law.ln.iter().enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        law.coords(idx, &mut full[..d]);
        full[d] = n - full[..d].iter().sum::<usize>();
        if counts_are_typical(&full, p_v, mu) {
            pass.add(lp);
        } else {
            fail.add(lp);
        }
    }
    Split { pass: pass.ln(), fail: fail.ln() }
}

/// Probability that the channel clause of the decision holds when the
/// alarm symbol is (or is not) sent.
fn channel_clause(exp: &Experiment, n: usize, k: usize, alarm: bool, lf: &LogFactorials) -> Split {
    let dmc = &exp.dmc;
    let sent = if alarm { exp.cfg.alarm_symbol() } else { dmc.zero() };
    match exp.cfg.scheme {
        Scheme::A { y_star, .. } => {
            // Pr[y_star never seen in k uses] = (1 - W(y_star|sent))^k
            let ln_miss = k as f64 * math::ln_1p(-dmc.y_row(sent).prob(y_star));
            Split { pass: math::ln_one_minus_exp(ln_miss), fail: ln_miss }
        }
        Scheme::B { .. } => {
            let row = dmc.y_row(sent).probs();
            let target = dmc.y_row(dmc.zero()).probs();
            let (mut pass, mut fail) = (LogSum::new(), LogSum::new());
            math::for_each_composition(n, row.len(), |c| {
                let lp = math::ln_type_probability(lf, c, row);
                if counts_are_typical(c, target, exp.cfg.mu) {
                    pass.add(lp);
                } else {
                    fail.add(lp);
                }
            });
            Split { pass: pass.ln(), fail: fail.ln() }
        }
    }
}

struct Tallies {
    accept: LogSum,
    reject: LogSum,
    alarm: LogSum,
}

fn enumerate(exp: &Experiment, h: Hypothesis, n: usize, clauses: &[Split; 2], lf: &LogFactorials) -> Tallies {
    let source = exp.source(h);
    let u_marginal = source.row_marginal();
    let cond: Vec<Vec<f64>> = (0..source.n_rows())
        .map(|u| {
            let pu = u_marginal.prob(u);
            source.row(u).iter().map(|&x| if pu > 0.0 { x / pu } else { 0.0 }).collect()
        })
        .collect();
    let p_v = exp.p_v.probs();
    let mut t = Tallies { accept: LogSum::new(), reject: LogSum::new(), alarm: LogSum::new() };
    math::for_each_composition(n, source.n_rows(), |a| {
        let lp = math::ln_type_probability(lf, a, u_marginal.probs());
        if lp == f64::NEG_INFINITY {
            return;
        }
        let alarm = exp.alarm(a);
        if alarm {
            t.alarm.add(lp);
        }
        let v = v_typicality(a, &cond, p_v, exp.cfg.mu, n, lf);
        let y = clauses[alarm as usize];
        t.accept.add(lp + v.pass + y.pass);
        t.reject.add(lp + math::ln_add_exp(v.fail, v.pass + y.fail));
    });
    t
}

/// Exact error probabilities at blocklength `n`.
pub fn exact_error_probs(exp: &Experiment, n: usize) -> Result<ExactErrors> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let (u, v, y) = (exp.p_uv.n_rows(), exp.p_uv.n_cols(), exp.dmc.y_alphabet().len());
    if u.max(v).max(y) > EXACT_MAX_ALPHABET {
        return Err(Error::AlphabetTooLarge(format!(
            "exact evaluation supports alphabets up to {EXACT_MAX_ALPHABET} (|U|={u}, |V|={v}, |Y|={y}); use Monte Carlo"
        )));
    }
    let work = work_estimate(u, v, n);
    if work > EXACT_WORK_BUDGET {
        return Err(Error::AlphabetTooLarge(format!(
            "exact evaluation at n={n} needs ~{work:.1e} operations; use Monte Carlo"
        )));
    }
    let k = exp.cfg.active_uses(n);
    let lf = LogFactorials::new(n);
    let clauses = [channel_clause(exp, n, k, false, &lf), channel_clause(exp, n, k, true, &lf)];
    let h0 = enumerate(exp, Hypothesis::H0, n, &clauses, &lf);
    let h1 = enumerate(exp, Hypothesis::H1, n, &clauses, &lf);
    let alarm = LogValue::from_ln(h0.alarm.ln().min(0.0));
    Ok(ExactErrors {
        n,
        k,
        alpha: LogValue::from_ln(h0.reject.ln().min(0.0)),
        beta: LogValue::from_ln(h1.accept.ln().min(0.0)),
        alarm_h0: alarm,
        mean_weight_fraction: alarm.value * k as f64 / n as f64,
    })
}
