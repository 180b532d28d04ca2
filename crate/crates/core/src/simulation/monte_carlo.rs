//! Monte-Carlo estimation of the error probabilities.
//!
//! Each trial draws its randomness from a ChaCha8 stream keyed by
//! `(seed, trial, hypothesis)` only, and trials are summarised by integer
//! counts, so any partition of the trial range merges to the same result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::exact::ExactErrors;
use super::{Experiment, Hypothesis, Scheme};
use crate::math;
use crate::probability::counts_are_typical;

/// Normal quantile for two-sided 95% intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the random stream for one trial under one hypothesis.
pub fn trial_seed(seed: u64, trial: u64, h: Hypothesis) -> u64 {
    let tag = match h {
        Hypothesis::H0 => 0,
        Hypothesis::H1 => 1,
    };
    splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ tag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Decision under `H0` was `H1`.
    pub type_i: bool,
    /// Decision under `H1` was `H0`.
    pub type_ii: bool,
    /// Hamming weight of the sensor output under `H0`.
    pub weight_h0: usize,
}

/// Runs one paired trial: sources under each hypothesis, encoder, channel
/// and decision.
pub fn simulate_trial(exp: &Experiment, n: usize, seed: u64, trial: u64) -> TrialOutcome {
    let (d0, w0) = one_side(exp, n, Hypothesis::H0, trial_seed(seed, trial, Hypothesis::H0));
    let (d1, _) = one_side(exp, n, Hypothesis::H1, trial_seed(seed, trial, Hypothesis::H1));
    TrialOutcome { type_i: d0 == Hypothesis::H1, type_ii: d1 == Hypothesis::H0, weight_h0: w0 }
}

fn one_side(exp: &Experiment, n: usize, h: Hypothesis, seed: u64) -> (Hypothesis, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = exp.source(h);
    let cols = source.n_cols();
    let sampler = &exp.samplers[h as usize];
    let mut u_counts = alloc::vec![0usize; source.n_rows()];
    let mut v_counts = alloc::vec![0usize; cols];
    for _ in 0..n {
        let cell = sampler.sample(&mut rng);
        u_counts[cell / cols] += 1;
        v_counts[cell % cols] += 1;
    }
    let alarm = exp.alarm(&u_counts);
    let k = exp.cfg.active_uses(n);
    let dmc = &exp.dmc;
    let sent = if alarm { exp.cfg.alarm_symbol() } else { dmc.zero() };
    let y = &exp.y_samplers[sent];
    let y_ok = match exp.cfg.scheme {
        Scheme::A { y_star, .. } => (0..k).any(|_| y.sample(&mut rng) == y_star),
        Scheme::B { .. } => {
            let mut y_counts = alloc::vec![0usize; dmc.y_alphabet().len()];
            for _ in 0..n {
                y_counts[y.sample(&mut rng)] += 1;
            }
            counts_are_typical(&y_counts, dmc.y_row(dmc.zero()).probs(), exp.cfg.mu)
        }
    };
    let v_ok = counts_are_typical(&v_counts, exp.p_v.probs(), exp.cfg.mu);
    let decision = if v_ok && y_ok { Hypothesis::H0 } else { Hypothesis::H1 };
    (decision, if alarm { k } else { 0 })
}

/// Mergeable trial counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub type_i: u64,
    pub type_ii: u64,
    pub weight_sum: u64,
}

impl Tally {
    pub fn add(mut self, o: TrialOutcome) -> Self {
        self.trials += 1;
        self.type_i += o.type_i as u64;
        self.type_ii += o.type_ii as u64;
        self.weight_sum += o.weight_h0 as u64;
        self
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            trials: self.trials + other.trials,
            type_i: self.type_i + other.type_i,
            type_ii: self.type_ii + other.type_ii,
            weight_sum: self.weight_sum + other.weight_sum,
        }
    }
}

/// Wilson score interval `(low, high)` for `events` out of `trials`.
pub fn wilson_interval(events: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * math::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    // the endpoints at 0 and 1 are exact; avoid rounding residue there
    let lo = if events == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if events == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Natural log of `value` (exact results only; keeps underflowed values).
    #[serde(with = "crate::serde_float::option")]
    pub ln_value: Option<f64>,
    pub method: Method,
    /// Half-width of the 95% Wilson interval; zero for exact results.
    pub ci_half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `3 / trials` when no event was observed: the estimate is then
    /// reported as below this value rather than as zero.
    pub below: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64, ln_value: f64) -> Self {
        Self { value, ln_value: Some(ln_value), method: Method::Exact, ci_half_width: 0.0, ci_low: value, ci_high: value, below: None }
    }

    pub fn from_counts(events: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(events, trials, WILSON_Z);
        Self {
            value: events as f64 / trials.max(1) as f64,
            ln_value: None,
            method: Method::Mc,
            ci_half_width: 0.5 * (hi - lo),
            ci_low: lo,
            ci_high: hi,
            below: (events == 0 && trials > 0).then(|| 3.0 / trials as f64),
        }
    }

    /// `ln` of the value, falling back to the rule-of-three bound when no
    /// event was observed.
    pub fn ln_or_bound(&self) -> f64 {
        match (self.ln_value, self.below) {
            (Some(l), _) => l,
            (None, Some(b)) => math::ln(b),
            (None, None) => math::ln(self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightStats {
    /// `E[w_H(X^n)] / n` under `H0`.
    pub mean_weight_fraction: f64,
    /// `sqrt` of the above.
    pub abar: f64,
}

impl WeightStats {
    fn new(fraction: f64) -> Self {
        Self { mean_weight_fraction: fraction, abar: math::sqrt(fraction) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub scheme: &'static str,
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub alpha: Estimate,
    pub beta: Estimate,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub weight_stats: WeightStats,
}

impl SimulationResult {
    pub fn from_tally(exp: &Experiment, n: usize, seed: u64, t: &Tally) -> Self {
        Self {
            scheme: exp.cfg.scheme.name(),
            n,
            k: exp.cfg.active_uses(n),
            mu: exp.cfg.mu,
            alpha: Estimate::from_counts(t.type_i, t.trials),
            beta: Estimate::from_counts(t.type_ii, t.trials),
            trials: Some(t.trials),
            seed: Some(seed),
            weight_stats: WeightStats::new(t.weight_sum as f64 / (t.trials.max(1) as f64 * n as f64)),
        }
    }

    pub fn from_exact(exp: &Experiment, e: &ExactErrors) -> Self {
        Self {
            scheme: exp.cfg.scheme.name(),
            n: e.n,
            k: e.k,
            mu: exp.cfg.mu,
            alpha: Estimate::exact(e.alpha.value, e.alpha.ln),
            beta: Estimate::exact(e.beta.value, e.beta.ln),
            trials: None,
            seed: None,
            weight_stats: WeightStats::new(e.mean_weight_fraction),
        }
    }
}

/// Serial driver; parallel drivers fold [`simulate_trial`] into [`Tally`]s
/// over any partition of `0..trials` and get the same counts.
pub fn run_trials(exp: &Experiment, n: usize, trials: u64, seed: u64) -> SimulationResult {
    let t = (0..trials).fold(Tally::default(), |t, i| t.add(simulate_trial(exp, n, seed, i)));
    SimulationResult::from_tally(exp, n, seed, &t)
}
