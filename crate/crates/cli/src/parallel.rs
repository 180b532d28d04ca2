//! Rayon driver for Monte-Carlo trials. Trials are keyed by index and
//! tallied with integer counts, so the result does not depend on how the
//! pool schedules them.

use covert_dht_core::{simulate_trial, Experiment, SimulationResult, Tally};
use rayon::prelude::*;

pub fn run_trials_parallel(exp: &Experiment, n: usize, trials: u64, seed: u64) -> SimulationResult {
    let tally = (0..trials)
        .into_par_iter()
        .fold(Tally::default, |t, i| t.add(simulate_trial(exp, n, seed, i)))
        .reduce(Tally::default, Tally::merge);
    SimulationResult::from_tally(exp, n, seed, &tally)
}
