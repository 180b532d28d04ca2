//! Covert distributed hypothesis testing over a discrete memoryless channel.
//!
//! A sensor observes `U^n`, a decision center observes `V^n` and the channel
//! output `Y^n`, and a warden watches `Z^n`. This crate computes the Stein
//! exponents achievable under covertness, the warden's divergence for the
//! two coding schemes, and estimates error probabilities exactly (method of
//! types) or by Monte Carlo.
//!
//! `no_std` with `alloc`; all floating-point math goes through `libm`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod covertness;
pub mod error;
pub mod exponents;
pub mod math;
pub mod probability;
pub mod serde_float;
pub mod simulation;

pub use channel::{
    find_partial_connectivity, sample_channel, validate_covert_conditions, ConditionCheck,
    ConditionReport, Dmc, PartialConnectivity, Transition,
};
pub use covertness::{
    atypicality_probability, chi_squared_product, covertness_scheme_a, covertness_scheme_b,
    delta_scheme_b, lemma1_bounds, scheme_a_divergence, scheme_b_positivity,
    two_point_divergence_exact, CovertnessReport, Lemma1Bounds, LogValue, PositivityMargins,
};
pub use error::{Error, Result};
pub use exponents::{
    compute_e1, compute_e2, compute_e3, compute_t_u, i_projection_coupling, improvement_check,
    local_exponent, pbar_contains, pbar_threshold, theorem_exponent, ExponentOptions,
    ExponentReport, Improvement, PbarSet, SearchOptions, TheoremCase,
};
pub use simulation::{
    decide_scheme_a, decide_scheme_b, empirical_exponent, encode_scheme_a, encode_scheme_b,
    exact_error_probs, run_trials, simulate_trial, ExactErrors, Experiment, ExponentFit, Hypothesis,
    KRule, Scheme, SchemeConfig, SimulationResult, Tally,
};
pub use probability::{
    chi_squared, counts_are_typical, empirical_type, entropy, is_strongly_typical, joint_type,
    kl_divergence, sample_iid, Alphabet, JointPmf, LogBase, Pmf, Sequence,
};
