//! The subcommands. Each renders to a writer and returns an exit code, so
//! they can be driven from tests as well as from `main`.

use std::fs::File;
use std::io::{BufWriter, Write};

use covert_dht_core::covertness::{covertness_scheme_a, covertness_scheme_b, scheme_b_positivity, CovertnessReport};
use covert_dht_core::exponents::{binary_kl, example_sources};
use covert_dht_core::math::{bisect, linear_fit};
use covert_dht_core::simulation::ExactErrors;
use covert_dht_core::{
    compute_e1, compute_e2, compute_e3, empirical_exponent, exact_error_probs, pbar_threshold, theorem_exponent,
    validate_covert_conditions, Dmc, Error as CoreError, ExponentOptions, ExponentReport, Experiment, Improvement,
    LogBase, Scheme, SearchOptions, SimulationResult, TheoremCase,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, Resolved};
use crate::output::{
    write_csv, CovertnessRow, SimulateRow, COVERTNESS_COLUMNS, COVERTNESS_SCHEMA, SIMULATE_COLUMNS, SIMULATE_SCHEMA,
};
use crate::parallel::run_trials_parallel;
use crate::{exit, CliError};

/// Trials used when exact evaluation is impossible and none were requested.
pub const FALLBACK_TRIALS: u64 = 100_000;
/// Grid resolution for the positivity margins.
pub const POSITIVITY_RESOLUTION: usize = 100;

/// Command-line overrides of the sweep section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub mu: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut c = cfg.clone();
        if let Some(n) = &self.n {
            c.sweep.n_grid = n.clone();
        }
        if let Some(t) = self.trials {
            c.sweep.trials = t;
        }
        if let Some(s) = self.seed {
            c.sweep.seed = s;
        }
        if let Some(m) = &self.mu {
            c.sweep.mu_grid = m.clone();
        }
        c
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn require_conditions(r: &Resolved) -> Result<(), CliError> {
    let report = validate_covert_conditions(&r.dmc);
    if report.all_hold() {
        return Ok(());
    }
    let reasons: Vec<String> = [&report.zero_row_not_mixture, &report.warden_support_nested, &report.receiver_support_nested]
        .iter()
        .filter_map(|c| c.witness.clone())
        .collect();
    Err(CliError::Validation(format!("channel fails the covert-channel conditions: {}", reasons.join("; "))))
}

/// Reports the covert-channel conditions and the connectivity case.
pub fn check_channel(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let r = cfg.resolve()?;
    let report = validate_covert_conditions(&r.dmc);
    let checks = [
        ("zero-input warden law is not a mixture of the other rows", &report.zero_row_not_mixture),
        ("warden supports nested in the zero-input support", &report.warden_support_nested),
        ("receiver supports nested in the zero-input support", &report.receiver_support_nested),
    ];
    for (name, c) in checks {
        write!(out, "{:<58} {}", name, mark(c.holds))?;
        match &c.witness {
            Some(w) => writeln!(out, "  ({w})")?,
            None => writeln!(out)?,
        }
    }
    if let Some(w) = &report.mixture_weights {
        writeln!(out, "mixture weights over non-zero inputs: {w:?}")?;
    }
    match report.partial_connectivity {
        Some(pc) => writeln!(
            out,
            "connectivity: partially connected (x_hat = {}, y_star = {})",
            r.dmc.input_alphabet().label(pc.x_hat),
            r.dmc.y_alphabet().label(pc.y_star)
        )?,
        None => writeln!(out, "connectivity: fully connected")?,
    }
    let ok = report.all_hold();
    writeln!(out, "verdict: {}", if ok { "conditions OK" } else { "conditions FAILED" })?;
    Ok(if ok { exit::OK } else { exit::VALIDATION })
}

fn is_example(cfg: &ExperimentConfig) -> bool {
    let e = ExperimentConfig::example();
    cfg.sources == e.sources && cfg.channel == e.channel
}

fn improvement_text(i: Improvement) -> &'static str {
    match i {
        Improvement::NoImprovement => "no improvement over local test",
        Improvement::StrictImprovementPartial => "strict improvement over local test (partially connected)",
        Improvement::StrictImprovementFull => "strict improvement over local test (fully connected)",
    }
}

fn render_exponents(r: &Resolved, rep: &ExponentReport, note: bool, out: &mut dyn Write) -> std::io::Result<()> {
    let u = r.p_uv.row_alphabet();
    writeln!(out, "exponents in {} (eps = {})", rep.base.name(), rep.eps)?;
    writeln!(out, "  E1                 {:.4}", rep.e1)?;
    writeln!(out, "  local D(P_V||Q_V)  {:.4}", rep.local)?;
    let t: Vec<String> = (0..u.len()).map(|i| format!("{}:{:.4}", u.label(i), rep.t_u.prob(i))).collect();
    writeln!(out, "  T_U                [{}]", t.join(", "))?;
    writeln!(out, "  {:<6} {:>8} {:>8} {:>10} {:>10} {:>8}", "x1", "tau", "E2", "E3 source", "D(channel)", "E3(x1)")?;
    for i in &rep.per_input {
        writeln!(
            out,
            "  {:<6} {:>8.4} {:>8.4} {:>10.4} {:>10.4} {:>8.4}",
            i.input, i.tau, i.e2, i.e3_source, i.channel_divergence, i.e3
        )?;
    }
    writeln!(out, "  E3                 {:.4} (x1 = {})", rep.e3, rep.e3_best_input)?;
    writeln!(out, "  improvement        {}", improvement_text(rep.improvement))?;
    match &rep.theorem_case {
        TheoremCase::PartiallyConnected { x_hat, y_star } => {
            writeln!(out, "  case               partially connected (x_hat = {x_hat}, y_star = {y_star})")?;
            writeln!(out, "  theta              {:.4} (= E1)", rep.theta)?;
        }
        TheoremCase::FullyConnected => {
            writeln!(out, "  case               fully connected")?;
            writeln!(out, "  theta (per input)  {:.4}  max_x1 min{{E2(x1), E3(x1)}}", rep.theta_per_input.unwrap_or(f64::NAN))?;
            writeln!(out, "  theta (literal)    {:.4}  min{{E2(x1*), E3}}", rep.theta_literal.unwrap_or(f64::NAN))?;
        }
    }
    if note {
        writeln!(
            out,
            "  note: the published E2 for this example is 0.2095 bits; the ball D(pi_U||P_U) <= tau with tau in \
             consistent units gives the E2 above. Reading tau's value in nats as a radius in bits gives ~0.2099 \
             (see `covert-dht example`)."
        )?;
    }
    Ok(())
}

/// Exponents, case split and achievable theta.
pub fn exponents(cfg: &ExperimentConfig, eps: f64, json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let r = cfg.resolve()?;
    require_conditions(&r)?;
    let rep = theorem_exponent(&r.p_uv, &r.q_uv, &r.dmc, eps, &ExponentOptions::default())?;
    if json {
        serde_json::to_writer_pretty(&mut *out, &rep)?;
        writeln!(out)?;
    } else {
        render_exponents(&r, &rep, is_example(cfg), out)?;
    }
    Ok(exit::OK)
}

#[derive(Debug, Serialize)]
struct FitSummary {
    mu: f64,
    method: &'static str,
    slope_bits_per_use: f64,
    last_exponent_bits: f64,
    monotone_increasing: bool,
    excluded_n: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct SimulateJson<'a> {
    schema: &'static str,
    base: &'static str,
    results: &'a [SimulationResult],
    exponent_fits: &'a [FitSummary],
    warnings: &'a [String],
}

fn fit_summary(mu: f64, method: &'static str, results: &[&SimulationResult]) -> Option<FitSummary> {
    let pts: Vec<(usize, f64)> = results.iter().map(|r| (r.n, r.beta.ln_or_bound())).collect();
    let fit = empirical_exponent(&pts).ok()?;
    Some(FitSummary {
        mu,
        method,
        slope_bits_per_use: fit.slope,
        last_exponent_bits: fit.points.last().map_or(f64::NAN, |p| p.exponent_bits),
        monotone_increasing: fit.monotone_increasing,
        excluded_n: fit.excluded,
    })
}

/// Error probabilities over the `(mu, n)` sweep: exact where the alphabets
/// allow it, Monte Carlo when trials are requested or exact is impossible.
pub fn simulate(
    cfg: &ExperimentConfig,
    format: Format,
    out: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<i32, CliError> {
    let r = cfg.resolve()?;
    require_conditions(&r)?;
    if cfg.sweep.n_grid.is_empty() {
        return Err(CliError::Validation("sweep.n_grid: no blocklengths to simulate".into()));
    }
    let (trials, seed) = (cfg.sweep.trials, cfg.sweep.seed);
    let mut results = Vec::new();
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for &mu in &cfg.sweep.mu_grid {
        let exp = Experiment::new(r.with_mu(mu), &r.p_uv, &r.q_uv, &r.dmc)?;
        let (mut exact_rows, mut mc_rows) = (Vec::new(), Vec::new());
        for &n in &cfg.sweep.n_grid {
            let mut mc_trials = trials;
            match exact_error_probs(&exp, n) {
                Ok(e) => exact_rows.push(SimulationResult::from_exact(&exp, &e)),
                Err(CoreError::AlphabetTooLarge(msg)) => {
                    if mc_trials == 0 {
                        mc_trials = FALLBACK_TRIALS;
                    }
                    let w = format!("mu={mu} n={n}: {msg}; using Monte Carlo with {mc_trials} trials");
                    writeln!(warn, "warning: {w}")?;
                    warnings.push(w);
                }
                Err(e) => return Err(e.into()),
            }
            if mc_trials > 0 {
                mc_rows.push(run_trials_parallel(&exp, n, mc_trials, seed));
            }
        }
        fits.extend(fit_summary(mu, "exact", &exact_rows.iter().collect::<Vec<_>>()));
        fits.extend(fit_summary(mu, "mc", &mc_rows.iter().collect::<Vec<_>>()));
        // exact and Monte-Carlo rows for the same n sit next to each other
        for &n in &cfg.sweep.n_grid {
            results.extend(exact_rows.iter().filter(|x| x.n == n).cloned());
            results.extend(mc_rows.iter().filter(|x| x.n == n).cloned());
        }
    }
    match format {
        Format::Json => {
            let doc = SimulateJson {
                schema: "covert-dht simulate v1",
                base: LogBase::Bits.name(),
                results: &results,
                exponent_fits: &fits,
                warnings: &warnings,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let rows: Vec<SimulateRow> = results.iter().map(SimulateRow::new).collect();
            let trailer: Vec<String> = fits
                .iter()
                .map(|f| {
                    format!(
                        "exponent fit mu={} method={} slope={:.6} last={:.6} monotone_increasing={}",
                        f.mu, f.method, f.slope_bits_per_use, f.last_exponent_bits, f.monotone_increasing
                    )
                })
                .collect();
            write_csv(out, SIMULATE_SCHEMA, SIMULATE_COLUMNS, &rows, &trailer)?;
        }
    }
    Ok(exit::OK)
}

/// Covertness rows for every `n` of the sweep, using the first `mu`.
pub fn covertness_rows(r: &Resolved, n_grid: &[usize]) -> Result<Vec<CovertnessReport>, CliError> {
    let p_u = r.p_uv.row_marginal();
    let mut rows = Vec::new();
    match r.scheme.scheme {
        Scheme::B { x1 } => {
            let pbar = pbar_threshold(&r.dmc, x1)?;
            for &n in n_grid {
                rows.push(covertness_scheme_b(&p_u, &pbar, &r.dmc, n, LogBase::Bits)?);
            }
        }
        Scheme::A { x_hat, k_rule, .. } => {
            for &n in n_grid {
                rows.push(covertness_scheme_a(&p_u, r.scheme.mu, &r.dmc, x_hat, n, k_rule.k(n), LogBase::Bits)?);
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log2 d_n` against `n` over rows with `d_n > 0`.
pub fn decay_slope(rows: &[CovertnessReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.d_n_exact.filter(|d| d.ln.is_finite()).map(|d| (r.n as f64, d.log2())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(linear_fit(&xs, &ys).0)
}

/// Exact warden divergence against both bounds over the sweep.
pub fn verify_covertness(cfg: &ExperimentConfig, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let r = cfg.resolve()?;
    require_conditions(&r)?;
    let n_grid: Vec<usize> = if cfg.sweep.n_grid.is_empty() {
        (20..=200).step_by(20).collect()
    } else {
        cfg.sweep.n_grid.clone()
    };
    let reports = covertness_rows(&r, &n_grid)?;
    let slope = decay_slope(&reports);
    let violations = reports.iter().filter(|x| !x.within_quad_bound()).count();
    let margins = match r.scheme.scheme {
        Scheme::B { x1 } => Some(scheme_b_positivity(
            &r.p_uv.row_marginal(),
            &pbar_threshold(&r.dmc, x1)?,
            &r.dmc,
            POSITIVITY_RESOLUTION,
        )?),
        Scheme::A { .. } => None,
    };
    let mut trailer = vec![
        format!("scheme={} mu={}", r.scheme.scheme.name(), r.scheme.mu),
        format!("bound_violations={violations}"),
        format!("log2_d_n_slope={}", slope.map_or("n/a".into(), |s| format!("{s:.6}"))),
    ];
    if let Some(m) = &margins {
        trailer.push(format!(
            "positivity_margins_nats cubic={:.6} quadratic={:.6} linear={:.6} all_positive={}",
            m.cubic, m.quadratic, m.linear, m.all_positive
        ));
    }
    match format {
        Format::Csv => {
            let rows: Vec<CovertnessRow> = reports.iter().map(CovertnessRow::new).collect();
            write_csv(out, COVERTNESS_SCHEMA, COVERTNESS_COLUMNS, &rows, &trailer)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                schema: &'static str,
                base: &'static str,
                rows: &'a [CovertnessReport],
                bound_violations: usize,
                log2_d_n_slope: Option<f64>,
                positivity: Option<covert_dht_core::PositivityMargins>,
            }
            let doc = Doc {
                schema: "covert-dht verify-covertness v1",
                base: LogBase::Bits.name(),
                rows: &reports,
                bound_violations: violations,
                log2_d_n_slope: slope,
                positivity: margins,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(if violations == 0 { exit::OK } else { exit::VALIDATION })
}

/// One line of the example reproduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleCheck {
    pub name: &'static str,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
}

impl ExampleCheck {
    pub fn passed(&self) -> bool {
        match (self.reference, self.tolerance) {
            (Some(r), Some(t)) => (self.value - r).abs() <= t,
            _ => true,
        }
    }
}

/// Values of the binary example, in bits where applicable.
pub fn example_values() -> Result<Vec<ExampleCheck>, CliError> {
    let (p, q) = example_sources();
    let dmc = Dmc::bsc(0.4, 0.4)?;
    let so = SearchOptions::default();
    let pbar = pbar_threshold(&dmc, 1)?;
    let boundary = bisect(|m| binary_kl(m, 0.2) - pbar.tau_nats, 0.2, 1.0, 200);
    let e2 = compute_e2(&p, &q, &pbar, &so)?;
    let unit_mixed = covert_dht_core::PbarSet { tau_nats: pbar.tau_nats * std::f64::consts::LN_2, ..pbar.clone() };
    let e2_mixed = compute_e2(&p, &q, &unit_mixed, &so)?;
    let e1 = compute_e1(&p, &q, &so)?;
    let e3 = compute_e3(&p, &q, &dmc, &so)?;
    let rep = theorem_exponent(&p, &q, &dmc, 0.0, &ExponentOptions::default())?;
    let bits = LogBase::Bits;
    let check = |name, value, reference: Option<f64>, tolerance: Option<f64>| ExampleCheck { name, value, reference, tolerance };
    Ok(vec![
        check("q* (maximizer mass on output 1)", pbar.maximizer.prob(1), Some(0.884), Some(1e-3)),
        check("tau [bits]", pbar.tau(bits), Some(0.306), Some(2e-3)),
        check("switching-set boundary pi_U(1)", boundary, None, None),
        check("E1 [bits]", e1.value(bits), Some(0.7706), Some(1e-3)),
        check("E2 [bits], consistent units", e2.value(bits), None, None),
        check("E2 [bits], tau(nats) read as bits radius", e2_mixed.value(bits), None, None),
        check("E2 [bits], published value", 0.2095, None, None),
        check("E3 [bits]", e3.value(bits), Some(0.1170), Some(1e-3)),
        check("theta [bits]", rep.theta, Some(0.117), Some(1e-3)),
    ])
}

/// Reproduction of the binary example with pass/fail against tolerances.
pub fn example(out: &mut dyn Write) -> Result<i32, CliError> {
    let checks = example_values()?;
    writeln!(out, "binary example: U ~ Bern(0.2) vs Bern(0.7), V constant, BSC(0.4) to receiver and warden")?;
    let mut all = true;
    for c in &checks {
        match (c.reference, c.tolerance) {
            (Some(r), Some(t)) => {
                let ok = c.passed();
                all &= ok;
                writeln!(out, "  {:<44} {:>8.4}  ref {r} ± {t:e}  [{}]", c.name, c.value, if ok { "PASS" } else { "FAIL" })?;
            }
            _ => writeln!(out, "  {:<44} {:>8.4}", c.name, c.value)?,
        }
    }
    writeln!(
        out,
        "  E2 caveat: 0.2095 is not matched; the consistent-units value is reported as E2, and the \
         unit-mixed reading is shown for comparison."
    )?;
    Ok(if all { exit::OK } else { exit::VALIDATION })
}

/// Writes to the configured output file when present, else to `stdout`.
pub fn with_output<F>(cfg: &ExperimentConfig, stdout: &mut dyn Write, f: F) -> Result<i32, CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<i32, CliError>,
{
    match &cfg.output {
        Some(o) => {
            let mut w = BufWriter::new(File::create(&o.path)?);
            let code = f(&mut w)?;
            w.flush()?;
            Ok(code)
        }
        None => f(stdout),
    }
}

/// Exact error probabilities for one `(mu, n)` point of a configuration.
pub fn exact_for(cfg: &ExperimentConfig, mu: f64, n: usize) -> Result<ExactErrors, CliError> {
    let r = cfg.resolve()?;
    let exp = Experiment::new(r.with_mu(mu), &r.p_uv, &r.q_uv, &r.dmc)?;
    Ok(exact_error_probs(&exp, n)?)
}
