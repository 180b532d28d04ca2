//! Discrete memoryless channel from the sensor, with the decision center's
//! output `Y` and the warden's output `Z`.
//!
//! Only the marginal laws `Y|X` and `Z|X` are stored. Every error
//! probability, exponent and covertness figure in this crate depends on the
//! channel through these marginals alone, so sampling draws `Y` and `Z`
//! conditionally independently given `X`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math;
use crate::probability::{Alphabet, Categorical, Pmf, Sequence};

/// Row-stochastic matrix `W(out | in)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    output: Alphabet,
    rows: Vec<Pmf>,
}

impl Transition {
    pub fn new(input: &Alphabet, output: Alphabet, matrix: &[Vec<f64>]) -> Result<Self> {
        if matrix.len() != input.len() {
            return Err(Error::InvalidChannel(format!(
                "{} rows for {} input symbols",
                matrix.len(),
                input.len()
            )));
        }
        let rows = matrix
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Pmf::new(output.clone(), r.clone()).map_err(|e| {
                    Error::InvalidChannel(format!("row for input `{}`: {e}", input.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { output, rows })
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output
    }

    pub fn row(&self, input: usize) -> &Pmf {
        &self.rows[input]
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }
}

/// DMC with a designated zero ("no communication") input symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dmc {
    input: Alphabet,
    zero: usize,
    y_given_x: Transition,
    z_given_x: Transition,
}

impl Dmc {
    pub fn new(
        input: Alphabet,
        zero_symbol: &str,
        y_given_x: Transition,
        z_given_x: Transition,
    ) -> Result<Self> {
        let zero = input.index_of(zero_symbol).ok_or_else(|| {
            Error::InvalidChannel(format!("input alphabet has no zero symbol `{zero_symbol}`"))
        })?;
        if input.len() < 2 {
            return Err(Error::InvalidChannel("input alphabet needs a non-zero symbol".into()));
        }
        for (name, t) in [("Y|X", &y_given_x), ("Z|X", &z_given_x)] {
            if t.rows.len() != input.len() {
                return Err(Error::InvalidChannel(format!(
                    "{name} has {} rows for {} inputs",
                    t.rows.len(),
                    input.len()
                )));
            }
        }
        Ok(Self { input, zero, y_given_x, z_given_x })
    }

    /// Convenience constructor from raw row-major matrices.
    pub fn from_matrices(
        input: Alphabet,
        zero_symbol: &str,
        y_alphabet: Alphabet,
        y_rows: &[Vec<f64>],
        z_alphabet: Alphabet,
        z_rows: &[Vec<f64>],
    ) -> Result<Self> {
        let y = Transition::new(&input, y_alphabet, y_rows)?;
        let z = Transition::new(&input, z_alphabet, z_rows)?;
        Self::new(input, zero_symbol, y, z)
    }

    /// Binary symmetric channel with crossover `p` on both outputs, inputs
    /// and outputs labelled `{"0", "1"}`.
    pub fn bsc(p_y: f64, p_z: f64) -> Result<Self> {
        let b = Alphabet::binary();
        Self::from_matrices(
            b.clone(),
            "0",
            b.clone(),
            &[alloc::vec![1.0 - p_y, p_y], alloc::vec![p_y, 1.0 - p_y]],
            b,
            &[alloc::vec![1.0 - p_z, p_z], alloc::vec![p_z, 1.0 - p_z]],
        )
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    /// Input indices other than zero, in alphabet order.
    pub fn nonzero_inputs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.input.len()).filter(move |&x| x != self.zero)
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        self.y_given_x.output_alphabet()
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        self.z_given_x.output_alphabet()
    }

    pub fn y_given_x(&self) -> &Transition {
        &self.y_given_x
    }

    pub fn z_given_x(&self) -> &Transition {
        &self.z_given_x
    }

    pub fn y_row(&self, x: usize) -> &Pmf {
        self.y_given_x.row(x)
    }

    pub fn z_row(&self, x: usize) -> &Pmf {
        self.z_given_x.row(x)
    }

    /// Same channel with `Y|X` replaced.
    pub fn with_y(&self, y_given_x: Transition) -> Result<Self> {
        Self::new(
            self.input.clone(),
            self.input.label(self.zero),
            y_given_x,
            self.z_given_x.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Human-readable reason, present exactly when the condition fails.
    pub witness: Option<String>,
}

impl ConditionCheck {
    fn pass() -> Self {
        Self { holds: true, witness: None }
    }

    fn fail(witness: String) -> Self {
        Self { holds: false, witness: Some(witness) }
    }
}

/// An input `x_hat != 0` and output `y_star` with `W(y_star|0) > 0` and
/// `W(y_star|x_hat) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartialConnectivity {
    pub x_hat: usize,
    pub y_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// The warden's zero-input law is not a mixture of the non-zero rows.
    pub zero_row_not_mixture: ConditionCheck,
    /// Mixture weights over the non-zero inputs (alphabet order) when the
    /// zero row is a mixture.
    pub mixture_weights: Option<Vec<f64>>,
    /// `supp Z|X=x` is inside `supp Z|X=0` for every input.
    pub warden_support_nested: ConditionCheck,
    /// `supp Y|X=x` is inside `supp Y|X=0` for every input.
    pub receiver_support_nested: ConditionCheck,
    pub partial_connectivity: Option<PartialConnectivity>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.zero_row_not_mixture.holds
            && self.warden_support_nested.holds
            && self.receiver_support_nested.holds
    }

    pub fn is_partially_connected(&self) -> bool {
        self.partial_connectivity.is_some()
    }
}

const MIXTURE_TOLERANCE: f64 = 1e-12;

/// Solves the square system `a x = b` (row-major `n x n`) by Gaussian
/// elimination with partial pivoting; `None` if numerically singular.
fn solve_square(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            math::abs(a[i * n + col]).partial_cmp(&math::abs(a[j * n + col])).unwrap()
        })?;
        if math::abs(a[pivot * n + col]) < 1e-13 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Weights `psi >= 0`, `sum psi = 1` with `sum psi_i points[i] = target`, if
/// any. Enumerates basic solutions: subsets of at most `dim` points, each
/// solved as a least-squares affine combination.
pub(crate) fn convex_combination(points: &[&[f64]], target: &[f64]) -> Option<Vec<f64>> {
    let m = points.len();
    let dim = target.len();
    // a point equal to the target is the common case worth short-circuiting
    for (i, p) in points.iter().enumerate() {
        if p.iter().zip(target).all(|(a, b)| math::abs(a - b) <= MIXTURE_TOLERANCE) {
            let mut psi = alloc::vec![0.0; m];
            psi[i] = 1.0;
            return Some(psi);
        }
    }
    let max_size = m.min(dim);
    for size in 2..=max_size {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            if let Some(w) = affine_fit(points, &subset, target) {
                let mut psi = alloc::vec![0.0; m];
                for (&i, &wi) in subset.iter().zip(&w) {
                    psi[i] = wi.max(0.0);
                }
                return Some(psi);
            }
            // next subset in lexicographic order
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if subset[i] < m - size + i {
                    subset[i] += 1;
                    for j in i + 1..size {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    None
}

/// Least-squares solution of `[P_S; 1] w = [target; 1]`, accepted only when
/// the residual vanishes and `w >= 0`.
fn affine_fit(points: &[&[f64]], subset: &[usize], target: &[f64]) -> Option<Vec<f64>> {
    let s = subset.len();
    let dim = target.len();
    // Normal equations A^T A w = A^T b, with the all-ones row appended to A.
    let col = |k: usize, r: usize| if r < dim { points[subset[k]][r] } else { 1.0 };
    let rhs = |r: usize| if r < dim { target[r] } else { 1.0 };
    let mut ata = alloc::vec![0.0; s * s];
    let mut atb = alloc::vec![0.0; s];
    for i in 0..s {
        for j in 0..s {
            ata[i * s + j] = (0..=dim).map(|r| col(i, r) * col(j, r)).sum();
        }
        atb[i] = (0..=dim).map(|r| col(i, r) * rhs(r)).sum();
    }
    let w = solve_square(ata, atb, s)?;
    if w.iter().any(|&x| x < -MIXTURE_TOLERANCE) {
        return None;
    }
    let residual = (0..=dim)
        .map(|r| math::abs((0..s).map(|k| w[k] * col(k, r)).sum::<f64>() - rhs(r)))
        .fold(0.0, f64::max);
    (residual <= 1e-10).then_some(w)
}

fn support_check(t: &Transition, input: &Alphabet, zero: usize, name: &str) -> ConditionCheck {
    let base = t.row(zero).probs();
    for (x, row) in t.rows().iter().enumerate() {
        if let Some(z) = row.probs().iter().zip(base).position(|(&p, &b)| p > 0.0 && b == 0.0) {
            return ConditionCheck::fail(format!(
                "{name}: output `{}` has positive probability under input `{}` but not under the zero input",
                t.output_alphabet().label(z),
                input.label(x)
            ));
        }
    }
    ConditionCheck::pass()
}

/// Checks the standing covert-channel assumptions and partial connectivity.
pub fn validate_covert_conditions(dmc: &Dmc) -> ConditionReport {
    let zero_row = dmc.z_row(dmc.zero).probs();
    let others: Vec<usize> = dmc.nonzero_inputs().collect();
    let points: Vec<&[f64]> = others.iter().map(|&x| dmc.z_row(x).probs()).collect();
    let mixture = match points.len() {
        1 => points[0]
            .iter()
            .zip(zero_row)
            .all(|(a, b)| math::abs(a - b) <= MIXTURE_TOLERANCE)
            .then(|| alloc::vec![1.0]),
        2 => segment_combination(points[0], points[1], zero_row),
        _ => convex_combination(&points, zero_row),
    };
    let zero_row_not_mixture = match &mixture {
        None => ConditionCheck::pass(),
        Some(psi) => {
            let terms: Vec<String> = others
                .iter()
                .zip(psi)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&x, w)| format!("{}:{w:.6}", dmc.input.label(x)))
                .collect();
            ConditionCheck::fail(format!(
                "Z|X=0 equals the mixture psi = {{{}}} of non-zero input rows",
                terms.join(", ")
            ))
        }
    };
    ConditionReport {
        zero_row_not_mixture,
        mixture_weights: mixture,
        warden_support_nested: support_check(&dmc.z_given_x, &dmc.input, dmc.zero, "Z|X"),
        receiver_support_nested: support_check(&dmc.y_given_x, &dmc.input, dmc.zero, "Y|X"),
        partial_connectivity: find_partial_connectivity(dmc),
    }
}

/// `t a + (1 - t) b = target` for some `t` in `[0, 1]`.
fn segment_combination(a: &[f64], b: &[f64], target: &[f64]) -> Option<Vec<f64>> {
    let diff2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let t = if diff2 == 0.0 {
        1.0
    } else {
        a.iter()
            .zip(b)
            .zip(target)
            .map(|((x, y), z)| (z - y) * (x - y))
            .sum::<f64>()
            / diff2
    };
    if !(-MIXTURE_TOLERANCE..=1.0 + MIXTURE_TOLERANCE).contains(&t) {
        return None;
    }
    let t = t.clamp(0.0, 1.0);
    let residual = a
        .iter()
        .zip(b)
        .zip(target)
        .map(|((x, y), z)| math::abs(t * x + (1.0 - t) * y - z))
        .fold(0.0, f64::max);
    (residual <= 1e-10).then(|| alloc::vec![t, 1.0 - t])
}

/// First `(x_hat, y_star)` (smallest input, then smallest output) with
/// `W(y_star|0) > 0 = W(y_star|x_hat)`. Zeros are compared exactly.
pub fn find_partial_connectivity(dmc: &Dmc) -> Option<PartialConnectivity> {
    let zero_row = dmc.y_row(dmc.zero).probs();
    dmc.nonzero_inputs().find_map(|x| {
        dmc.y_row(x)
            .probs()
            .iter()
            .zip(zero_row)
            .position(|(&p, &p0)| p0 > 0.0 && p == 0.0)
            .map(|y| PartialConnectivity { x_hat: x, y_star: y })
    })
}

/// Samples channel outputs for input `x`; `Y` and `Z` are drawn
/// independently given each input symbol.
pub fn sample_channel(dmc: &Dmc, x: &Sequence, seed: u64) -> Result<(Sequence, Sequence)> {
    if x.alphabet() != &dmc.input {
        return Err(Error::AlphabetMismatch("input sequence is not over the channel input alphabet".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_samplers: Vec<Categorical> = dmc.y_given_x.rows().iter().map(|r| Categorical::new(r.probs())).collect();
    let z_samplers: Vec<Categorical> = dmc.z_given_x.rows().iter().map(|r| Categorical::new(r.probs())).collect();
    let mut y = Vec::with_capacity(x.len());
    let mut z = Vec::with_capacity(x.len());
    for &xi in x.data() {
        y.push(y_samplers[xi].sample(&mut rng));
        z.push(z_samplers[xi].sample(&mut rng));
    }
    Ok((
        Sequence::from_parts_unchecked(dmc.y_alphabet().clone(), y),
        Sequence::from_parts_unchecked(dmc.z_alphabet().clone(), z),
    ))
}
