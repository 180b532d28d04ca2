//! Finite-alphabet probability primitives: alphabets, pmfs, joint pmfs,
//! sequences, divergences, empirical types, strong typicality and seeded
//! i.i.d. sampling.
//!
//! Divergences are computed in nats; [`LogBase`] converts at the reporting
//! boundary. `0 log 0 = 0`, and a divergence that would be `+inf` is an
//! [`Error::SupportViolation`] rather than an infinite float.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Mass deviations up to this are renormalised away on construction.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Ordered set of distinct symbol labels.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet(Arc<[String]>);

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must contain at least one symbol".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Self(symbols.into()))
    }

    /// `{"0", "1", ..., "size-1"}`.
    pub fn numbered(size: usize) -> Self {
        assert!(size >= 1, "alphabet size must be positive");
        Self((0..size).map(|i| i.to_string()).collect::<Vec<_>>().into())
    }

    pub fn binary() -> Self {
        Self::numbered(2)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|s| s == label)
    }

    pub(crate) fn ensure_same(&self, other: &Alphabet, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.symbols(),
                other.symbols()
            )))
        }
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Alphabet::new(symbols)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.0.to_vec()
    }
}

/// Unit in which information quantities are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Bits,
    Nats,
}

impl LogBase {
    /// Converts a quantity measured in nats into this base.
    #[inline]
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats * math::LOG2_E,
        }
    }

    #[inline]
    pub fn to_nats(self, value: f64) -> f64 {
        match self {
            LogBase::Nats => value,
            LogBase::Bits => value * math::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

fn validate_masses(probs: &mut [f64]) -> Result<()> {
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
        }
        total += p;
    }
    if math::abs(total - 1.0) > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidPmf(format!("total mass {total} is not 1")));
    }
    if total != 1.0 {
        for p in probs.iter_mut() {
            *p /= total;
        }
    }
    Ok(())
}

/// Probability mass function on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(alphabet: Alphabet, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} probabilities for an alphabet of size {}",
                probs.len(),
                alphabet.len()
            )));
        }
        validate_masses(&mut probs)?;
        Ok(Self { alphabet, probs })
    }

    /// Bernoulli law on `{"0", "1"}` with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(Alphabet::binary(), alloc::vec![1.0 - p, p])
    }

    pub fn point_mass(alphabet: Alphabet, index: usize) -> Result<Self> {
        if index >= alphabet.len() {
            return Err(Error::SymbolOutOfRange { index, size: alphabet.len() });
        }
        let mut probs = alloc::vec![0.0; alphabet.len()];
        probs[index] = 1.0;
        Ok(Self { alphabet, probs })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Self {
            alphabet,
            probs: alloc::vec![1.0 / k as f64; k],
        }
    }

    /// Type of a count vector.
    pub fn from_counts(alphabet: Alphabet, counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::new(alphabet, probs)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i)
    }

    /// `self(a) > 0 => other(a) > 0` for every symbol.
    pub fn is_dominated_by(&self, other: &Pmf) -> bool {
        self.probs.iter().zip(&other.probs).all(|(&p, &q)| p == 0.0 || q > 0.0)
    }

    /// L-infinity distance.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    /// Same law with the alphabet replaced (e.g. after a relabeling).
    pub fn relabel(&self, alphabet: Alphabet) -> Result<Self> {
        Self::new(alphabet, self.probs.clone())
    }
}

/// Joint pmf on `rows x cols`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    rows: Alphabet,
    cols: Alphabet,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: Alphabet, cols: Alphabet, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows.len() * cols.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} entries for a {}x{} joint pmf",
                probs.len(),
                rows.len(),
                cols.len()
            )));
        }
        validate_masses(&mut probs)?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: Alphabet, cols: Alphabet, matrix: &[Vec<f64>]) -> Result<Self> {
        if matrix.len() != rows.len() || matrix.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::AlphabetMismatch(format!(
                "matrix shape does not match {}x{} alphabets",
                rows.len(),
                cols.len()
            )));
        }
        Self::new(rows, cols, matrix.concat())
    }

    pub fn product(row: &Pmf, col: &Pmf) -> Self {
        let probs = row
            .probs
            .iter()
            .flat_map(|&a| col.probs.iter().map(move |&b| a * b))
            .collect();
        Self {
            rows: row.alphabet.clone(),
            cols: col.alphabet.clone(),
            probs,
        }
    }

    pub fn row_alphabet(&self) -> &Alphabet {
        &self.rows
    }

    pub fn col_alphabet(&self) -> &Alphabet {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.cols.len();
        &self.probs[row * w..(row + 1) * w]
    }

    pub fn row_marginal(&self) -> Pmf {
        let probs = (0..self.n_rows()).map(|i| self.row(i).iter().sum()).collect();
        Pmf {
            alphabet: self.rows.clone(),
            probs,
        }
    }

    pub fn col_marginal(&self) -> Pmf {
        let mut probs = alloc::vec![0.0; self.n_cols()];
        for i in 0..self.n_rows() {
            for (acc, &p) in probs.iter_mut().zip(self.row(i)) {
                *acc += p;
            }
        }
        Pmf {
            alphabet: self.cols.clone(),
            probs,
        }
    }

    /// `self(a, b) > 0 => other(a, b) > 0`.
    pub fn is_dominated_by(&self, other: &JointPmf) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.probs.iter().zip(&other.probs).all(|(&p, &q)| p == 0.0 || q > 0.0)
    }

    /// Flattened view as a pmf over `rows.len() * cols.len()` cells.
    pub(crate) fn flat_probs(&self) -> &[f64] {
        &self.probs
    }

    /// Applies symbol permutations: entry `(perm_r[i], perm_c[j])` of the
    /// result is entry `(i, j)` of `self`. Alphabet labels move with their
    /// entries.
    pub fn permuted(&self, perm_r: &[usize], perm_c: &[usize]) -> Result<Self> {
        let (r, c) = (self.n_rows(), self.n_cols());
        let mut probs = alloc::vec![0.0; r * c];
        let mut row_labels = alloc::vec![String::new(); r];
        let mut col_labels = alloc::vec![String::new(); c];
        for i in 0..r {
            row_labels[perm_r[i]] = self.rows.label(i).into();
            for j in 0..c {
                probs[perm_r[i] * c + perm_c[j]] = self.get(i, j);
            }
        }
        for j in 0..c {
            col_labels[perm_c[j]] = self.cols.label(j).into();
        }
        Self::new(Alphabet::new(row_labels)?, Alphabet::new(col_labels)?, probs)
    }
}

/// A sequence of symbol indices over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    alphabet: Alphabet,
    data: Vec<usize>,
}

impl Sequence {
    pub fn new(alphabet: Alphabet, data: Vec<usize>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(&index) = data.iter().find(|&&s| s >= alphabet.len()) {
            return Err(Error::SymbolOutOfRange { index, size: alphabet.len() });
        }
        Ok(Self { alphabet, data })
    }

    /// `n` copies of one symbol.
    pub fn constant(alphabet: Alphabet, symbol: usize, n: usize) -> Result<Self> {
        Self::new(alphabet, alloc::vec![symbol; n])
    }

    pub(crate) fn from_parts_unchecked(alphabet: Alphabet, data: Vec<usize>) -> Self {
        Self { alphabet, data }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn data(&self) -> &[usize] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        counts_of(&self.data, self.alphabet.len())
    }

    /// Number of positions not equal to `zero`.
    pub fn hamming_weight(&self, zero: usize) -> usize {
        self.data.iter().filter(|&&s| s != zero).count()
    }

    pub fn hamming_distance(&self, other: &Sequence) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count())
    }
}

pub(crate) fn counts_of(data: &[usize], size: usize) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; size];
    for &s in data {
        counts[s] += 1;
    }
    counts
}

/// `sum_a p(a) ln(p(a)/q(a))` over raw slices; `None` when `p` is not
/// absolutely continuous with respect to `q`.
pub(crate) fn kl_nats(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa > 0.0 {
            if qa <= 0.0 {
                return None;
            }
            acc += pa * math::ln(pa / qa);
        }
    }
    // Rounding can leave a tiny negative value when p == q.
    Some(acc.max(0.0))
}

/// [`kl_nats`] with `+inf` for the unbounded case.
pub(crate) fn kl_nats_or_inf(p: &[f64], q: &[f64]) -> f64 {
    kl_nats(p, q).unwrap_or(f64::INFINITY)
}

/// Kullback-Leibler divergence `D(p || q)`.
pub fn kl_divergence(p: &Pmf, q: &Pmf, base: LogBase) -> Result<f64> {
    p.alphabet.ensure_same(&q.alphabet, "kl_divergence")?;
    match kl_nats(&p.probs, &q.probs) {
        Some(d) => Ok(base.from_nats(d)),
        None => {
            let a = p
                .probs
                .iter()
                .zip(&q.probs)
                .position(|(&pa, &qa)| pa > 0.0 && qa <= 0.0)
                .unwrap_or(0);
            Err(Error::SupportViolation(format!(
                "D(p||q) is infinite: p({}) > 0 = q({})",
                p.alphabet.label(a),
                p.alphabet.label(a)
            )))
        }
    }
}

pub(crate) fn chi_squared_raw(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa == qa {
            continue;
        }
        if qa <= 0.0 {
            return None;
        }
        acc += (pa - qa) * (pa - qa) / qa;
    }
    Some(acc)
}

/// Chi-squared distance `sum_a (p(a) - q(a))^2 / q(a)`.
pub fn chi_squared(p: &Pmf, q: &Pmf) -> Result<f64> {
    p.alphabet.ensure_same(&q.alphabet, "chi_squared")?;
    chi_squared_raw(&p.probs, &q.probs).ok_or_else(|| {
        let a = p
            .probs
            .iter()
            .zip(&q.probs)
            .position(|(&pa, &qa)| pa != qa && qa <= 0.0)
            .unwrap_or(0);
        Error::DivisionBySupportZero(p.alphabet.label(a).into())
    })
}

/// Shannon entropy.
pub fn entropy(p: &Pmf, base: LogBase) -> f64 {
    let h: f64 = p
        .probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * math::ln(x))
        .sum();
    base.from_nats(h.max(0.0))
}

/// Empirical type of a sequence.
pub fn empirical_type(s: &Sequence) -> Pmf {
    Pmf::from_counts(s.alphabet.clone(), &s.counts()).expect("sequences are non-empty")
}

/// Joint type of two equal-length sequences.
pub fn joint_type(s1: &Sequence, s2: &Sequence) -> Result<JointPmf> {
    if s1.len() != s2.len() {
        return Err(Error::LengthMismatch { left: s1.len(), right: s2.len() });
    }
    if s1.is_empty() {
        return Err(Error::EmptySequence);
    }
    let cols = s2.alphabet.len();
    let mut counts = alloc::vec![0usize; s1.alphabet.len() * cols];
    for (&a, &b) in s1.data.iter().zip(&s2.data) {
        counts[a * cols + b] += 1;
    }
    let n = s1.len() as f64;
    JointPmf::new(
        s1.alphabet.clone(),
        s2.alphabet.clone(),
        counts.iter().map(|&c| c as f64 / n).collect(),
    )
}

/// Per-letter strong typicality of a count vector: every `|c(a)/n - p(a)| <= mu`
/// and symbols with `p(a) = 0` never occur. Every engine in the crate uses
/// this predicate so exact and sampled results classify identically.
pub fn counts_are_typical(counts: &[usize], p: &[f64], mu: f64) -> bool {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return false;
    }
    let n = n as f64;
    counts.iter().zip(p).all(|(&c, &pa)| {
        if pa == 0.0 {
            c == 0
        } else {
            math::abs(c as f64 / n - pa) <= mu
        }
    })
}

/// Whether `s` lies in the strongly typical set of `p` with slack `mu`.
pub fn is_strongly_typical(s: &Sequence, p: &Pmf, mu: f64) -> Result<bool> {
    s.alphabet.ensure_same(&p.alphabet, "is_strongly_typical")?;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("typicality slack must be positive, got {mu}")));
    }
    Ok(counts_are_typical(&s.counts(), &p.probs, mu))
}

/// Categorical sampler over the symbols of a pmf.
#[derive(Debug, Clone)]
pub(crate) struct Categorical {
    index: Option<WeightedIndex<f64>>,
    only: usize,
}

impl Categorical {
    pub fn new(probs: &[f64]) -> Self {
        let support: Vec<usize> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect();
        if support.len() == 1 {
            Self { index: None, only: support[0] }
        } else {
            Self {
                index: Some(WeightedIndex::new(probs.iter().copied()).expect("valid pmf weights")),
                only: 0,
            }
        }
    }

    #[inline]
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.index {
            Some(w) => w.sample(rng),
            None => self.only,
        }
    }
}

/// Draws `n` i.i.d. pairs from `joint`; deterministic in `seed`.
pub fn sample_iid(joint: &JointPmf, n: usize, seed: u64) -> Result<(Sequence, Sequence)> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = Categorical::new(joint.flat_probs());
    let cols = joint.n_cols();
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = cells.sample(&mut rng);
        u.push(cell / cols);
        v.push(cell % cols);
    }
    Ok((
        Sequence::from_parts_unchecked(joint.rows.clone(), u),
        Sequence::from_parts_unchecked(joint.cols.clone(), v),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bern(p: f64) -> Pmf {
        Pmf::bernoulli(p).unwrap()
    }

    #[test]
    fn kl_matches_reference_values() {
        let e1 = kl_divergence(&bern(0.2), &bern(0.7), LogBase::Bits).unwrap();
        assert_abs_diff_eq!(e1, 0.7706, epsilon = 5e-5);
        let e3 = kl_divergence(&bern(0.4), &bern(0.6), LogBase::Bits).unwrap();
        assert_abs_diff_eq!(e3, 0.1170, epsilon = 5e-5);
        let p = Pmf::new(Alphabet::numbered(3), alloc::vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(kl_divergence(&p, &p, LogBase::Nats).unwrap(), 0.0);
    }

    #[test]
    fn kl_support_violation_and_mismatch() {
        let err = kl_divergence(&bern(0.5), &bern(0.0), LogBase::Nats).unwrap_err();
        assert!(matches!(err, Error::SupportViolation(_)));
        // reverse direction is finite
        assert!(kl_divergence(&bern(0.0), &bern(0.5), LogBase::Nats).is_ok());
        let three = Pmf::uniform(Alphabet::numbered(3));
        assert!(matches!(
            kl_divergence(&bern(0.5), &three, LogBase::Nats),
            Err(Error::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn chi_squared_examples() {
        assert_abs_diff_eq!(chi_squared(&bern(0.6), &bern(0.4)).unwrap(), 0.04 / 0.4 + 0.04 / 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(chi_squared(&bern(0.6), &bern(0.4)).unwrap(), 0.1667, epsilon = 1e-4);
        assert_eq!(chi_squared(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert!(matches!(
            chi_squared(&bern(0.3), &bern(0.0)),
            Err(Error::DivisionBySupportZero(_))
        ));
        // equal zeros are fine
        let p = Pmf::new(Alphabet::numbered(3), alloc::vec![0.5, 0.5, 0.0]).unwrap();
        let q = Pmf::new(Alphabet::numbered(3), alloc::vec![0.25, 0.75, 0.0]).unwrap();
        assert!(chi_squared(&p, &q).is_ok());
    }

    #[test]
    fn chi_squared_random_four_symbols_matches_direct_sum() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let q = [0.35, 0.15, 0.25, 0.25];
        let mut direct = 0.0;
        for i in 0..4 {
            direct += (p[i] - q[i]) * (p[i] - q[i]) / q[i];
        }
        let a = Alphabet::numbered(4);
        let got = chi_squared(&Pmf::new(a.clone(), p.to_vec()).unwrap(), &Pmf::new(a, q.to_vec()).unwrap()).unwrap();
        assert_abs_diff_eq!(got, direct, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let pm = Pmf::point_mass(Alphabet::numbered(4), 2).unwrap();
        assert_eq!(entropy(&pm, LogBase::Bits), 0.0);
        assert_abs_diff_eq!(entropy(&Pmf::uniform(Alphabet::numbered(4)), LogBase::Bits), 2.0, epsilon = 1e-15);
        let h = entropy(&bern(0.884), LogBase::Bits);
        assert_abs_diff_eq!(h, 0.5178, epsilon = 1e-3);
    }

    #[test]
    fn pmf_normalization_policy() {
        let a = Alphabet::binary();
        let p = Pmf::new(a.clone(), alloc::vec![0.5 + 4e-10, 0.5]).unwrap();
        assert_eq!(p.probs().iter().sum::<f64>(), 1.0);
        assert!(Pmf::new(a.clone(), alloc::vec![0.5 + 1e-8, 0.5]).is_err());
        assert!(Pmf::new(a.clone(), alloc::vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(a, alloc::vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert!(Alphabet::new(["a", "b", "a"]).is_err());
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        let a = Alphabet::new(["x", "y"]).unwrap();
        assert_eq!(a.index_of("y"), Some(1));
        assert_eq!(a.label(0), "x");
    }

    #[test]
    fn empirical_and_joint_types() {
        let a = Alphabet::binary();
        let s = Sequence::new(a.clone(), alloc::vec![0, 1, 1, 0]).unwrap();
        assert_eq!(empirical_type(&s).probs(), &[0.5, 0.5]);

        let s1 = Sequence::new(a.clone(), alloc::vec![0, 0, 1]).unwrap();
        let s2 = Sequence::new(a.clone(), alloc::vec![1, 1, 1]).unwrap();
        let jt = joint_type(&s1, &s2).unwrap();
        assert_abs_diff_eq!(jt.get(0, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jt.get(1, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(jt.get(0, 0), 0.0);
        assert_eq!(jt.get(1, 0), 0.0);

        let c = Sequence::constant(a.clone(), 1, 5).unwrap();
        assert_eq!(empirical_type(&c).probs(), &[0.0, 1.0]);

        let short = Sequence::new(a.clone(), alloc::vec![0, 1]).unwrap();
        assert!(matches!(joint_type(&s1, &short), Err(Error::LengthMismatch { .. })));
        assert!(matches!(Sequence::new(a, Vec::new()), Err(Error::EmptySequence)));
    }

    #[test]
    fn hamming_weight_and_distance() {
        let a = Alphabet::numbered(3);
        let x = Sequence::new(a.clone(), alloc::vec![0, 2, 0, 1]).unwrap();
        let y = Sequence::new(a, alloc::vec![0, 0, 0, 1]).unwrap();
        assert_eq!(x.hamming_weight(0), 2);
        assert_eq!(x.hamming_distance(&y).unwrap(), 1);
    }

    #[test]
    fn typicality_examples() {
        let a = Alphabet::binary();
        let ones = Sequence::constant(a.clone(), 1, 10).unwrap();
        assert!(!is_strongly_typical(&ones, &bern(0.2), 0.1).unwrap());
        let s = Sequence::new(a.clone(), alloc::vec![0, 0, 0, 0, 1]).unwrap();
        assert!(is_strongly_typical(&s, &bern(0.2), 1e-9).unwrap());
        // zero-frequency clause holds for every slack
        let p = Pmf::new(Alphabet::numbered(3), alloc::vec![0.5, 0.5, 0.0]).unwrap();
        let t = Sequence::new(Alphabet::numbered(3), alloc::vec![0, 1, 2, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        for mu in [0.01, 0.5, 1.0, 10.0] {
            assert!(!is_strongly_typical(&t, &p, mu).unwrap());
        }
        assert!(is_strongly_typical(&s, &bern(0.2), 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_handles_point_masses() {
        let j = JointPmf::new(Alphabet::binary(), Alphabet::binary(), alloc::vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let (u, v) = sample_iid(&j, 50, 3).unwrap();
        assert!(u.data().iter().all(|&x| x == 1));
        assert!(v.data().iter().all(|&x| x == 0));

        let ex = JointPmf::new(Alphabet::binary(), Alphabet::numbered(1), alloc::vec![0.8, 0.2]).unwrap();
        assert_eq!(sample_iid(&ex, 100, 9).unwrap(), sample_iid(&ex, 100, 9).unwrap());
        assert_ne!(sample_iid(&ex, 100, 9).unwrap().0, sample_iid(&ex, 100, 10).unwrap().0);
    }

    #[test]
    fn sampled_frequency_within_binomial_tolerance() {
        let ex = JointPmf::new(Alphabet::binary(), Alphabet::numbered(1), alloc::vec![0.8, 0.2]).unwrap();
        let n = 100_000;
        let (u, _) = sample_iid(&ex, n, 2024).unwrap();
        let freq = empirical_type(&u).prob(1);
        let sigma = math::sqrt(0.2 * 0.8 / n as f64);
        assert!(math::abs(freq - 0.2) <= 4.0 * sigma, "freq {freq}");
        assert!(math::abs(freq - 0.2) < 0.01);
    }

    #[test]
    fn empirical_type_converges_for_most_seeds() {
        let j = JointPmf::new(
            Alphabet::numbered(3),
            Alphabet::binary(),
            alloc::vec![0.1, 0.2, 0.05, 0.25, 0.3, 0.1],
        )
        .unwrap();
        let pu = j.row_marginal();
        let failures = (0..200u64)
            .filter(|&seed| {
                let (u, _) = sample_iid(&j, 10_000, seed).unwrap();
                empirical_type(&u).max_abs_diff(&pu) >= 0.05
            })
            .count();
        assert!(failures <= 2, "{failures} of 200 seeds failed");
    }

    fn pmf_strategy(k: usize) -> impl Strategy<Value = Pmf> {
        proptest::collection::vec(0.01f64..1.0, k).prop_map(move |w| {
            let s: f64 = w.iter().sum();
            Pmf::new(Alphabet::numbered(k), w.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_zero_iff_equal(p in pmf_strategy(4), q in pmf_strategy(4)) {
            let d = kl_divergence(&p, &q, LogBase::Nats).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p, LogBase::Nats).unwrap(), 0.0);
            if p.max_abs_diff(&q) > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn bits_are_nats_times_log2e(p in pmf_strategy(3), q in pmf_strategy(3)) {
            let nats = kl_divergence(&p, &q, LogBase::Nats).unwrap();
            let bits = kl_divergence(&p, &q, LogBase::Bits).unwrap();
            prop_assert_eq!(bits, nats * math::LOG2_E);
        }

        #[test]
        fn chi_squared_matches_direct_sum(p in pmf_strategy(5), q in pmf_strategy(5)) {
            let direct: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b) * (a - b) / b).sum();
            let got = chi_squared(&p, &q).unwrap();
            prop_assert!(got >= 0.0);
            prop_assert!(math::abs(got - direct) <= 1e-12 * (1.0 + direct));
        }

        #[test]
        fn sequence_is_typical_for_its_own_type(
            data in proptest::collection::vec(0usize..4, 1..200),
            mu in 1e-6f64..1.0,
        ) {
            let s = Sequence::new(Alphabet::numbered(4), data).unwrap();
            let t = empirical_type(&s);
            prop_assert!(is_strongly_typical(&s, &t, mu).unwrap());
        }
    }
}
