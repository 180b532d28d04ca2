//! Scalar helpers shared by the engines: `libm` wrappers (so results do not
//! depend on whether `std` is linked), log-domain accumulation, log-factorials
//! and composition enumeration for the method of types.

use alloc::vec::Vec;

pub use core::f64::consts::{LN_2, LOG2_E};

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// `ln(1 - e^a)` for `a <= 0`.
pub fn ln_one_minus_exp(a: f64) -> f64 {
    if a > -LN_2 {
        ln(-exp_m1(a))
    } else {
        ln_1p(-exp(a))
    }
}

/// `ln |e^a - 1|`, `-inf` at `a == 0`. Accepts `a == -inf` (gives 0).
pub fn ln_abs_exp_m1(a: f64) -> f64 {
    if a == 0.0 {
        f64::NEG_INFINITY
    } else if a > 0.0 {
        // e^a - 1 = e^a (1 - e^-a)
        a + ln_one_minus_exp(-a)
    } else {
        ln_one_minus_exp(a)
    }
}

/// `ln(e^a + e^b)`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ln_1p(exp(lo - hi))
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, ln_x: f64) {
        if ln_x == f64::NEG_INFINITY {
            return;
        }
        if ln_x <= self.max {
            self.scaled += exp(ln_x - self.max);
        } else {
            self.scaled = self.scaled * exp(self.max - ln_x) + 1.0;
            self.max = ln_x;
        }
    }

    pub fn merge(&mut self, other: &LogSum) {
        if other.scaled == 0.0 {
            return;
        }
        if self.scaled == 0.0 {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * exp(other.max - self.max);
        } else {
            self.scaled = self.scaled * exp(self.max - other.max) + other.scaled;
            self.max = other.max;
        }
    }

    /// `ln` of the accumulated sum (`-inf` when empty).
    pub fn ln(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + ln(self.scaled)
        }
    }
}

/// Table of `ln k!` for `k <= n`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let table = (0..=n).map(|k| libm::lgamma(k as f64 + 1.0)).collect();
        Self { table }
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln (n! / prod_i counts_i!)` with `n = sum(counts)`.
    pub fn multinomial(&self, counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        counts.iter().fold(self.get(n), |acc, &c| acc - self.get(c))
    }

    pub fn binomial(&self, n: usize, k: usize) -> f64 {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

/// `ln P[type == counts]` for i.i.d. draws from `probs`; `-inf` when a
/// positive count sits on a zero-probability symbol.
pub fn ln_type_probability(lf: &LogFactorials, counts: &[usize], probs: &[f64]) -> f64 {
    let mut acc = lf.multinomial(counts);
    for (&c, &p) in counts.iter().zip(probs) {
        if c > 0 {
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += c as f64 * ln(p);
        }
    }
    acc
}

/// Number of compositions of `n` into `parts` non-negative integers,
/// `C(n + parts - 1, parts - 1)`, as a float (may be huge).
pub fn composition_count(n: usize, parts: usize) -> f64 {
    if parts == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut c = 1.0;
    for i in 1..parts {
        c = c * (n + i) as f64 / i as f64;
    }
    c
}

/// Calls `f` on every vector of `parts` non-negative integers summing to `n`,
/// in lexicographic order of the leading entries.
pub fn for_each_composition<F: FnMut(&[usize])>(n: usize, parts: usize, mut f: F) {
    if parts == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut counts = alloc::vec![0usize; parts];
    counts[parts - 1] = n;
    loop {
        f(&counts);
        // Advance: find the rightmost non-final position that can take one
        // more unit from the tail.
        let tail = counts[parts - 1];
        if parts == 1 {
            return;
        }
        if tail > 0 {
            counts[parts - 2] += 1;
            counts[parts - 1] = tail - 1;
            continue;
        }
        // tail is zero: carry leftwards
        let mut i = parts - 2;
        loop {
            if i == 0 {
                return;
            }
            if counts[i] > 0 {
                let moved = counts[i];
                counts[i] = 0;
                counts[i - 1] += 1;
                counts[parts - 1] = moved - 1;
                break;
            }
            i -= 1;
        }
    }
}

/// Binary search for the root of a monotone function on `[lo, hi]`, where
/// `f(lo)` and `f(hi)` have opposite signs. Returns the midpoint of the last
/// bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let f_lo = f(lo);
    let lo_negative = f_lo < 0.0;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`; the endpoints are compared too, so monotone
/// functions resolve to the correct boundary.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Least-squares line `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn compositions_enumerate_all() {
        let mut seen = Vec::new();
        for_each_composition(3, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen.len() as f64, composition_count(3, 3));
        assert!(seen.iter().all(|c| c.iter().sum::<usize>() == 3));
        let mut dedup = seen.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), seen.len());

        let mut single = Vec::new();
        for_each_composition(5, 1, |c| single.push(c.to_vec()));
        assert_eq!(single, alloc::vec![alloc::vec![5]]);

        let mut two = 0;
        for_each_composition(7, 2, |_| two += 1);
        assert_eq!(two, 8);
    }

    #[test]
    fn log_sum_matches_direct() {
        let xs = [0.1f64, 0.25, 1e-5, 3.0];
        let mut acc = LogSum::new();
        for &x in &xs {
            acc.add(ln(x));
        }
        let direct: f64 = xs.iter().sum();
        assert!((acc.ln() - ln(direct)).abs() < 1e-14);
        assert_eq!(LogSum::new().ln(), f64::NEG_INFINITY);

        let mut a = LogSum::new();
        a.add(ln(0.1));
        let mut b = LogSum::new();
        b.add(ln(3.0));
        b.add(ln(0.25));
        a.merge(&b);
        assert!((a.ln() - ln(3.35)).abs() < 1e-14);
    }

    #[test]
    fn ln_abs_exp_m1_branches() {
        for a in [-50.0, -1.0, -1e-9, 1e-9, 0.5, 30.0] {
            let direct = ln(abs(exp_m1(a)));
            assert!((ln_abs_exp_m1(a) - direct).abs() < 1e-12, "a = {a}");
        }
        assert_eq!(ln_abs_exp_m1(f64::NEG_INFINITY), 0.0);
        assert_eq!(ln_abs_exp_m1(0.0), f64::NEG_INFINITY);
        assert!((ln_abs_exp_m1(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn binomial_coefficients() {
        let lf = LogFactorials::new(10);
        assert!((exp(lf.binomial(10, 3)) - 120.0).abs() < 1e-9);
        assert!((exp(lf.multinomial(&[2, 3, 5])) - 2520.0).abs() < 1e-8);
    }

    #[test]
    fn golden_section_finds_interior_and_boundary() {
        let (x, v) = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && v < 1e-12);
        let (x, _) = golden_section(|x| x, 0.2, 1.0, 1e-12);
        assert_eq!(x, 0.2);
    }
}
