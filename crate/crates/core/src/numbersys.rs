//! Fibonacci and Tribonacci numeration, digit weights of the Fibonacci and
//! Tribonacci words, and explicit lower bounds on `λ_{k+N} - λ_k`.
//!
//! Indexing: `F_0 = 0, F_1 = 1` and `T_0 = T_1 = 0, T_2 = 1`. A block
//! `σ_3^{h-3}(1)` has length `T_h` and contains `T_{h-j}` copies of digit `j`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::spectral::{perron_root, DEFAULT_TOLERANCE};
use crate::substitution::Digit;

/// Fibonacci numbers with a growing cache.
#[derive(Debug, Clone)]
pub struct FibSeq {
    cache: Vec<BigUint>,
}

impl Default for FibSeq {
    fn default() -> Self {
        Self::new()
    }
}

impl FibSeq {
    pub fn new() -> Self {
        Self {
            cache: vec![BigUint::zero(), BigUint::one()],
        }
    }

    pub fn extend_to(&mut self, n: usize) {
        while self.cache.len() <= n {
            let k = self.cache.len();
            let next = &self.cache[k - 1] + &self.cache[k - 2];
            self.cache.push(next);
        }
    }

    /// `F_n`, extending the cache if needed.
    pub fn get(&mut self, n: usize) -> &BigUint {
        self.extend_to(n);
        &self.cache[n]
    }

    /// `F_n` if already cached.
    pub fn cached(&self, n: usize) -> Option<&BigUint> {
        self.cache.get(n)
    }
}

/// Tribonacci numbers with a growing cache.
#[derive(Debug, Clone)]
pub struct TribSeq {
    cache: Vec<BigUint>,
}

impl Default for TribSeq {
    fn default() -> Self {
        Self::new()
    }
}

impl TribSeq {
    pub fn new() -> Self {
        Self {
            cache: vec![BigUint::zero(), BigUint::zero(), BigUint::one()],
        }
    }

    pub fn extend_to(&mut self, n: usize) {
        while self.cache.len() <= n {
            let k = self.cache.len();
            let next = &self.cache[k - 1] + &self.cache[k - 2] + &self.cache[k - 3];
            self.cache.push(next);
        }
    }

    pub fn get(&mut self, n: usize) -> &BigUint {
        self.extend_to(n);
        &self.cache[n]
    }

    pub fn cached(&self, n: usize) -> Option<&BigUint> {
        self.cache.get(n)
    }
}

pub fn fib(n: usize) -> BigUint {
    FibSeq::new().get(n).clone()
}

pub fn trib(n: usize) -> BigUint {
    TribSeq::new().get(n).clone()
}

/// `F_0 ..= F_93`, every Fibonacci number that fits in a `u64`.
fn fib_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut seq = FibSeq::new();
        (0..=93)
            .map(|i| seq.get(i).to_u64().expect("F_93 fits in u64"))
            .collect()
    })
}

/// `T_0 ..= T_73`, every Tribonacci number that fits in a `u64`.
fn trib_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut seq = TribSeq::new();
        (0..=73)
            .map(|i| seq.get(i).to_u64().expect("T_73 fits in u64"))
            .collect()
    })
}

fn golden() -> f64 {
    static PHI: OnceLock<f64> = OnceLock::new();
    *PHI.get_or_init(|| perron_root(2, DEFAULT_TOLERANCE).expect("ρ_2").rho)
}

fn tribonacci_constant() -> f64 {
    static TAU: OnceLock<f64> = OnceLock::new();
    *TAU.get_or_init(|| perron_root(3, DEFAULT_TOLERANCE).expect("ρ_3").rho)
}

/// Greedy Tribonacci expansion `n = Σ_{h=3}^{L} x_h T_h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TribExpansion {
    pub n: u64,
    /// `L`, the index of the leading term.
    pub top: usize,
    /// `x_3, …, x_L`.
    pub bits: Vec<u8>,
}

impl TribExpansion {
    /// `x_h`, zero outside `3..=L`.
    pub fn bit(&self, h: usize) -> u8 {
        if (3..=self.top).contains(&h) {
            self.bits[h - 3]
        } else {
            0
        }
    }

    /// The bits as a string `x_3 x_4 … x_L`.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|b| char::from(b'0' + b)).collect()
    }

    /// `Σ x_h T_h`.
    pub fn eval(&self) -> u64 {
        let t = trib_table();
        (3..=self.top).map(|h| u64::from(self.bit(h)) * t[h]).sum()
    }

    /// No three consecutive ones.
    pub fn is_canonical(&self) -> bool {
        !self.bits.windows(3).any(|w| w == [1, 1, 1])
    }

    /// `Σ x_h T_{h-j}`: the weight of digit `j` in `v_0 … v_{n-1}`.
    pub fn prefix_weight(&self, j: usize) -> u64 {
        let t = trib_table();
        (3..=self.top).map(|h| u64::from(self.bit(h)) * t[h - j]).sum()
    }
}

pub fn trib_expand(n: u64) -> Result<TribExpansion> {
    if n == 0 {
        return Err(Error::domain("Tribonacci expansion needs a positive integer"));
    }
    let t = trib_table();
    let top = (3..t.len()).rev().find(|&h| t[h] <= n).expect("T_3 = 1 <= n");
    let mut bits = vec![0u8; top - 2];
    let mut rest = n;
    for h in (3..=top).rev() {
        if t[h] <= rest {
            bits[h - 3] = 1;
            rest -= t[h];
        }
    }
    let exp = TribExpansion { n, top, bits };
    if rest != 0 || !exp.is_canonical() {
        return Err(Error::numeric(format!(
            "greedy expansion of {n} is not canonical: {}",
            exp.bit_string()
        )));
    }
    Ok(exp)
}

/// `Σ x_h T_h` for an arbitrary bit vector `x_3, x_4, …`.
pub fn trib_eval(bits: &[u8]) -> u64 {
    let t = trib_table();
    bits.iter().enumerate().map(|(i, &b)| u64::from(b) * t[i + 3]).sum()
}

/// `K ≥ 3` with `F_K = n`, if `n ≥ 2` is a Fibonacci number.
pub fn fibonacci_index(n: u64) -> Option<usize> {
    if n < 2 {
        return None;
    }
    fib_table().iter().position(|&f| f == n).filter(|&k| k >= 3)
}

/// Integer bounds on `|w|_2` over the length-`n` factors of `v_2`.
///
/// Generic lengths use `||w|_2 - n/φ²| ≤ 1`; Fibonacci lengths `n = F_K`
/// use the sharp range `[F_{K-2} - 1, F_{K-2}]` (K odd) or
/// `[F_{K-2}, F_{K-2} + 1]` (K even).
pub fn fibonacci_subword_weight_bounds(n: u64) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::domain("factor length must be positive"));
    }
    if let Some(k) = fibonacci_index(n) {
        let f = fib_table()[k - 2];
        return Ok(if k % 2 == 1 { (f - 1, f) } else { (f, f + 1) });
    }
    let centre = n as f64 / (golden() * golden());
    let low = (centre - 1.0).ceil().max(0.0) as u64;
    let high = ((centre + 1.0).floor() as u64).min(n);
    Ok((low, high))
}

/// Exact prefix weight and the ±2 envelope for factors of `v_3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TribWeights {
    pub prefix_exact: u64,
    pub low: u64,
    pub high: u64,
}

pub fn tribonacci_subword_weights(n: u64, j: usize) -> Result<TribWeights> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidDigit {
            digit: j as u32,
            order: 3,
        });
    }
    let exp = trib_expand(n)?;
    let prefix_exact = exp.prefix_weight(j);
    Ok(TribWeights {
        prefix_exact,
        low: prefix_exact.saturating_sub(2),
        high: (prefix_exact + 2).min(n),
    })
}

/// `γ_{2,N} = φ^{-2} + φ^{-4} - 1/(Nφ³)`.
pub fn gamma_fibonacci(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let phi = golden();
    Ok(phi.powi(-2) + phi.powi(-4) - 1.0 / (n as f64 * phi.powi(3)))
}

/// The refined constant `γ̂_{2,N}`.
pub fn gamma_fibonacci_sharp(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let phi = golden();
    let f = fib_table();
    Ok(match n {
        1 => 1.0 / (n as f64 * phi * phi),
        2 => 1.0 / n as f64,
        _ => match fibonacci_index(n) {
            // N = F_{2h+1}
            Some(k) if k % 2 == 1 => phi.powi(-2) + f[k - 1] as f64 / (phi.powi(3) * f[k] as f64),
            // N = F_{2h}, h ≥ 2
            Some(k) => phi.powi(-2) + (f[k - 1] - 1) as f64 / (phi.powi(3) * f[k] as f64),
            None => gamma_fibonacci(n)?,
        },
    })
}

/// `γ_{3,N}`; `degenerate` marks values `≤ 0`, for which the bound is vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TribGamma {
    pub value: f64,
    pub degenerate: bool,
}

pub fn gamma_tribonacci(n: u64) -> Result<TribGamma> {
    let exp = trib_expand(n)?;
    let tau = tribonacci_constant();
    let t = trib_table();
    let sum: f64 = (3..=exp.top)
        .filter(|&h| exp.bit(h) == 1)
        .map(|h| t[h - 1] as f64 / tau + t[h - 2] as f64 / (tau * tau) + t[h - 3] as f64 / tau.powi(3))
        .sum();
    let value = (sum - 2.0) / n as f64;
    Ok(TribGamma {
        value,
        degenerate: value <= 0.0,
    })
}

/// Outcome of a brute-force check of `λ_{k+N} - λ_k ≥ N γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub m: usize,
    pub n: u64,
    /// `γ_{2,N}` or `γ_{3,N}`.
    pub gamma: f64,
    /// `γ̂_{2,N}` (Fibonacci only).
    pub gamma_sharp: Option<f64>,
    /// `min_k (λ_{k+N} - λ_k) / N` over the scanned `k`.
    pub brute_min: f64,
    /// Inclusive range of scanned `k`.
    pub k_range: (i64, i64),
    /// Slack allowed for the root error and rounding.
    pub tolerance: f64,
    pub holds: bool,
}

impl GapReport {
    /// The strongest of the available bounds.
    pub fn best_bound(&self) -> f64 {
        self.gamma_sharp.map_or(self.gamma, |s| s.max(self.gamma))
    }
}

/// Minimum of `(λ_{k+n} - λ_k) / n` for `k_lo ≤ k ≤ k_hi`, from sliding
/// digit counts.
pub fn min_normalized_span(chain: &Chain, n: usize, k_lo: i64, k_hi: i64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let (min, max) = chain.range();
    if k_lo < min || k_hi + n as i64 > max || k_lo > k_hi {
        return Err(Error::OutOfRange {
            from: k_lo,
            to: k_hi + n as i64,
            min,
            max,
        });
    }
    let inv = &chain.perron().left_eigenvector;
    let digits = chain.gap_digits();
    let start = (k_lo - min) as usize;
    let mut counts = chain.window_counts(k_lo, n)?;
    let value = |c: &[usize]| c.iter().zip(inv).map(|(&c, &w)| c as f64 * w).sum::<f64>();
    let mut best = value(&counts);
    for s in start + 1..=(k_hi - min) as usize {
        counts[usize::from(digits[s - 1]) - 1] -= 1;
        counts[usize::from(digits[s + n - 1]) - 1] += 1;
        best = best.min(value(&counts));
    }
    Ok(best / n as f64)
}

/// Check the explicit gap condition for `m ∈ {2, 3}` over `|k| ≤ k_range`.
pub fn verify_gap_condition(chain: &Chain, n: u64, k_range: i64) -> Result<GapReport> {
    let m = chain.order();
    let (gamma, gamma_sharp) = match m {
        2 => (gamma_fibonacci(n)?, Some(gamma_fibonacci_sharp(n)?)),
        3 => (gamma_tribonacci(n)?.value, None),
        _ => return Err(Error::domain(format!("gap constants exist only for m = 2, 3, got {m}"))),
    };
    let brute_min = min_normalized_span(chain, n as usize, -k_range, k_range)?;
    let p = chain.perron();
    // d/dρ of Σ c_j ρ^{-j} / N is bounded by m/ρ² < m; add rounding slack.
    let tolerance = m as f64 * p.rho_error + 64.0 * f64::EPSILON;
    let bound = gamma_sharp.map_or(gamma, |s| s.max(gamma));
    Ok(GapReport {
        m,
        n,
        gamma,
        gamma_sharp,
        brute_min,
        k_range: (-k_range, k_range),
        tolerance,
        holds: brute_min >= bound - tolerance,
    })
}

/// Minimum and maximum of `|w|_j` over the factors `w` of `digits` with
/// length `len`.
pub fn factor_weight_extremes(digits: &[Digit], len: usize, j: Digit) -> Option<(usize, usize)> {
    if len == 0 || len > digits.len() {
        return None;
    }
    let mut count = digits[..len].iter().filter(|&&d| d == j).count();
    let (mut lo, mut hi) = (count, count);
    for s in 1..=digits.len() - len {
        count -= usize::from(digits[s - 1] == j);
        count += usize::from(digits[s + len - 1] == j);
        lo = lo.min(count);
        hi = hi.max(count);
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::{Alphabet, WordStream};

    fn direct_trib(n: usize) -> u64 {
        let mut t = vec![0u64, 0, 1];
        while t.len() <= n {
            let k = t.len();
            t.push(t[k - 1] + t[k - 2] + t[k - 3]);
        }
        t[n]
    }

    #[test]
    fn sequence_values() {
        assert_eq!(fib(0), BigUint::zero());
        assert_eq!(fib(10), BigUint::from(55u32));
        let t: Vec<BigUint> = (3..=6).map(trib).collect();
        assert_eq!(t, [1u32, 2, 4, 7].map(BigUint::from));
        for n in 0..60 {
            assert_eq!(trib(n), BigUint::from(direct_trib(n)));
        }
        // Well past u64.
        assert_eq!(fib(100).to_string(), "354224848179261915075");
    }

    #[test]
    fn caches_extend_monotonically() {
        let mut f = FibSeq::new();
        assert!(f.cached(20).is_none());
        let f20 = f.get(20).clone();
        assert_eq!(f.cached(20), Some(&f20));
        assert_eq!(f20, BigUint::from(6765u32));
    }

    #[test]
    fn tribonacci_expansion_examples() {
        let e = trib_expand(10).unwrap();
        assert_eq!(e.top, 6);
        assert_eq!(e.bit_string(), "1101");
        for l in 3..20 {
            let n = direct_trib(l);
            let e = trib_expand(n).unwrap();
            assert_eq!(e.top, l);
            assert_eq!(e.bits.iter().map(|&b| u32::from(b)).sum::<u32>(), 1);
        }
        assert!(trib_expand(0).is_err());
    }

    #[test]
    fn expansion_of_100_agrees_with_exhaustive_search() {
        let e = trib_expand(100).unwrap();
        assert_eq!(e.eval(), 100);
        // Exhaustive search over canonical bit vectors x_3..x_12.
        let canonical: Vec<u32> = (0u32..1 << 10)
            .filter(|&mask| (0..8).all(|i| (mask >> i) & 0b111 != 0b111))
            .filter(|&mask| {
                (0..10)
                    .map(|i| ((mask >> i) & 1) as u64 * direct_trib(i + 3))
                    .sum::<u64>()
                    == 100
            })
            .collect();
        assert_eq!(canonical.len(), 1);
        let bits: Vec<u8> = (0..e.bits.len()).map(|i| ((canonical[0] >> i) & 1) as u8).collect();
        assert_eq!(bits, e.bits);
    }

    #[test]
    fn expansion_round_trip() {
        for n in 1..=100_000u64 {
            let e = trib_expand(n).unwrap();
            assert_eq!(e.eval(), n);
            assert_eq!(trib_eval(&e.bits), n);
            assert_eq!(e.bit(e.top), 1);
        }
    }

    #[test]
    fn fibonacci_weight_bounds() {
        assert_eq!(fibonacci_subword_weight_bounds(13).unwrap(), (4, 5));
        assert_eq!(fibonacci_subword_weight_bounds(21).unwrap(), (8, 9));
        assert_eq!(fibonacci_subword_weight_bounds(1).unwrap(), (0, 1));
        assert!(fibonacci_subword_weight_bounds(0).is_err());
        // Generic: 10/φ² ≈ 3.82 → [3, 4].
        assert_eq!(fibonacci_subword_weight_bounds(10).unwrap(), (3, 4));
    }

    #[test]
    fn tribonacci_weights_example() {
        let w2 = tribonacci_subword_weights(10, 2).unwrap();
        assert_eq!((w2.prefix_exact, w2.low, w2.high), (3, 1, 5));
        let w3 = tribonacci_subword_weights(10, 3).unwrap();
        assert_eq!((w3.prefix_exact, w3.low, w3.high), (1, 0, 3));
        let w1 = tribonacci_subword_weights(10, 1).unwrap();
        assert_eq!((w1.prefix_exact, w1.low, w1.high), (6, 4, 8));
        assert!(tribonacci_subword_weights(10, 4).is_err());
        // N = T_L: the single-bit expansion centres on T_{L-j}.
        let w = tribonacci_subword_weights(direct_trib(8), 1).unwrap();
        assert_eq!(w.prefix_exact, direct_trib(7));
    }

    #[test]
    fn prefix_weight_formula_is_exact() {
        let a = Alphabet::new(3).unwrap();
        let s = WordStream::with_window(a, 0, 3000);
        let digits = s.right_digits();
        let mut counts = [0u64; 3];
        for n in 1..=3000usize {
            counts[usize::from(digits[n - 1]) - 1] += 1;
            let e = trib_expand(n as u64).unwrap();
            for j in 1..=3 {
                assert_eq!(e.prefix_weight(j), counts[j - 1], "N = {n}, j = {j}");
            }
        }
    }

    #[test]
    fn fibonacci_gamma_values() {
        let phi = golden();
        assert!((gamma_fibonacci_sharp(1).unwrap() - 0.381_966).abs() < 1e-6);
        assert_eq!(gamma_fibonacci_sharp(2).unwrap(), 0.5);
        assert!((gamma_fibonacci(3).unwrap() - 0.449_175).abs() < 1e-6);
        assert!((gamma_fibonacci(1).unwrap() - (phi.powi(-2) + phi.powi(-4) - phi.powi(-3))).abs() < 1e-15);
        assert!(gamma_fibonacci(0).is_err());
        assert!(gamma_fibonacci_sharp(0).is_err());
        let mut f = vec![1u64, 2];
        while f.len() < 40 {
            let k = f.len();
            f.push(f[k - 1] + f[k - 2]);
        }
        for n in f {
            assert!(
                gamma_fibonacci_sharp(n).unwrap() >= gamma_fibonacci(n).unwrap(),
                "N = {n}"
            );
        }
        // Non-Fibonacci N falls through to the generic formula.
        assert_eq!(gamma_fibonacci_sharp(4).unwrap(), gamma_fibonacci(4).unwrap());
    }

    #[test]
    fn tribonacci_gamma_values() {
        let tau = tribonacci_constant();
        let g7 = gamma_tribonacci(7).unwrap();
        let expected = (4.0 / tau + 2.0 / tau.powi(2) + 1.0 / tau.powi(3) - 2.0) / 7.0;
        assert!((g7.value - expected).abs() < 1e-15);
        assert!(!g7.degenerate);
        let g1 = gamma_tribonacci(1).unwrap();
        assert!((g1.value - (1.0 / tau - 2.0)).abs() < 1e-15);
        assert!(g1.degenerate);
        let g10 = gamma_tribonacci(10).unwrap();
        let t = |h: usize| direct_trib(h) as f64;
        let term = |h: usize| t(h - 1) / tau + t(h - 2) / tau.powi(2) + t(h - 3) / tau.powi(3);
        assert!((g10.value - (term(3) + term(4) + term(6) - 2.0) / 10.0).abs() < 1e-15);
    }

    #[test]
    fn small_gap_conditions() {
        let c2 = Chain::build(2, -10_010, 10_010).unwrap();
        let r1 = verify_gap_condition(&c2, 1, 10_000).unwrap();
        assert!(r1.holds);
        assert!((r1.brute_min - golden().powi(-2)).abs() < 1e-12);
        let r2 = verify_gap_condition(&c2, 2, 10_000).unwrap();
        assert!(r2.holds);
        assert!((r2.brute_min - 0.5).abs() < 1e-12);
        let c3 = Chain::build(3, -10_010, 10_010).unwrap();
        assert!(verify_gap_condition(&c3, 7, 10_000).unwrap().holds);
        assert!(matches!(
            verify_gap_condition(&c3, 7, 20_000),
            Err(Error::OutOfRange { .. })
        ));
        let c4 = Chain::build(4, -10, 10).unwrap();
        assert!(verify_gap_condition(&c4, 1, 5).is_err());
    }

    #[test]
    fn weight_extremes_helper() {
        assert_eq!(factor_weight_extremes(&[1, 2, 1, 1, 2], 2, 2), Some((0, 1)));
        assert_eq!(factor_weight_extremes(&[1, 2], 3, 2), None);
        assert_eq!(factor_weight_extremes(&[1, 2], 0, 2), None);
    }
}
