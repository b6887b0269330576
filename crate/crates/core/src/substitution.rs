//! Rauzy substitutions and the m-bonacci words they generate.
//!
//! The substitution of order `m` acts on the alphabet `{1, …, m}` by
//!
//! ```text
//! 1 -> 12, 2 -> 13, …, m-1 -> 1m, m -> 1
//! ```
//!
//! Iterating it on `1` gives ever longer prefixes of the one-sided fixed
//! point `w_m`. The two-sided word `v_m` is the limit of `σ^{mn}(1).σ^{mn}(1)`;
//! only exponents that are multiples of `m` converge on the left.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// A digit of the alphabet. Stored as a byte; orders above 255 are rejected.
pub type Digit = u8;

/// The alphabet `{1, …, m}` with `m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    order: u8,
}

impl Alphabet {
    pub fn new(m: usize) -> Result<Self> {
        if !(2..=255).contains(&m) {
            return Err(Error::InvalidOrder(m));
        }
        Ok(Self { order: m as u8 })
    }

    /// The order `m`.
    pub fn order(self) -> usize {
        usize::from(self.order)
    }

    pub fn contains(self, digit: u32) -> bool {
        digit >= 1 && digit <= u32::from(self.order)
    }

    fn check(self, digit: u32) -> Result<Digit> {
        if self.contains(digit) {
            Ok(digit as Digit)
        } else {
            Err(Error::InvalidDigit {
                digit,
                order: self.order(),
            })
        }
    }

    /// Image of a single letter under the substitution.
    pub fn image(self, digit: Digit) -> &'static [Digit] {
        // Images are `[1, d+1]` or `[1]`; a static table avoids allocation.
        static PAIRS: [[Digit; 2]; 256] = {
            let mut t = [[1, 0]; 256];
            let mut d = 0;
            while d < 255 {
                t[d][1] = (d + 1) as Digit;
                d += 1;
            }
            t
        };
        if digit == self.order {
            &PAIRS[0][..1]
        } else {
            &PAIRS[usize::from(digit)]
        }
    }

    /// Apply the substitution to every digit of `word`.
    pub fn substitute(self, word: &Word) -> Result<Word> {
        if word.alphabet != self {
            return Err(Error::domain(format!(
                "word over alphabet of order {} given to substitution of order {}",
                word.alphabet.order(),
                self.order()
            )));
        }
        let digits = substitute_digits(self, &word.digits);
        Ok(Word { digits, alphabet: self })
    }

    /// `σ_m^n(1)`.
    pub fn iterate_on_one(self, n: u32) -> Word {
        let mut digits = vec![1];
        for _ in 0..n {
            digits = substitute_digits(self, &digits);
        }
        Word { digits, alphabet: self }
    }

    /// Lengths `|σ_m^i(1)|` for `i = 0..=n`, by the m-step recursion
    /// `ℓ_i = ℓ_{i-1} + … + ℓ_{i-m}` seeded with `ℓ_i = 2^i` for `i < m`.
    ///
    /// Saturates at `u64::MAX`.
    pub fn iterate_lengths(self, n: u32) -> Vec<u64> {
        let m = self.order();
        let mut out: Vec<u64> = Vec::with_capacity(n as usize + 1);
        for i in 0..=n as usize {
            let len = if i < m {
                1u64 << i.min(63)
            } else {
                out[i - m..i].iter().fold(0u64, |acc, &x| acc.saturating_add(x))
            };
            out.push(len);
        }
        out
    }
}

fn substitute_digits(alphabet: Alphabet, digits: &[Digit]) -> Vec<Digit> {
    let mut out = Vec::with_capacity(digits.len() * 2);
    for &d in digits {
        out.extend_from_slice(alphabet.image(d));
    }
    out
}

/// A finite word over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    digits: Vec<Digit>,
    alphabet: Alphabet,
}

impl Word {
    pub fn new(alphabet: Alphabet, digits: Vec<Digit>) -> Result<Self> {
        for &d in &digits {
            alphabet.check(u32::from(d))?;
        }
        Ok(Self { digits, alphabet })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Self {
            digits: Vec::new(),
            alphabet,
        }
    }

    /// Parse a word written as a run of decimal digits, e.g. `"12112"`.
    /// Only usable for orders up to 9.
    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        let digits = text
            .chars()
            .map(|c| {
                let d = c
                    .to_digit(10)
                    .ok_or_else(|| Error::domain(format!("'{c}' is not a decimal digit")))?;
                alphabet.check(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { digits, alphabet })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<Digit> {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// `|w|_j`, the number of occurrences of `j`.
    pub fn weight(&self, j: u32) -> Result<usize> {
        let j = self.alphabet.check(j)?;
        Ok(self.digits.iter().filter(|&&d| d == j).count())
    }

    /// All weights `(|w|_1, …, |w|_m)`.
    pub fn weights(&self) -> Vec<usize> {
        digit_counts(&self.digits, self.alphabet.order())
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.alphabet != other.alphabet {
            return Err(Error::domain("concatenating words over different alphabets"));
        }
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        Ok(Word {
            digits,
            alphabet: self.alphabet,
        })
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.digits.starts_with(&self.digits)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.alphabet.order() > 9 { "," } else { "" };
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Occurrence counts of `1..=m` in `digits`, indexed from 0.
pub fn digit_counts(digits: &[Digit], m: usize) -> Vec<usize> {
    let mut counts = vec![0usize; m];
    for &d in digits {
        counts[usize::from(d) - 1] += 1;
    }
    counts
}

/// A lazily extended window of the two-sided word `v_m`.
///
/// The right half `v_0 v_1 …` is the prefix `σ^g(1)` of `w_m`. The left half
/// `… v_{-2} v_{-1}` is the tail of `σ^{mb}(1)` for some `b`; because that
/// word is itself a prefix of `w_m`, both halves live in one buffer and
/// `v_{-k}` is read backwards from the left anchor `|σ^{mb}(1)|`.
///
/// Memory grows by a factor of about `ρ_m^m < 2^m` each time the left half
/// needs another multiple-of-`m` generation.
#[derive(Debug, Clone)]
pub struct WordStream {
    alphabet: Alphabet,
    digits: Vec<Digit>,
    lengths: Vec<u64>,
    left_generation: u32,
}

impl WordStream {
    /// The seed `σ^0(1.1) = 1.1`.
    pub fn new(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            digits: vec![1],
            lengths: vec![1],
            left_generation: 0,
        }
    }

    /// A stream already extended to cover `v_k` for `-left ≤ k < right`.
    pub fn with_window(alphabet: Alphabet, left: usize, right: usize) -> Self {
        let mut s = Self::new(alphabet);
        s.extend(left, right);
        s
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Current generation `g`: the buffer equals `σ^g(1)`.
    pub fn generation(&self) -> u32 {
        (self.lengths.len() - 1) as u32
    }

    /// Exponent `mb` of the word whose tail provides the left half.
    pub fn left_generation(&self) -> u32 {
        self.left_generation
    }

    /// Number of exposed digits `v_0, v_1, …`.
    pub fn right_len(&self) -> usize {
        self.digits.len()
    }

    /// Number of exposed digits `v_{-1}, v_{-2}, …`.
    pub fn left_len(&self) -> usize {
        self.lengths[self.left_generation as usize] as usize
    }

    /// Exposed index range `[min, max)`.
    pub fn range(&self) -> (i64, i64) {
        (-(self.left_len() as i64), self.right_len() as i64)
    }

    /// The prefix `v_0 … v_{right_len-1}` of `w_m`.
    pub fn right_digits(&self) -> &[Digit] {
        &self.digits
    }

    fn grow(&mut self) {
        self.digits = substitute_digits(self.alphabet, &self.digits);
        self.lengths.push(self.digits.len() as u64);
    }

    /// Extend so that `v_k` is available for `-target_left ≤ k < target_right`.
    /// Already exposed digits never change.
    pub fn extend(&mut self, target_left: usize, target_right: usize) {
        while self.digits.len() < target_right {
            self.grow();
        }
        let m = self.alphabet.order() as u32;
        while (self.lengths[self.left_generation as usize] as usize) < target_left {
            let next = self.left_generation + m;
            while self.generation() < next {
                self.grow();
            }
            self.left_generation = next;
        }
    }

    /// `v_k`, if exposed.
    pub fn digit(&self, k: i64) -> Option<Digit> {
        if k >= 0 {
            self.digits.get(k as usize).copied()
        } else {
            let back = (-k) as usize;
            let anchor = self.left_len();
            (back <= anchor).then(|| self.digits[anchor - back])
        }
    }

    fn check_window(&self, from: i64, to: i64) -> Result<()> {
        let (min, max) = self.range();
        if from < min || to > max || from > to {
            return Err(Error::OutOfRange { from, to, min, max });
        }
        Ok(())
    }

    /// Digits `v_from … v_{to-1}`.
    pub fn window(&self, from: i64, to: i64) -> Result<Vec<Digit>> {
        self.check_window(from, to)?;
        Ok((from..to).map(|k| self.digit(k).expect("checked window")).collect())
    }

    /// The factor `v_from … v_{to-1}` as a [`Word`].
    pub fn factor(&self, from: i64, to: i64) -> Result<Word> {
        Ok(Word {
            digits: self.window(from, to)?,
            alphabet: self.alphabet,
        })
    }

    /// `|v_{k+1} … v_{k+n}|_j / n` as an exact rational.
    pub fn empirical_frequency(&self, j: u32, k: i64, n: usize) -> Result<Ratio<u64>> {
        let j = self.alphabet.check(j)?;
        if n == 0 {
            return Err(Error::domain("frequency window must have positive length"));
        }
        let (from, to) = (k + 1, k + 1 + n as i64);
        self.check_window(from, to)?;
        let hits = (from..to).filter(|&i| self.digit(i) == Some(j)).count();
        Ok(Ratio::new(hits as u64, n as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(m: usize) -> Alphabet {
        Alphabet::new(m).unwrap()
    }

    fn word(m: usize, s: &str) -> Word {
        Word::parse(alpha(m), s).unwrap()
    }

    #[test]
    fn alphabet_rejects_small_orders() {
        assert_eq!(Alphabet::new(1), Err(Error::InvalidOrder(1)));
        assert_eq!(Alphabet::new(0), Err(Error::InvalidOrder(0)));
        assert!(Alphabet::new(2).is_ok());
    }

    #[test]
    fn word_rejects_foreign_digits() {
        let a = alpha(3);
        assert_eq!(
            Word::new(a, vec![1, 4]),
            Err(Error::InvalidDigit { digit: 4, order: 3 })
        );
        assert_eq!(Word::new(a, vec![0]), Err(Error::InvalidDigit { digit: 0, order: 3 }));
        assert!(Word::parse(a, "124").is_err());
    }

    #[test]
    fn substitution_examples() {
        let a2 = alpha(2);
        assert_eq!(a2.substitute(&word(2, "1")).unwrap(), word(2, "12"));
        assert_eq!(a2.substitute(&word(2, "12112")).unwrap(), word(2, "12112121"));
        let a3 = alpha(3);
        assert_eq!(a3.substitute(&word(3, "1213")).unwrap(), word(3, "1213121"));
        assert!(a3.substitute(&Word::empty(a3)).unwrap().is_empty());
    }

    #[test]
    fn substitution_rejects_mismatched_alphabet() {
        assert!(alpha(3).substitute(&word(2, "12")).is_err());
    }

    #[test]
    fn iterates_on_one() {
        assert_eq!(alpha(3).iterate_on_one(4), word(3, "1213121121312"));
        assert_eq!(alpha(2).iterate_on_one(0), word(2, "1"));
        assert_eq!(alpha(3).iterate_on_one(3), word(3, "1213121"));
        let fib: Vec<String> = (1..=4).map(|n| alpha(2).iterate_on_one(n).to_string()).collect();
        assert_eq!(fib, ["12", "121", "12112", "12112121"]);
    }

    #[test]
    fn tetranacci_length_matches_direct_count() {
        // ℓ_0..ℓ_3 = 1, 2, 4, 8 and ℓ_4 = 15 for m = 4.
        let w = alpha(4).iterate_on_one(5);
        let mut direct = vec![1usize];
        for _ in 0..5 {
            direct = direct
                .iter()
                .flat_map(|&d| if d < 4 { vec![1, d + 1] } else { vec![1] })
                .collect();
        }
        assert_eq!(w.len(), direct.len());
        assert_eq!(w.len(), 29);
        assert_eq!(alpha(4).iterate_on_one(4).len(), 15);
        assert_eq!(alpha(4).iterate_lengths(5), vec![1, 2, 4, 8, 15, 29]);
    }

    #[test]
    fn weights() {
        let w = word(3, "1213121121");
        assert_eq!(w.weight(1).unwrap(), 6);
        assert_eq!(w.weight(2).unwrap(), 3);
        assert_eq!(w.weight(3).unwrap(), 1);
        assert_eq!(w.weights().iter().sum::<usize>(), w.len());
        assert!(w.weight(4).is_err());
        assert!(w.weight(0).is_err());
    }

    #[test]
    fn stream_right_and_left() {
        let mut s = WordStream::new(alpha(2));
        s.extend(0, 8);
        let right: Vec<_> = (0..8).map(|k| s.digit(k).unwrap()).collect();
        assert_eq!(right, [1, 2, 1, 1, 2, 1, 2, 1]);
        s.extend(1, 0);
        assert_eq!(s.digit(-1), Some(1));
        // The last digit of σ_2^{2n}(1) is 1 for n = 2, 3.
        for n in [2, 3] {
            let w = alpha(2).iterate_on_one(2 * n);
            assert_eq!(*w.digits().last().unwrap(), 1);
        }
    }

    #[test]
    fn stream_window_is_factor_of_doubled_seed() {
        let a = alpha(3);
        let s = WordStream::with_window(a, 20, 20);
        let g = s.left_generation();
        let base = a.iterate_on_one(g.max(s.generation()));
        let tail = a.iterate_on_one(g);
        let doubled = tail.concat(&base).unwrap();
        let (min, max) = s.range();
        let window = s.window(min, max).unwrap();
        let offset = tail.len() - s.left_len();
        assert_eq!(&doubled.digits()[offset..offset + window.len()], &window[..]);
        assert_eq!(g % 3, 0);
    }

    #[test]
    fn stream_extension_is_stable() {
        let a = alpha(3);
        let mut s = WordStream::with_window(a, 10, 10);
        let before = s.window(-10, 10).unwrap();
        s.extend(500, 500);
        assert_eq!(s.window(-10, 10).unwrap(), before);
    }

    #[test]
    fn empirical_frequency_examples() {
        let s = WordStream::with_window(alpha(2), 0, 9);
        // Window v_1 … v_8.
        assert_eq!(s.empirical_frequency(2, 0, 8).unwrap(), Ratio::new(3, 8));
        let s = WordStream::with_window(alpha(2), 1, 9);
        // Window v_0 … v_7 = 12112121.
        assert_eq!(s.empirical_frequency(2, -1, 8).unwrap(), Ratio::new(3, 8));
        let one = s.empirical_frequency(1, 3, 1).unwrap();
        assert!(one == Ratio::from_integer(0) || one == Ratio::from_integer(1));
        assert!(matches!(
            s.empirical_frequency(2, 0, 10_000),
            Err(Error::OutOfRange { .. })
        ));
        assert!(s.empirical_frequency(2, 0, 0).is_err());
    }

    #[test]
    fn remark_last_digits() {
        for m in 2..=5 {
            let a = alpha(m);
            for n in 0..=(12 / m as u32) {
                let w = a.iterate_on_one(m as u32 * n);
                assert_eq!(*w.digits().last().unwrap(), 1);
                let w = a.iterate_on_one(m as u32 * n + 1);
                assert_eq!(*w.digits().last().unwrap(), 2);
            }
        }
    }
}
