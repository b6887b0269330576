//! Thin helpers over `astro-float` for the extended-precision paths.
//!
//! Every value carries its own precision; the context fixes the working
//! precision in bits and owns the constants cache needed for `sin`, `pi`
//! and decimal formatting.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

use crate::error::{Error, Result};

pub use astro_float::BigFloat as HpFloat;

const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision plus constant cache.
pub struct HpContext {
    bits: usize,
    consts: Consts,
}

impl std::fmt::Debug for HpContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HpContext").field("bits", &self.bits).finish()
    }
}

/// Bits needed to carry `digits` decimal digits, plus guard bits.
pub fn bits_for_digits(digits: u32) -> usize {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as usize + 32
}

impl HpContext {
    pub fn with_digits(digits: u32) -> Result<Self> {
        Self::with_bits(bits_for_digits(digits))
    }

    pub fn with_bits(bits: usize) -> Result<Self> {
        let consts = Consts::new().map_err(|e| Error::numeric(format!("constants cache: {e}")))?;
        Ok(Self { bits, consts })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Decimal digits carried by the working precision (excluding guard bits).
    pub fn digits(&self) -> u32 {
        ((self.bits.saturating_sub(32)) as f64 / std::f64::consts::LOG2_10).floor() as u32
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn from_i64(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, self.bits)
    }

    pub fn from_u64(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.bits)
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_word(0, self.bits)
    }

    pub fn one(&self) -> BigFloat {
        BigFloat::from_word(1, self.bits)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn recip(&self, a: &BigFloat) -> BigFloat {
        a.reciprocal(self.bits, RM)
    }

    pub fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.bits, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.bits, RM)
    }

    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.bits, RM, &mut self.consts)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.consts.pi(self.bits, RM)
    }

    pub fn abs(&self, a: &BigFloat) -> BigFloat {
        a.abs()
    }

    /// Total order on finite values; NaN compares as equal.
    pub fn cmp(&self, a: &BigFloat, b: &BigFloat) -> std::cmp::Ordering {
        match a.cmp(b) {
            Some(c) if c < 0 => std::cmp::Ordering::Less,
            Some(c) if c > 0 => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        }
    }

    pub fn is_negative(&self, a: &BigFloat) -> bool {
        !a.is_zero() && a.sign() == Some(Sign::Neg)
    }

    /// Decimal scientific rendering with `digits` significant digits.
    pub fn to_decimal(&mut self, a: &BigFloat, digits: usize) -> Result<String> {
        let s = a
            .format(Radix::Dec, RM, &mut self.consts)
            .map_err(|e| Error::numeric(format!("decimal formatting: {e}")))?;
        Ok(truncate_scientific(&s, digits))
    }

    /// `f64` value, truncated to the leading 128 mantissa bits before the
    /// final rounding.
    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        to_f64(a)
    }
}

pub fn to_f64(a: &BigFloat) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    if a.is_nan() {
        return f64::NAN;
    }
    if a.is_inf_pos() {
        return f64::INFINITY;
    }
    if a.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, sign, exponent, _)) = a.as_raw_parts() else {
        return f64::NAN;
    };
    // Normalised mantissa: the top bit of the last word is set and the value
    // is 0.mantissa × 2^exponent.
    let top = words.last().copied().unwrap_or(0);
    let next = if words.len() >= 2 { words[words.len() - 2] } else { 0 };
    let frac = (top as f64 + next as f64 * TWO_POW_M64) * TWO_POW_M64;
    let v = frac * 2f64.powi(exponent.clamp(-1100, 1100));
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

const TWO_POW_M64: f64 = 1.0 / 18_446_744_073_709_551_616.0;

/// Reduce an astro-float decimal string (`1.2345...e+3`) to `digits`
/// significant digits, normalised to `d.ddd…e±x`.
fn truncate_scientific(s: &str, digits: usize) -> String {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let all: String = int_part.chars().chain(frac_part.chars()).collect();
    // Re-normalise so the first digit is non-zero.
    let lead = all.find(|c: char| c != '0').unwrap_or(0);
    let exp10 = exponent + int_part.len() as i64 - 1 - lead as i64;
    let sig: String = all[lead..].chars().take(digits.max(1)).collect();
    let (first, rest) = sig.split_at(1);
    if rest.is_empty() {
        format!("{sign}{first}e{exp10}")
    } else {
        format!("{sign}{first}.{rest}e{exp10}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip_of_simple_values() {
        let mut ctx = HpContext::with_digits(40).unwrap();
        let x = ctx.from_f64(0.125);
        assert_eq!(ctx.to_f64(&x), 0.125);
        let y = ctx.from_i64(-3);
        assert_eq!(ctx.to_f64(&y), -3.0);
        let third = ctx.div(&ctx.one(), &ctx.from_i64(3));
        let s = ctx.to_decimal(&third, 30).unwrap();
        assert!(s.starts_with("3.33333333333333333333333333333e-1"), "{s}");
    }

    #[test]
    fn sqrt_two_to_many_digits() {
        let mut ctx = HpContext::with_digits(60).unwrap();
        let two = ctx.from_i64(2);
        let r = ctx.sqrt(&two);
        let s = ctx.to_decimal(&r, 50).unwrap();
        assert_eq!(s, "1.4142135623730950488016887242096980785696718753769e0");
    }

    #[test]
    fn sine_of_pi_over_six() {
        let mut ctx = HpContext::with_digits(50).unwrap();
        let pi = ctx.pi();
        let x = ctx.div(&pi, &ctx.from_i64(6));
        let s = ctx.sin(&x);
        let err = ctx.sub(&s, &ctx.from_f64(0.5));
        assert!(ctx.to_f64(&err).abs() < 1e-45);
    }

    #[test]
    fn truncation_handles_signs_and_exponents() {
        assert_eq!(truncate_scientific("1.61803398874989e+0", 5), "1.6180e0");
        assert_eq!(truncate_scientific("-2.5e-3", 4), "-2.5e-3");
        assert_eq!(truncate_scientific("123.456", 4), "1.234e2");
    }
}
