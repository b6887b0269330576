//! Incidence matrices of the Rauzy substitutions and their Perron–Frobenius
//! data.
//!
//! The incidence matrix of `σ_m` has `M[i][j] = |σ_m(i)|_j`: a first column
//! of ones, ones on the superdiagonal and zeros elsewhere. Its characteristic
//! polynomial is, up to sign, `x^m - x^{m-1} - … - x - 1`, whose unique root
//! in `(2(1 - 2^{-m}), 2)` is the Perron root `ρ_m`. The left eigenvector
//! `d_m = (ρ^{-1}, …, ρ^{-m})` sums to one and gives the letter frequencies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hp::{HpContext, HpFloat};
use crate::substitution::Alphabet;

/// Default absolute tolerance for the double-precision root.
pub const DEFAULT_TOLERANCE: f64 = 1e-15;

/// Orders above this always use the extended-precision root finder.
pub const DOUBLE_PRECISION_MAX_ORDER: usize = 40;

const BISECTION_WIDTH: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;

/// The `m × m` incidence matrix of `σ_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncidenceMatrix {
    m: usize,
    entries: Vec<u32>,
}

impl IncidenceMatrix {
    pub fn new(m: usize) -> Result<Self> {
        let alphabet = Alphabet::new(m)?;
        let mut entries = vec![0u32; m * m];
        for i in 1..=m {
            for &d in alphabet.image(i as u8) {
                entries[(i - 1) * m + usize::from(d) - 1] += 1;
            }
        }
        Ok(Self { m, entries })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Entry in row `i`, column `j`, both 1-based like the alphabet.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[(i - 1) * self.m + (j - 1)]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[(i - 1) * self.m..i * self.m]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.m).map(<[u32]>::to_vec).collect()
    }

    /// Row vector times matrix, `x · M`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (i, xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += xi * f64::from(self.entries[i * m + j]);
            }
        }
        out
    }
}

/// `x^m - x^{m-1} - … - x - 1` by Horner's scheme.
pub fn char_poly_eval(m: usize, x: f64) -> f64 {
    let mut acc = 1.0;
    for _ in 0..m {
        acc = acc * x - 1.0;
    }
    acc
}

/// [`char_poly_eval`] together with a running bound on its rounding error.
pub fn char_poly_eval_with_bound(m: usize, x: f64) -> (f64, f64) {
    let u = f64::EPSILON * 0.5;
    let (mut acc, mut err) = (1.0f64, 0.0f64);
    for _ in 0..m {
        let prod = acc * x;
        let next = prod - 1.0;
        err = err * x.abs() + u * (prod.abs() + next.abs());
        acc = next;
    }
    (acc, 2.0 * err)
}

/// Derivative of [`char_poly_eval`] in `x`.
pub fn char_poly_derivative(m: usize, x: f64) -> f64 {
    // d/dx of the Horner recursion p_{k+1} = p_k x - 1.
    let (mut p, mut dp) = (1.0, 0.0);
    for _ in 0..m {
        dp = dp * x + p;
        p = p * x - 1.0;
    }
    dp
}

/// Extended-precision [`char_poly_eval`].
pub fn char_poly_eval_hp(ctx: &HpContext, m: usize, x: &HpFloat) -> HpFloat {
    let one = ctx.one();
    let mut acc = one.clone();
    for _ in 0..m {
        acc = ctx.sub(&ctx.mul(&acc, x), &one);
    }
    acc
}

fn char_poly_derivative_hp(ctx: &HpContext, m: usize, x: &HpFloat) -> HpFloat {
    let one = ctx.one();
    let (mut p, mut dp) = (one.clone(), ctx.zero());
    for _ in 0..m {
        dp = ctx.add(&ctx.mul(&dp, x), &p);
        p = ctx.sub(&ctx.mul(&p, x), &one);
    }
    dp
}

/// Analytic bracket `(2(1 - 2^{-m}), 2)` containing `ρ_m`.
pub fn root_bracket(m: usize) -> (f64, f64) {
    (2.0 * (1.0 - 0.5f64.powi(m as i32)), 2.0)
}

/// Perron–Frobenius data for `σ_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronData {
    pub m: usize,
    /// `ρ_m` rounded to double precision.
    pub rho: f64,
    /// Guaranteed bound on `|rho - ρ_m|` (includes the final rounding).
    pub rho_error: f64,
    /// `ρ_m` in decimal with `precision_digits` significant digits.
    pub rho_decimal: String,
    /// `d_m = (ρ^{-1}, …, ρ^{-m})`.
    pub left_eigenvector: Vec<f64>,
    /// `|P_m(ρ)|`.
    pub poly_residual: f64,
    /// `max_j |(d M)_j - ρ d_j|`.
    pub eig_residual: f64,
    /// Decimal digits carried by the root finder.
    pub precision_digits: u32,
}

impl PerronData {
    /// `ρ^{-j}` for `j = 1..=m` (index 0 holds `ρ^{-1}`).
    pub fn inverse_powers(&self) -> &[f64] {
        &self.left_eigenvector
    }

    pub fn order(&self) -> usize {
        self.m
    }
}

/// Compute `ρ_m` to absolute `tolerance`.
///
/// Double precision is tried first when `m ≤ 40`; if its certified error
/// bound misses the tolerance, the extended-precision finder runs with
/// enough digits for the tolerance and for `ρ_m` to separate from 2.
pub fn perron_root(m: usize, tolerance: f64) -> Result<PerronData> {
    Alphabet::new(m)?;
    if !(tolerance > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tolerance}")));
    }
    if m <= DOUBLE_PRECISION_MAX_ORDER {
        if let Ok(data) = perron_root_double(m, tolerance) {
            return Ok(data);
        }
    }
    let for_tol = (-tolerance.log10()).ceil().max(0.0) as u32 + 10;
    let for_order = (m as f64 * std::f64::consts::LOG10_2).ceil() as u32 + 20;
    perron_root_extended(m, for_tol.max(for_order))
}

fn perron_root_double(m: usize, tolerance: f64) -> Result<PerronData> {
    let (mut lo, mut hi) = root_bracket(m);
    if !(char_poly_eval(m, lo) < 0.0 && char_poly_eval(m, hi) > 0.0) {
        return Err(Error::numeric(format!(
            "bracket for m = {m} does not change sign in double precision"
        )));
    }
    let mut iterations = 0;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if char_poly_eval(m, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::numeric(format!("bisection stalled for m = {m} in [{lo}, {hi}]")));
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let step = char_poly_eval(m, x) / char_poly_derivative(m, x);
        let next = (x - step).clamp(lo, hi);
        let done = (next - x).abs() <= tolerance * 0.25 || next == x;
        x = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric(format!(
            "Newton iteration did not converge for m = {m}, last x = {x}"
        )));
    }

    let u = f64::EPSILON;
    let (value, roundoff) = char_poly_eval_with_bound(m, x);
    let slope = char_poly_derivative(m, x).abs();
    let rho_error = (value.abs() + roundoff) / slope + x * u;
    if rho_error > tolerance {
        return Err(Error::numeric(format!(
            "root for m = {m} only certified to {rho_error:e}, tolerance {tolerance:e}"
        )));
    }
    Ok(assemble(m, x, rho_error, format!("{x:.16e}"), 17))
}

fn assemble(m: usize, rho: f64, rho_error: f64, rho_decimal: String, precision_digits: u32) -> PerronData {
    let left_eigenvector: Vec<f64> = (1..=m as i32).map(|j| rho.powi(-j)).collect();
    let mut data = PerronData {
        m,
        rho,
        rho_error,
        rho_decimal,
        left_eigenvector,
        poly_residual: char_poly_eval(m, rho).abs(),
        eig_residual: 0.0,
        precision_digits,
    };
    data.eig_residual = verify_left_eigenvector(&data).max_residual;
    data
}

/// Root of the characteristic polynomial with `digits` decimal digits.
pub fn perron_root_extended(m: usize, digits: u32) -> Result<PerronData> {
    Alphabet::new(m)?;
    let mut ctx = HpContext::with_digits(digits.max(20))?;
    let root = perron_root_hp(&ctx, m)?;
    let rho = ctx.to_f64(&root);
    let rho_decimal = ctx.to_decimal(&root, digits.max(1) as usize)?;
    let residual = ctx.abs(&char_poly_eval_hp(&ctx, m, &root));
    let slope = char_poly_derivative_hp(&ctx, m, &root);
    let hp_error = ctx.to_f64(&ctx.div(&residual, &slope));
    let rounding = rho * f64::EPSILON * 0.5;
    let mut data = assemble(m, rho, hp_error.abs() + rounding, rho_decimal, digits);

    // Residuals from the extended root, not the rounded one.
    data.poly_residual = ctx.to_f64(&residual);
    let mut inv = Vec::with_capacity(m);
    let r_inv = ctx.recip(&root);
    let mut p = r_inv.clone();
    for _ in 0..m {
        inv.push(p.clone());
        p = ctx.mul(&p, &r_inv);
    }
    // (d M)_1 = Σ_j d_j, (d M)_j = d_{j-1} for j ≥ 2.
    let mut max_res = 0.0f64;
    let mut sum = ctx.zero();
    for v in &inv {
        sum = ctx.add(&sum, v);
    }
    let first = ctx.sub(&sum, &ctx.mul(&root, &inv[0]));
    max_res = max_res.max(ctx.to_f64(&first).abs());
    for j in 1..m {
        let r = ctx.sub(&inv[j - 1], &ctx.mul(&root, &inv[j]));
        max_res = max_res.max(ctx.to_f64(&r).abs());
    }
    data.eig_residual = max_res;
    Ok(data)
}

/// `ρ_m` at the context precision: bisection on the analytic bracket, then
/// Newton.
pub fn perron_root_hp(ctx: &HpContext, m: usize) -> Result<HpFloat> {
    let two = ctx.from_i64(2);
    let one = ctx.one();
    let half_pow = ctx.recip(&ctx.powi(&two, m));
    let mut lo = ctx.mul(&two, &ctx.sub(&one, &half_pow));
    let mut hi = two.clone();
    if !ctx.is_negative(&char_poly_eval_hp(ctx, m, &lo)) {
        return Err(Error::numeric(format!(
            "extended bracket for m = {m} does not change sign"
        )));
    }
    let width = ctx.from_f64(BISECTION_WIDTH * 0.5f64.powi(m as i32));
    let half = ctx.from_f64(0.5);
    let mut iterations = 0;
    while ctx.cmp(&ctx.sub(&hi, &lo), &width).is_gt() {
        let mid = ctx.mul(&ctx.add(&lo, &hi), &half);
        if ctx.is_negative(&char_poly_eval_hp(ctx, m, &mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS + m {
            return Err(Error::numeric(format!("extended bisection stalled for m = {m}")));
        }
    }
    let mut x = ctx.mul(&ctx.add(&lo, &hi), &half);
    // Target a few ulps of the working precision.
    let target_bits = ctx.bits().saturating_sub(8);
    for _ in 0..MAX_ITERATIONS {
        let step = ctx.div(&char_poly_eval_hp(ctx, m, &x), &char_poly_derivative_hp(ctx, m, &x));
        x = ctx.sub(&x, &step);
        if step.is_zero() {
            return Ok(x);
        }
        let step_exp = step.exponent().map(i64::from).unwrap_or(i64::MIN);
        if step_exp < -(target_bits as i64) {
            return Ok(x);
        }
    }
    Err(Error::numeric(format!(
        "extended Newton iteration did not converge for m = {m}"
    )))
}

/// Result of checking `d_m M = ρ d_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvectorCheck {
    /// `max_j |(d M)_j - ρ d_j|`.
    pub max_residual: f64,
    /// `|Σ_j ρ^{-j} - 1|`.
    pub normalization_defect: f64,
}

pub fn verify_left_eigenvector(p: &PerronData) -> EigenvectorCheck {
    let matrix = IncidenceMatrix::new(p.m).expect("PerronData carries a valid order");
    let d = &p.left_eigenvector;
    let dm = matrix.left_mul(d);
    let max_residual = dm.iter().zip(d).map(|(a, b)| (a - p.rho * b).abs()).fold(0.0, f64::max);
    let sum: f64 = d.iter().sum();
    EigenvectorCheck {
        max_residual,
        normalization_defect: (sum - 1.0).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::Word;

    #[test]
    fn small_incidence_matrices() {
        assert_eq!(IncidenceMatrix::new(2).unwrap().rows(), vec![vec![1, 1], vec![1, 0]]);
        assert_eq!(
            IncidenceMatrix::new(3).unwrap().rows(),
            vec![vec![1, 1, 0], vec![1, 0, 1], vec![1, 0, 0]]
        );
        assert_eq!(IncidenceMatrix::new(5).unwrap().row(5), &[1, 0, 0, 0, 0]);
        assert!(IncidenceMatrix::new(1).is_err());
    }

    #[test]
    fn incidence_matches_substituted_weights() {
        for m in 2..=12 {
            let a = Alphabet::new(m).unwrap();
            let mat = IncidenceMatrix::new(m).unwrap();
            for i in 1..=m {
                let w = a.substitute(&Word::new(a, vec![i as u8]).unwrap()).unwrap();
                for j in 1..=m {
                    assert_eq!(mat.get(i, j) as usize, w.weight(j as u32).unwrap());
                }
            }
        }
    }

    #[test]
    fn incidence_block_recursion() {
        // M_m = [[M_{m-1}, e^T], [e_1, 0]] where e^T is the column
        // (0, …, 0, 1)^T and e_1 = (1, 0, …, 0).
        for m in 3..=12 {
            let big = IncidenceMatrix::new(m).unwrap();
            let small = IncidenceMatrix::new(m - 1).unwrap();
            for i in 1..m {
                for j in 1..m {
                    assert_eq!(big.get(i, j), small.get(i, j));
                }
                assert_eq!(big.get(i, m), u32::from(i == m - 1));
            }
            for j in 1..=m {
                assert_eq!(big.get(m, j), u32::from(j == 1));
            }
        }
    }

    #[test]
    fn polynomial_values() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(char_poly_eval(2, phi).abs() < 1e-15);
        assert_eq!(char_poly_eval(3, 2.0), 1.0);
        assert_eq!(char_poly_eval(2, 0.0), -1.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for m in 2..8 {
            let x = 1.7;
            let h = 1e-6;
            let fd = (char_poly_eval(m, x + h) - char_poly_eval(m, x - h)) / (2.0 * h);
            assert!((fd - char_poly_derivative(m, x)).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn golden_and_tribonacci_roots() {
        let p2 = perron_root(2, DEFAULT_TOLERANCE).unwrap();
        assert!((p2.rho - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let p3 = perron_root(3, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(format!("{:.5}", p3.rho), "1.83929");
        assert!(p3.rho_error < 1e-14);
    }

    #[test]
    fn bracket_and_monotonicity() {
        let mut prev = 0.0;
        for m in 2..=30 {
            let (lo, hi) = root_bracket(m);
            assert!(char_poly_eval(m, lo) < 0.0, "m = {m}");
            assert!(char_poly_eval(m, hi) > 0.0, "m = {m}");
            let p = perron_root(m, DEFAULT_TOLERANCE).unwrap();
            assert!(lo < p.rho && p.rho < hi, "m = {m}");
            assert!(p.rho > prev);
            prev = p.rho;
        }
        let p20 = perron_root(20, DEFAULT_TOLERANCE).unwrap();
        assert!(p20.rho > 2.0 * (1.0 - 2f64.powi(-20)));
    }

    #[test]
    fn eigenvector_identities() {
        for m in 2..=12 {
            let p = perron_root(m, DEFAULT_TOLERANCE).unwrap();
            let check = verify_left_eigenvector(&p);
            assert!(check.max_residual < 1e-12, "m = {m}: {check:?}");
            assert!(check.normalization_defect < 1e-12, "m = {m}: {check:?}");
            assert!(p.left_eigenvector.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
        }
    }

    #[test]
    fn golden_eigenvector_against_exact_arithmetic() {
        // In Q(√5): φ^{-1} = φ - 1, φ^{-2} = 2 - φ. The residual of the
        // exact vector is zero; compare coordinates instead.
        let p = perron_root(2, DEFAULT_TOLERANCE).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.left_eigenvector[0] - (phi - 1.0)).abs() < 1e-15);
        assert!((p.left_eigenvector[1] - (2.0 - phi)).abs() < 1e-15);
        assert!(p.eig_residual < 1e-12);
    }

    #[test]
    fn extended_precision_agrees_with_double() {
        for m in [2, 3, 7, 20] {
            let d = perron_root(m, DEFAULT_TOLERANCE).unwrap();
            let e = perron_root_extended(m, 50).unwrap();
            assert!((d.rho - e.rho).abs() <= d.rho_error + e.rho_error, "m = {m}");
            assert!(e.poly_residual < 1e-45, "m = {m}: {}", e.poly_residual);
            assert!(e.eig_residual < 1e-45, "m = {m}");
        }
        let e = perron_root_extended(2, 40).unwrap();
        assert!(
            e.rho_decimal.starts_with("1.618033988749894848204586834365638117"),
            "{}",
            e.rho_decimal
        );
    }

    #[test]
    fn large_orders_use_extended_precision() {
        // ρ_60 = 2 - O(2^{-60}) rounds to 2.0 in double precision; the
        // decimal string keeps the separation.
        let p = perron_root(60, DEFAULT_TOLERANCE).unwrap();
        assert!(p.rho <= 2.0);
        assert!(p.rho_decimal.starts_with("1.99999999999999999"), "{}", p.rho_decimal);
        assert!(p.precision_digits >= 20);
        let q = perron_root(61, DEFAULT_TOLERANCE).unwrap();
        assert!(q.rho_decimal > p.rho_decimal);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(perron_root(1, 1e-12).is_err());
        assert!(perron_root(3, 0.0).is_err());
        assert!(perron_root(3, f64::NAN).is_err());
    }
}
