//! Finite exponential systems `{e^{iλ_k t} : |k| ≤ K}` on `I = [-L/2, L/2]`.
//!
//! The Gram matrix has entries `∫_I e^{i(λ_j - λ_k)t} dt`, which for a
//! centred interval is the real symmetric kernel `2 sin((λ_j - λ_k)L/2) /
//! (λ_j - λ_k)` with `L` on the diagonal. Its extreme eigenvalues are the
//! optimal constants `c_1, c_2` in
//! `c_1 Σ|a_k|² ≤ ∫_I |Σ a_k e^{iλ_k t}|² dt ≤ c_2 Σ|a_k|²` for the finite
//! system. Below the density threshold `2π D⁺` the smallest eigenvalue
//! collapses far under double-precision round-off, so it is recomputed in
//! extended precision when the double result cannot be trusted.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::{upper_density_closed_form, Chain};
use crate::error::{Error, Result};
use crate::hp::{HpContext, HpFloat};
use crate::spectral::perron_root_hp;

/// Matrix sizes above this are refused (`2K + 1 ≤ 4001`).
pub const MAX_SYSTEM_SIZE: usize = 4001;

/// Smallest eigenvalues below `RESOLUTION_FLOOR · c_2` are treated as
/// round-off in double precision.
pub const RESOLUTION_FLOOR: f64 = 1e-10;

const START_DIGITS: u32 = 40;
const MAX_DIGITS: u32 = 2560;
const MAX_INVERSE_ITERATIONS: usize = 500;

/// `2 sin(δL/2) / δ`, with the limit `L` at `δ = 0`.
fn kernel(delta: f64, length: f64) -> f64 {
    if delta == 0.0 {
        length
    } else {
        2.0 * (0.5 * delta * length).sin() / delta
    }
}

/// Gram matrix of `{e^{iλt}}` over an interval of length `length` centred at 0.
pub fn gram_matrix(freqs: &[f64], length: f64) -> Result<DMatrix<f64>> {
    if !(length > 0.0) {
        return Err(Error::domain(format!("interval length must be positive, got {length}")));
    }
    if freqs.len() > MAX_SYSTEM_SIZE {
        return Err(Error::domain(format!(
            "{} frequencies exceed the cap of {MAX_SYSTEM_SIZE}",
            freqs.len()
        )));
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::domain(format!("duplicate frequency {}", w[0])));
    }
    let n = freqs.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = length;
        for j in 0..i {
            let v = kernel(freqs[i] - freqs[j], length);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(g: &DMatrix<f64>) -> Result<(f64, f64)> {
    if g.nrows() == 0 {
        return Err(Error::domain("empty matrix has no eigenvalues"));
    }
    let ev = g.clone().symmetric_eigenvalues();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("symmetric eigen-solver returned non-finite values"));
    }
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Whether an interval length sits above or below `2π D⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    AboveThreshold,
    BelowThreshold,
}

impl Regime {
    pub fn classify(length: f64, threshold: f64) -> Self {
        if length > threshold {
            Regime::AboveThreshold
        } else {
            Regime::BelowThreshold
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::AboveThreshold => "above-threshold",
            Regime::BelowThreshold => "below-threshold",
        }
    }
}

/// `2π D⁺(Λ_m)` for the chain's order.
pub fn beurling_threshold(chain: &Chain) -> f64 {
    2.0 * std::f64::consts::PI * upper_density_closed_form(chain.perron())
}

/// Frame constants of the truncated system `{e^{iλ_k t} : |k| ≤ K}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameProbe {
    pub m: usize,
    pub k: usize,
    pub interval_length: f64,
    pub frequencies: Vec<f64>,
    pub c1_est: f64,
    pub c2_est: f64,
    /// False when `c1_est` is below the double-precision resolution floor.
    pub c1_resolved: bool,
    /// Decimal digits used for `c1_est` when it came from the
    /// extended-precision route.
    pub c1_digits: Option<u32>,
    pub threshold: f64,
    pub regime: Regime,
}

impl FrameProbe {
    /// Double-precision probe.
    pub fn new(chain: &Chain, k: usize, length: f64) -> Result<Self> {
        let frequencies = symmetric_frequencies(chain, k)?;
        let g = gram_matrix(&frequencies, length)?;
        let (c1, c2) = extreme_eigenvalues(&g)?;
        let threshold = beurling_threshold(chain);
        Ok(Self {
            m: chain.order(),
            k,
            interval_length: length,
            frequencies,
            c1_est: c1,
            c2_est: c2,
            c1_resolved: c1 > RESOLUTION_FLOOR * c2,
            c1_digits: None,
            threshold,
            regime: Regime::classify(length, threshold),
        })
    }

    /// Probe whose `c1_est` is recomputed in extended precision if the
    /// double value is unresolved.
    pub fn refined(chain: &Chain, k: usize, length: f64) -> Result<Self> {
        let mut probe = Self::new(chain, k, length)?;
        if !probe.c1_resolved {
            let ext = min_eigenvalue_extended(chain, k, length)?;
            probe.c1_est = ext.value;
            probe.c1_digits = Some(ext.digits);
            probe.c1_resolved = true;
        }
        Ok(probe)
    }

    pub fn gram(&self) -> Result<DMatrix<f64>> {
        gram_matrix(&self.frequencies, self.interval_length)
    }
}

/// Build the chain for `|k| ≤ K` and probe it in double precision.
pub fn frame_bounds(m: usize, k: usize, length: f64) -> Result<FrameProbe> {
    let chain = Chain::build(m, -(k as i64), k as i64)?;
    FrameProbe::new(&chain, k, length)
}

fn symmetric_frequencies(chain: &Chain, k: usize) -> Result<Vec<f64>> {
    let k = k as i64;
    let (min, max) = chain.range();
    if -k < min || k > max {
        return Err(Error::OutOfRange {
            from: -k,
            to: k + 1,
            min,
            max: max + 1,
        });
    }
    if (2 * k + 1) as usize > MAX_SYSTEM_SIZE {
        return Err(Error::domain(format!(
            "K = {k} gives more than {MAX_SYSTEM_SIZE} frequencies"
        )));
    }
    Ok((-k..=k).map(|i| chain.lambda(i).expect("checked range")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub interval_length: f64,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub regime: Regime,
    /// Digits of the extended-precision `c1`, if it was needed.
    pub c1_digits: Option<u32>,
}

/// One probe per interval length.
#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub m: usize,
    pub threshold: f64,
    pub probes: Vec<SweepRow>,
}

/// Probe every length in `lengths` for a fixed `K`, refining unresolved
/// smallest eigenvalues when `refine` is set.
pub fn threshold_sweep(chain: &Chain, k: usize, lengths: &[f64], refine: bool) -> Result<FrameReport> {
    let probes = lengths
        .iter()
        .map(|&l| {
            let p = if refine {
                FrameProbe::refined(chain, k, l)?
            } else {
                FrameProbe::new(chain, k, l)?
            };
            Ok(SweepRow {
                interval_length: l,
                k,
                c1: p.c1_est,
                c2: p.c2_est,
                regime: p.regime,
                c1_digits: p.c1_digits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameReport {
        m: chain.order(),
        threshold: beurling_threshold(chain),
        probes,
    })
}

/// Smallest eigenvalue computed in extended precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedEigenvalue {
    pub value: f64,
    pub digits: u32,
}

/// Gram matrix held in extended precision.
pub struct ExtendedGram {
    ctx: HpContext,
    n: usize,
    entries: Vec<HpFloat>,
    /// Upper bound on the spectral norm (max absolute row sum).
    norm_bound: f64,
}

impl std::fmt::Debug for ExtendedGram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtendedGram")
            .field("n", &self.n)
            .field("ctx", &self.ctx)
            .finish()
    }
}

impl ExtendedGram {
    /// Gram matrix of the chain frequencies `|k| ≤ K`, with the positions
    /// rebuilt from digit counts and an extended-precision `ρ_m`.
    pub fn for_chain(chain: &Chain, k: usize, length: f64, digits: u32) -> Result<Self> {
        symmetric_frequencies(chain, k)?;
        let ctx = HpContext::with_digits(digits)?;
        let m = chain.order();
        let rho = perron_root_hp(&ctx, m)?;
        let r_inv = ctx.recip(&rho);
        let mut inv = Vec::with_capacity(m);
        let mut p = r_inv.clone();
        for _ in 0..m {
            inv.push(p.clone());
            p = ctx.mul(&p, &r_inv);
        }
        let ki = k as i64;
        let mut freqs = Vec::with_capacity(2 * k + 1);
        for i in -ki..=ki {
            let (from, n) = if i >= 0 { (0, i as usize) } else { (i, (-i) as usize) };
            let counts = chain.window_counts(from, n)?;
            let mut x = ctx.zero();
            for (c, w) in counts.iter().zip(&inv) {
                if *c > 0 {
                    x = ctx.add(&x, &ctx.mul(&ctx.from_u64(*c as u64), w));
                }
            }
            if i < 0 {
                x = x.neg();
            }
            freqs.push(x);
        }
        Self::from_frequencies(ctx, &freqs, length)
    }

    /// Gram matrix of exactly representable frequencies.
    pub fn from_f64_frequencies(freqs: &[f64], length: f64, digits: u32) -> Result<Self> {
        let ctx = HpContext::with_digits(digits)?;
        let hp: Vec<HpFloat> = freqs.iter().map(|&x| ctx.from_f64(x)).collect();
        Self::from_frequencies(ctx, &hp, length)
    }

    fn from_frequencies(mut ctx: HpContext, freqs: &[HpFloat], length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::domain(format!("interval length must be positive, got {length}")));
        }
        let n = freqs.len();
        let l = ctx.from_f64(length);
        let two = ctx.from_i64(2);
        let half_l = ctx.div(&l, &two);
        let mut entries = vec![ctx.zero(); n * n];
        let mut row_sums = vec![0.0f64; n];
        for i in 0..n {
            entries[i * n + i] = l.clone();
            row_sums[i] += length;
            for j in 0..i {
                let delta = ctx.sub(&freqs[i], &freqs[j]);
                if delta.is_zero() {
                    return Err(Error::domain("duplicate frequency"));
                }
                let s = ctx.sin(&ctx.mul(&delta, &half_l));
                let v = ctx.div(&ctx.mul(&two, &s), &delta);
                let vf = ctx.to_f64(&v).abs();
                row_sums[i] += vf;
                row_sums[j] += vf;
                entries[i * n + j] = v.clone();
                entries[j * n + i] = v;
            }
        }
        let norm_bound = row_sums.into_iter().fold(0.0, f64::max);
        Ok(Self {
            ctx,
            n,
            entries,
            norm_bound,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn digits(&self) -> u32 {
        self.ctx.digits()
    }

    /// Cholesky factor (lower, row-major) of `G - shift·I`, or `None` if a
    /// pivot is not positive.
    fn cholesky(&self, shift: &HpFloat) -> Option<Vec<HpFloat>> {
        let ctx = &self.ctx;
        let n = self.n;
        let mut l = vec![ctx.zero(); n * n];
        for j in 0..n {
            let mut d = ctx.sub(&self.entries[j * n + j], shift);
            for k in 0..j {
                d = ctx.sub(&d, &ctx.mul(&l[j * n + k], &l[j * n + k]));
            }
            if d.is_zero() || ctx.is_negative(&d) {
                return None;
            }
            let dj = ctx.sqrt(&d);
            l[j * n + j] = dj.clone();
            for i in j + 1..n {
                let mut s = self.entries[i * n + j].clone();
                for k in 0..j {
                    s = ctx.sub(&s, &ctx.mul(&l[i * n + k], &l[j * n + k]));
                }
                l[i * n + j] = ctx.div(&s, &dj);
            }
        }
        Some(l)
    }

    /// Number of eigenvalues below `t`, from the inertia of an `LDLᵀ`
    /// factorisation of `G - tI` (Sylvester's law).
    pub fn count_below(&self, t: f64) -> usize {
        let ctx = &self.ctx;
        let n = self.n;
        let shift = ctx.from_f64(t);
        let mut lmat = vec![ctx.zero(); n * n];
        let mut d = vec![ctx.zero(); n];
        let mut negatives = 0;
        for j in 0..n {
            let mut dj = ctx.sub(&self.entries[j * n + j], &shift);
            for k in 0..j {
                let ljk = &lmat[j * n + k];
                dj = ctx.sub(&dj, &ctx.mul(&ctx.mul(ljk, ljk), &d[k]));
            }
            if ctx.is_negative(&dj) {
                negatives += 1;
            }
            for i in j + 1..n {
                let mut s = self.entries[i * n + j].clone();
                for k in 0..j {
                    s = ctx.sub(&s, &ctx.mul(&ctx.mul(&lmat[i * n + k], &lmat[j * n + k]), &d[k]));
                }
                lmat[i * n + j] = ctx.div(&s, &dj);
            }
            d[j] = dj;
        }
        negatives
    }

    /// Smallest eigenvalue by inverse iteration on the Cholesky factor.
    /// Fails when the matrix is not numerically positive definite at this
    /// precision.
    pub fn min_eigenvalue(&mut self) -> Result<f64> {
        let n = self.n;
        let l = self
            .cholesky(&self.ctx.zero())
            .ok_or_else(|| Error::numeric(format!("Gram matrix not positive definite at {} digits", self.digits())))?;
        let ctx = &self.ctx;
        // Deterministic start with components along every eigenvector.
        let mut x: Vec<HpFloat> = (0..n)
            .map(|i| ctx.from_f64(1.0 + 0.5 * ((i as f64) * 0.7).sin()))
            .collect();
        let mut previous: Option<f64> = None;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            // Solve L y = x, then Lᵀ z = y.
            let mut y = x.clone();
            for i in 0..n {
                let mut s = y[i].clone();
                for k in 0..i {
                    s = ctx.sub(&s, &ctx.mul(&l[i * n + k], &y[k]));
                }
                y[i] = ctx.div(&s, &l[i * n + i]);
            }
            let mut z = y;
            for i in (0..n).rev() {
                let mut s = z[i].clone();
                for k in i + 1..n {
                    s = ctx.sub(&s, &ctx.mul(&l[k * n + i], &z[k]));
                }
                z[i] = ctx.div(&s, &l[i * n + i]);
            }
            // Rayleigh quotient of G^{-1}: (x·z)/(x·x) → 1/λ_min.
            let mut xz = ctx.zero();
            let mut xx = ctx.zero();
            let mut zz = ctx.zero();
            for (a, b) in x.iter().zip(&z) {
                xz = ctx.add(&xz, &ctx.mul(a, b));
                xx = ctx.add(&xx, &ctx.mul(a, a));
                zz = ctx.add(&zz, &ctx.mul(b, b));
            }
            let estimate = ctx.to_f64(&ctx.div(&xx, &xz));
            let norm = ctx.sqrt(&zz);
            x = z.iter().map(|v| ctx.div(v, &norm)).collect();
            if let Some(prev) = previous {
                if (prev - estimate).abs() <= 1e-13 * estimate.abs() {
                    return Ok(estimate);
                }
            }
            previous = Some(estimate);
        }
        Err(Error::numeric("inverse iteration did not converge"))
    }

    /// Round-off scale of eigenvalues at this precision.
    pub fn resolution(&self) -> f64 {
        self.n as f64 * self.norm_bound * 10f64.powi(-(self.digits() as i32) + 4)
    }
}

/// Smallest Gram eigenvalue for `|k| ≤ K`, doubling the working precision
/// until the result clears the round-off scale by a wide margin.
pub fn min_eigenvalue_extended(chain: &Chain, k: usize, length: f64) -> Result<ExtendedEigenvalue> {
    let mut digits = START_DIGITS;
    loop {
        let mut gram = ExtendedGram::for_chain(chain, k, length, digits)?;
        if let Ok(value) = gram.min_eigenvalue() {
            if value > 1e6 * gram.resolution() {
                return Ok(ExtendedEigenvalue { value, digits });
            }
        }
        digits *= 2;
        if digits > MAX_DIGITS {
            return Err(Error::numeric(format!(
                "smallest eigenvalue for K = {k}, L = {length} unresolved at {MAX_DIGITS} digits"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_frequency() {
        let g = gram_matrix(&[0.3], 2.5).unwrap();
        assert_eq!(g.nrows(), 1);
        assert_eq!(g[(0, 0)], 2.5);
        assert_eq!(extreme_eigenvalues(&g).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn full_period_separation_is_orthogonal() {
        let l = 3.0;
        let g = gram_matrix(&[0.0, 2.0 * std::f64::consts::PI / l], l).unwrap();
        assert!(g[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn sinc_limit_for_close_frequencies() {
        let l = 2.0;
        for delta in [1e-3, 1e-5, 1e-7] {
            let g = gram_matrix(&[0.0, delta], l).unwrap();
            assert!((g[(0, 1)] - l).abs() < delta);
        }
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(gram_matrix(&[0.0, 1.0, 0.0], 1.0).is_err());
        assert!(gram_matrix(&[0.0], 0.0).is_err());
        assert!(extreme_eigenvalues(&DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn one_point_probe() {
        let chain = Chain::build(2, 0, 0).unwrap();
        let p = FrameProbe::new(&chain, 0, 4.0).unwrap();
        assert_eq!((p.c1_est, p.c2_est), (4.0, 4.0));
    }

    #[test]
    fn probe_is_symmetric_with_bounded_spectrum() {
        let p = frame_bounds(2, 15, 9.0).unwrap();
        let g = p.gram().unwrap();
        assert_eq!(g, g.transpose());
        assert!(g.diagonal().iter().all(|&d| d == 9.0));
        assert!(p.c1_est <= p.c2_est);
        assert!(p.c2_est <= 31.0 * 9.0);
        assert!(p.c1_est > -1e-10);
    }

    #[test]
    fn extended_matches_double_when_resolved() {
        let chain = Chain::build(2, -10, 10).unwrap();
        let l = 14.0;
        let p = FrameProbe::new(&chain, 10, l).unwrap();
        assert!(p.c1_resolved);
        let mut g = ExtendedGram::for_chain(&chain, 10, l, 40).unwrap();
        let c1 = g.min_eigenvalue().unwrap();
        assert!((c1 - p.c1_est).abs() < 1e-9 * p.c2_est, "{c1} vs {}", p.c1_est);
        assert_eq!(g.count_below(c1 * 0.999), 0);
        assert_eq!(g.count_below(c1 * 1.001), 1);
    }

    #[test]
    fn extended_precision_resolves_tiny_eigenvalues() {
        let chain = Chain::build(2, -12, 12).unwrap();
        let l = 0.5 * beurling_threshold(&chain);
        let p = FrameProbe::refined(&chain, 12, l).unwrap();
        assert!(p.c1_digits.is_some());
        assert!(p.c1_est > 0.0 && p.c1_est < 1e-12);
        let gram = ExtendedGram::for_chain(&chain, 12, l, p.c1_digits.unwrap()).unwrap();
        assert_eq!(gram.count_below(p.c1_est * 0.99), 0);
        assert_eq!(gram.count_below(p.c1_est * 1.01), 1);
    }

    #[test]
    fn sweep_labels_regimes() {
        let chain = Chain::build(2, -5, 5).unwrap();
        let t = beurling_threshold(&chain);
        let rep = threshold_sweep(&chain, 5, &[0.5 * t, 1.5 * t], false).unwrap();
        assert_eq!(rep.probes[0].regime, Regime::BelowThreshold);
        assert_eq!(rep.probes[1].regime, Regime::AboveThreshold);
        assert!(threshold_sweep(&chain, 5, &[], false).unwrap().probes.is_empty());
        assert!(threshold_sweep(&chain, 6, &[t], false).is_err());
    }
}
