//! m-bonacci chains `Λ_m` and their upper density.
//!
//! Consecutive points are separated by `λ_{k+1} - λ_k = ρ_m^{-v_k}` for every
//! integer `k`, with `λ_0 = 0`; the gap word is exactly `v_m`. Positions are
//! rebuilt from integer digit counts, `λ_k = Σ_j c_j(k) ρ^{-j}`, so long
//! chains accumulate no summation drift.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{perron_root, PerronData, DEFAULT_TOLERANCE};
use crate::substitution::{Alphabet, Digit, WordStream};

/// A finite window `{λ_k : k_min ≤ k ≤ k_max}` of `Λ_m`.
#[derive(Debug, Clone)]
pub struct Chain {
    perron: PerronData,
    k_min: i64,
    k_max: i64,
    positions: Vec<f64>,
    /// `v_k` for `k_min ≤ k < k_max`.
    gap_digits: Vec<Digit>,
}

impl Chain {
    /// Generate the word and the Perron data, then the points for
    /// `k_min ≤ k ≤ k_max`.
    pub fn build(m: usize, k_min: i64, k_max: i64) -> Result<Self> {
        let alphabet = Alphabet::new(m)?;
        let perron = perron_root(m, DEFAULT_TOLERANCE)?;
        check_bounds(k_min, k_max)?;
        let stream = WordStream::with_window(alphabet, (-k_min) as usize, k_max as usize);
        Self::from_stream(&stream, perron, k_min, k_max)
    }

    /// Points from an already extended stream.
    pub fn from_stream(stream: &WordStream, perron: PerronData, k_min: i64, k_max: i64) -> Result<Self> {
        check_bounds(k_min, k_max)?;
        let m = stream.alphabet().order();
        if perron.m != m {
            return Err(Error::domain(format!(
                "Perron data for m = {} used with a word of order {m}",
                perron.m
            )));
        }
        let gap_digits = stream.window(k_min, k_max)?;
        let inv = &perron.left_eigenvector;
        let dot = |counts: &[u64]| -> f64 { counts.iter().zip(inv).map(|(&c, &w)| c as f64 * w).sum() };

        let origin = (-k_min) as usize;
        let mut positions = vec![0.0; gap_digits.len() + 1];
        let mut counts = vec![0u64; m];
        for (offset, &d) in gap_digits[origin..].iter().enumerate() {
            counts[usize::from(d) - 1] += 1;
            positions[origin + offset + 1] = dot(&counts);
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for idx in (0..origin).rev() {
            counts[usize::from(gap_digits[idx]) - 1] += 1;
            positions[idx] = -dot(&counts);
        }
        Ok(Self {
            perron,
            k_min,
            k_max,
            positions,
            gap_digits,
        })
    }

    pub fn order(&self) -> usize {
        self.perron.m
    }

    pub fn perron(&self) -> &PerronData {
        &self.perron
    }

    /// Inclusive index range `(k_min, k_max)`.
    pub fn range(&self) -> (i64, i64) {
        (self.k_min, self.k_max)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// All positions in increasing order of `k`.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// `v_k` for `k_min ≤ k < k_max`, the digit of the gap `λ_{k+1} - λ_k`.
    pub fn gap_digits(&self) -> &[Digit] {
        &self.gap_digits
    }

    pub fn lambda(&self, k: i64) -> Option<f64> {
        if k < self.k_min || k > self.k_max {
            return None;
        }
        Some(self.positions[(k - self.k_min) as usize])
    }

    pub fn gap_digit(&self, k: i64) -> Option<Digit> {
        if k < self.k_min || k >= self.k_max {
            return None;
        }
        Some(self.gap_digits[(k - self.k_min) as usize])
    }

    /// `λ_{k+1} - λ_k`, as `ρ^{-v_k}`.
    pub fn gap(&self, k: i64) -> Option<f64> {
        self.gap_digit(k)
            .map(|d| self.perron.left_eigenvector[usize::from(d) - 1])
    }

    fn check_span(&self, k: i64, n: usize) -> Result<()> {
        let to = k + n as i64;
        if k < self.k_min || to > self.k_max {
            return Err(Error::OutOfRange {
                from: k,
                to,
                min: self.k_min,
                max: self.k_max,
            });
        }
        Ok(())
    }

    /// Digit counts of the gaps `v_k … v_{k+n-1}` between `λ_k` and `λ_{k+n}`.
    pub fn window_counts(&self, k: i64, n: usize) -> Result<Vec<usize>> {
        self.check_span(k, n)?;
        let start = (k - self.k_min) as usize;
        Ok(crate::substitution::digit_counts(
            &self.gap_digits[start..start + n],
            self.order(),
        ))
    }

    /// `λ_{k+n} - λ_k`, from digit counts rather than position differences.
    pub fn span(&self, k: i64, n: usize) -> Result<f64> {
        let counts = self.window_counts(k, n)?;
        Ok(counts
            .iter()
            .zip(&self.perron.left_eigenvector)
            .map(|(&c, &w)| c as f64 * w)
            .sum())
    }

    /// Distinct gap digits present in the window.
    pub fn distinct_gap_digits(&self) -> Vec<Digit> {
        let mut seen = vec![false; self.order()];
        for &d in &self.gap_digits {
            seen[usize::from(d) - 1] = true;
        }
        (1..=self.order() as Digit)
            .filter(|&d| seen[usize::from(d) - 1])
            .collect()
    }
}

fn check_bounds(k_min: i64, k_max: i64) -> Result<()> {
    if k_min > 0 || k_max < 0 {
        return Err(Error::domain(format!("chain window [{k_min}, {k_max}] must contain 0")));
    }
    Ok(())
}

/// `D⁺(Λ_m) = ρ^{2m} / (1 + ρ^2 + … + ρ^{2(m-1)})`.
pub fn upper_density_closed_form(p: &PerronData) -> f64 {
    let r2 = p.rho * p.rho;
    let mut denom = 0.0;
    let mut pow = 1.0;
    for _ in 0..p.m {
        denom += pow;
        pow *= r2;
    }
    pow / denom
}

/// `s_m = Σ_{j=1}^m ρ^{-2j}`, the asymptotic mean gap; equals `1 / D⁺`.
pub fn mean_gap(p: &PerronData) -> f64 {
    p.left_eigenvector.iter().map(|d| d * d).sum()
}

/// `3 - (8 / 2^m)(1 - 2^{-(m+1)})`.
pub fn density_lower_bound(m: usize) -> f64 {
    let inv = 0.5f64.powi(m as i32);
    3.0 - 8.0 * inv * (1.0 - 0.5 * inv)
}

/// `n(r)`: the largest number of chain points in a closed interval of
/// length `r` placed inside the generated window.
///
/// A maximising interval can always be slid right until its left end hits a
/// point, so anchoring at each point and sweeping a second pointer is exact.
pub fn count_max_in_window(chain: &Chain, r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("interval length must be positive, got {r}")));
    }
    let pos = chain.positions();
    let extent = pos.last().copied().unwrap_or(0.0) - pos.first().copied().unwrap_or(0.0);
    if extent < r {
        let (min, max) = chain.range();
        return Err(Error::OutOfRange {
            from: 0,
            to: r.ceil() as i64,
            min,
            max,
        });
    }
    Ok(sweep(pos, r))
}

fn sweep(pos: &[f64], r: f64) -> usize {
    let mut best = 0;
    let mut j = 0;
    for i in 0..pos.len() {
        if j < i {
            j = i;
        }
        while j + 1 < pos.len() && pos[j + 1] - pos[i] <= r {
            j += 1;
        }
        best = best.max(j - i + 1);
        if j + 1 == pos.len() {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensitySample {
    pub r: f64,
    pub n: usize,
    pub ratio: f64,
}

/// Empirical `n(r)/r` samples against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub m: usize,
    pub closed_form: f64,
    pub lower_bound: f64,
    pub samples: Vec<DensitySample>,
    pub r_range: (f64, f64),
}

impl DensityReport {
    /// Largest `|ratio / closed_form - 1|` over the samples.
    pub fn max_relative_deviation(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.ratio / self.closed_form - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn ratio_extremes(&self) -> Option<(f64, f64)> {
        let mut it = self.samples.iter().map(|s| s.ratio);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }
}

/// Sample `n(r)/r` on the grid `r_min, r_min + step, …, ≤ r_max`.
pub fn density_scan(chain: &Chain, r_min: f64, r_max: f64, step: f64) -> Result<DensityReport> {
    if !(r_min > 0.0 && r_min <= r_max) {
        return Err(Error::domain(format!("need 0 < rmin <= rmax, got [{r_min}, {r_max}]")));
    }
    if !(step > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    let count = ((r_max - r_min) / step * (1.0 + 1e-12)).floor() as usize + 1;
    let samples = (0..count)
        .map(|i| {
            let r = r_min + i as f64 * step;
            let n = count_max_in_window(chain, r)?;
            Ok(DensitySample {
                r,
                n,
                ratio: n as f64 / r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityReport {
        m: chain.order(),
        closed_form: upper_density_closed_form(chain.perron()),
        lower_bound: density_lower_bound(chain.order()),
        samples,
        r_range: (r_min, r_max),
    })
}
