//! m-bonacci words, chains and their density and frame properties.
//!
//! The crate is organised around the Rauzy substitutions `σ_m`:
//!
//! - [`substitution`]: alphabets, finite words, the substitution itself and
//!   lazily generated windows of the two-sided fixed point `v_m`;
//! - [`spectral`]: incidence matrices, the characteristic polynomial and the
//!   Perron root `ρ_m` with its left eigenvector;
//! - [`chain`]: the point sets `Λ_m` with gaps `ρ_m^{-v_k}`, their upper
//!   density in closed form and the window-count estimator `n(r)/r`;
//! - [`numbersys`]: Fibonacci and Tribonacci numbers, greedy Tribonacci
//!   expansions, digit-weight bounds and explicit gap constants;
//! - [`frame`]: Gram matrices of finite exponential systems and their
//!   extreme eigenvalues, in double and extended precision.

pub mod chain;
pub mod error;
pub mod frame;
pub mod hp;
pub mod numbersys;
pub mod spectral;
pub mod substitution;

pub use chain::{Chain, DensityReport, DensitySample};
pub use error::{Error, Result};
pub use frame::{FrameProbe, FrameReport, Regime};
pub use numbersys::{FibSeq, GapReport, TribExpansion, TribSeq};
pub use spectral::{IncidenceMatrix, PerronData};
pub use substitution::{Alphabet, Digit, Word, WordStream};
