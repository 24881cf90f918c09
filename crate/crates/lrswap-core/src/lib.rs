//! Multispecies TASEP with long-range swap.
//!
//! A particle of species `i` on `Z` waits an exponential time with rate 1 and
//! then exchanges positions with the nearest weaker particle to its right,
//! vacancies counting as species 0. This crate implements the process and the
//! machinery that makes it exactly solvable:
//!
//! * [`pairalg`] — the two-particle interaction matrices `B`, `B'`, their
//!   n-particle tensor embeddings, and a machine-checked suite of the
//!   reducibility identities (braid relation, nilpotency ladder, inverse
//!   closed form, swap-sum decomposition) over exact rationals.
//! * [`scatter`] — two-particle scattering matrices, multi-particle
//!   scattering operators indexed by permutations, Yang–Baxter and
//!   boundary-condition checks.
//! * [`bethe`] — transition probabilities as n-fold contour integrals over
//!   circles, evaluated by product trapezoid quadrature.
//! * [`dynamics`] — the stochastic process itself: direct long-range moves,
//!   their hidden-state decomposition into local steps, a Gillespie
//!   simulator, an exact uniformized-series oracle, and generator extraction
//!   for cross-checking the dynamics against the algebra.
//! * [`report`] — shared JSON/CSV report schemas used by the CLI.

pub mod bethe;
pub mod dynamics;
pub mod error;
pub mod pairalg;
pub mod report;
pub mod rules;
pub mod scalar;
pub mod scatter;
pub mod word;

pub use error::Error;
pub use rules::RuleType;
pub use word::WordSpace;

/// Hard cap on the tensor-space dimension `N^n` for exhaustive exact checks.
pub const DIMENSION_CAP: usize = 4096;

/// Crate version, embedded in every report.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
