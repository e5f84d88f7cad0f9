//! Single-shot work extraction between finite diagonal states.
//!
//! States are lists of energy levels, each carrying a Gibbs weight `A = exp(-E/kT)` and an
//! occupation probability. Re-plotting a state with block width `A` and height `prob / A`
//! gives a descending step function ([`stepfn::StepFunction`]); the extractable work with
//! failure probability `eps` is `kT ln M`, where `M` is the relative mixedness of the two
//! rescaled spectra.
//!
//! Modules:
//! - [`stepfn`]: step functions, Lorenz curves, relative mixedness.
//! - [`states`]: diagonal states, Gibbs rescaling, entropies.
//! - [`workcalc`]: extractable work and its closed-form special cases.
//! - [`game`]: the work-extraction game (exact enumeration, Monte Carlo, bound audit).
//! - [`protocol`]: the optimal extraction protocol (isothermal shifts, assimilation).
//! - [`laws`]: second-law and Kelvin-law checkers.
//!
//! All numeric code is generic over [`Scalar`], implemented for exact rationals and `f64`.

pub mod error;
pub mod game;
pub mod laws;
pub mod protocol;
pub mod scalar;
pub mod states;
pub mod stepfn;
pub mod workcalc;

pub use error::{Error, ErrorKind, Result};
pub use scalar::{rat, NumericMode, Rational, Scalar, WireNum};
pub use states::DiagonalState;
pub use stepfn::{Block, StepFunction};
