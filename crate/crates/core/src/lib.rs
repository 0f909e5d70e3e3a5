//! Numerical laboratory for structurally damped sigma-evolution equations
//!
//! ```text
//! u_tt + (-Laplace)^sigma u + b(t) (-Laplace)^delta u_t = ||D|^gamma u|^p
//! ```
//!
//! with a time-dependent coefficient `b(t)`. The linear problem is solved
//! mode by mode in frequency; the semilinear one pseudospectrally on a
//! periodic box. Around both sit calculators for decay characters,
//! phase-space zones, predicted decay exponents and critical powers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod damping;
pub mod decay_character;
pub mod decay_verify;
pub mod error;
pub mod exponents;
pub mod linear_modes;
pub mod ode;
pub mod par;
pub mod phase_zones;
pub mod quadrature;
pub mod semilinear;
pub mod stats;

pub use error::{Error, Result};
