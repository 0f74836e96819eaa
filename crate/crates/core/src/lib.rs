//! Numerical laboratory for the variable-coefficient Nelson model with an
//! ultraviolet cutoff.
//!
//! The crate is organised by stage:
//!
//! * [`opcore`]: periodic grids, coefficient fields, the one-particle operator
//!   `h`, the electron operator `K0`, exact functional calculus, Sobolev norms
//!   and charge densities.
//! * [`pdo`]: symbols, Weyl and (1,0) quantizations and remainder decay checks.
//! * [`dressing`]: the dressing vector `beta` and its defining identity.
//! * [`counterterm`]: the position dependent counterterm, the constant
//!   coefficient reference energy and the dressed potential.
//! * [`fock`]: truncated bosonic Fock space, Hamiltonians, the dressing
//!   unitary, operator bounds and resolvent tools.
//!
//! Fourier convention throughout: `f^(xi) = (2 pi)^(-d/2) \int e^{-i x.xi} f(x) dx`.

pub mod counterterm;
pub mod dressing;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod opcore;
pub mod pdo;
pub mod quadrature;

pub use error::{Error, Result};

/// Complex scalar used by every complex-valued routine.
pub type C64 = num_complex::Complex64;

/// Human readable statement of the Fourier convention, echoed in reports.
pub const FOURIER_CONVENTION: &str =
    "f^(xi) = (2 pi)^(-d/2) int exp(-i x.xi) f(x) dx; torus grid x_j = -L/2 + j L/n, xi_k = 2 pi k / L, k in [-n/2, n/2)";
