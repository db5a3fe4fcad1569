//! Algebraic and numerical solution of radial Dirac equations with Coulomb,
//! linear and oscillator-type couplings.
//!
//! The exactly solvable cases are handled by gauge-transforming the radial operator
//! until it preserves a space of polynomial spinors; quasi-exactly solvable cases
//! reduce to overdetermined linear systems whose rank deficiency fixes a coupling.
//! An independent shooting integrator checks every algebraic energy.

pub mod exact;
pub mod model;
pub mod odeoracle;
pub mod polyalg;
pub mod qes;
