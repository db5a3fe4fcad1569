//! Polynomials, 2×2 first-order matrix differential operators with Laurent-polynomial
//! coefficients, gauge conjugation and finite matrix representations.

mod gauge;
mod linalg;
mod operator;
mod poly;
mod scalar_op;

use thiserror::Error;

pub use gauge::{rotation, GaugeStep, GaugeTransform};
pub use linalg::{nullspace, smallest_singular, svd_full};
pub use operator::{Laurent, MatrixRep, Premultiplier, RadialOperator, Variable};
pub use poly::{Poly, PolySpinor};
pub use scalar_op::ScalarOp;

#[derive(Debug, Error, PartialEq)]
pub enum PolyAlgError {
    #[error("uncancelled pole in row {row}: coefficient of t^{power} is {residue:e}")]
    Pole { row: usize, power: i32, residue: f64 },
    #[error("transform does not fit the operator: {0}")]
    Structure(String),
    #[error("{0}")]
    Validation(String),
}
