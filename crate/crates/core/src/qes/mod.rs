//! Quasi-exactly solvable cases: the planar Coulomb problem in a magnetic field,
//! the extended oscillator with a Coulomb term, and the scalar second-order
//! operator obtained by decoupling the planar system.
//!
//! Polynomial solutions exist only for special values of one coupling. Each solver
//! assembles the full overdetermined linear system in the polynomial coefficients and
//! locates the couplings where its smallest singular value vanishes.

mod extended;
mod planar;
mod scan;
mod second_order;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::polyalg::{PolyAlgError, PolySpinor};

pub use extended::{extended_build, extended_solve, ExtendedCoefficients, ExtendedQesSystem};
pub use planar::{planar_build, planar_n0_closed_form, planar_solve, PlanarSystem};
pub use scan::{assign_branches, branch_is_continuous, ScanOptions, ROOT_THRESHOLD};
pub use second_order::{
    t_build, t_qes_decompose, Generator, GeneratorPoly, QesDecomposition, SecondOrderT,
};

#[derive(Debug, Error)]
pub enum QesError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("no algebraic solution: {0}")]
    NoAlgebraicSolution(String),
    #[error("supercritical coupling: alpha^2 = {alpha2} >= kappa^2 = {kappa2}")]
    Supercritical { alpha2: f64, kappa2: f64 },
    #[error("singular parameterization: {0}")]
    Singular(String),
    #[error("infeasible point: {0}")]
    Infeasible(String),
    #[error("eps_tilde = {eps_tilde} is not the integer {n}")]
    NotQuantized { eps_tilde: f64, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    PolyAlg(#[from] PolyAlgError),
}

/// Sign of the square root fixing ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnergyBranch {
    Positive,
    Negative,
}

impl EnergyBranch {
    pub const BOTH: [EnergyBranch; 2] = [EnergyBranch::Positive, EnergyBranch::Negative];

    pub fn sign(self) -> f64 {
        match self {
            EnergyBranch::Positive => 1.0,
            EnergyBranch::Negative => -1.0,
        }
    }

    pub fn of(epsilon: f64) -> Self {
        if epsilon < 0.0 {
            EnergyBranch::Negative
        } else {
            EnergyBranch::Positive
        }
    }
}

/// Which ε branches a scan visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchSelection {
    Positive,
    Negative,
    #[default]
    Both,
}

impl BranchSelection {
    pub fn branches(self) -> Vec<EnergyBranch> {
        match self {
            BranchSelection::Positive => vec![EnergyBranch::Positive],
            BranchSelection::Negative => vec![EnergyBranch::Negative],
            BranchSelection::Both => EnergyBranch::BOTH.to_vec(),
        }
    }
}

/// A coupling value admitting a polynomial solution, with that solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QesSolution {
    pub n: usize,
    /// α for the planar case, γ₀ for the extended case.
    pub fixed_coupling: f64,
    pub epsilon: f64,
    /// γ (planar) or θ (extended).
    pub exponent: f64,
    /// Planar: (Q, P) with P monic of degree n+1. Extended: (p̃, q̃) with p̃ monic of degree n.
    pub spinor: PolySpinor,
    /// Smallest singular value of the full system relative to the largest.
    pub sigma_min: f64,
    pub branch_id: usize,
    pub energy_branch: EnergyBranch,
}
