use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2};

use super::scan::{scan_roots, ScanOptions};
use super::{BranchSelection, EnergyBranch, QesError, QesSolution};
use crate::model::{preset, Preset, ProblemInstance};
use crate::polyalg::{smallest_singular, svd_full, GaugeTransform, Poly, PolySpinor, Premultiplier};

/// Coefficients of the reduced first-order system
///
/// (D + A₂) p̃ + (A₁ r + A₀) q̃ = 0,
/// (D + C₂ r² + C₁ r + C₀) q̃ + (D₁ r + D₀) p̃ = 0,
///
/// with D = r d/dr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedCoefficients {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub d1: f64,
    pub d0: f64,
}

/// Oscillator with Coulomb term: V = α/r, W = β₁r, E = γ₀ + γ₁r, reduced by the rotation
/// ω = ½·atan2(β₁, γ₁), the prefactor r^θ exp(−Rr²/2 − λ₁r) and the frame diag(1, −cot ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedQesSystem {
    pub n: usize,
    pub kappa: f64,
    pub mass: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub gamma1: f64,
    pub radius: f64,
    pub omega: f64,
    pub theta: f64,
}

pub fn extended_build(
    n: usize,
    kappa: f64,
    mass: f64,
    alpha: f64,
    beta1: f64,
    gamma1: f64,
) -> Result<ExtendedQesSystem, QesError> {
    if n == 0 {
        return Err(QesError::Validation("n must be positive".into()));
    }
    if kappa == 0.0 || kappa.fract() != 0.0 {
        return Err(QesError::Validation(format!("kappa = {kappa} is not a nonzero integer")));
    }
    if beta1 == 0.0 {
        return Err(QesError::Singular(
            "beta1 = 0: use the exactly solvable oscillator instead".into(),
        ));
    }
    let (alpha2, kappa2) = (alpha * alpha, kappa * kappa);
    if alpha2 >= kappa2 {
        return Err(QesError::Supercritical { alpha2, kappa2 });
    }
    let radius = gamma1.hypot(beta1);
    Ok(ExtendedQesSystem {
        n,
        kappa,
        mass,
        alpha,
        beta1,
        gamma1,
        radius,
        omega: 0.5 * beta1.atan2(gamma1),
        theta: (kappa2 - alpha2).sqrt(),
    })
}

impl ExtendedQesSystem {
    pub fn lambda1(&self, gamma0: f64) -> f64 {
        (self.beta1 * self.mass + gamma0 * self.gamma1) / self.radius
    }

    pub fn lambda2(&self) -> f64 {
        self.radius
    }

    /// Second component scale of the frame: q̃ is the rotated lower component divided by this.
    pub fn frame_scale(&self) -> f64 {
        -1.0 / self.omega.tan()
    }

    pub fn coefficients(&self, gamma0: f64, epsilon: f64) -> ExtendedCoefficients {
        let r = self.radius;
        let (k, m, a) = (self.kappa, self.mass, self.alpha);
        let (b1, g1) = (self.beta1, self.gamma1);
        let x = (m * g1 - gamma0 * b1) / r;
        let frame = self.frame_scale();
        let row2 = -self.omega.tan();
        ExtendedCoefficients {
            a2: self.theta - k * g1 / r,
            a1: frame * (x - epsilon),
            a0: frame * (k * b1 / r - a),
            c2: -2.0 * r,
            c1: -2.0 * self.lambda1(gamma0),
            c0: self.theta + k * g1 / r,
            d1: row2 * (x + epsilon),
            d0: row2 * (k * b1 / r + a),
        }
    }

    /// ε² forced by the top-degree equations.
    pub fn epsilon_squared(&self, gamma0: f64) -> f64 {
        let x = (self.mass * self.gamma1 - self.beta1 * gamma0) / self.radius;
        2.0 * (self.radius * (self.n as f64 + self.theta) - self.gamma1 * self.kappa) + x * x
    }

    pub fn epsilon(&self, gamma0: f64, branch: EnergyBranch) -> Option<f64> {
        let e2 = self.epsilon_squared(gamma0);
        (e2 >= 0.0).then(|| branch.sign() * e2.sqrt())
    }

    /// The (2n+3)×(2n+1) homogeneous system; columns p̃₀…p̃ₙ then q̃₀…q̃_{n−1}, rows the
    /// powers r⁰…rⁿ of the first equation then r⁰…r^{n+1} of the second.
    pub fn matrix(&self, gamma0: f64, epsilon: f64) -> DMatrix<f64> {
        let n = self.n;
        let c = self.coefficients(gamma0, epsilon);
        let np = n + 1;
        let off = n + 1;
        let mut m = DMatrix::zeros(2 * n + 3, 2 * n + 1);
        for k in 0..=n {
            m[(k, k)] += k as f64 + c.a2;
            m[(off + k, k)] += c.d0;
            m[(off + k + 1, k)] += c.d1;
        }
        for j in 0..n {
            m[(j, np + j)] += c.a0;
            m[(j + 1, np + j)] += c.a1;
            m[(off + j, np + j)] += j as f64 + c.c0;
            m[(off + j + 1, np + j)] += c.c1;
            m[(off + j + 2, np + j)] += c.c2;
        }
        m
    }

    /// The 2n+3 equations in the 2n coefficients left after fixing p̃ monic: (matrix, rhs).
    pub fn normalized_system(&self, gamma0: f64, epsilon: f64) -> (DMatrix<f64>, DVector<f64>) {
        let full = self.matrix(gamma0, epsilon);
        let n = self.n;
        let keep: Vec<usize> = (0..2 * n + 1).filter(|&j| j != n).collect();
        (full.select_columns(&keep), -full.column(n).into_owned())
    }

    pub fn sigma_min(&self, gamma0: f64, branch: EnergyBranch) -> Option<f64> {
        let eps = self.epsilon(gamma0, branch)?;
        smallest_singular(&self.matrix(gamma0, eps)).ok().map(|(s, _)| s)
    }

    pub fn solution_at(&self, gamma0: f64, branch: EnergyBranch) -> Result<QesSolution, QesError> {
        let eps = self
            .epsilon(gamma0, branch)
            .ok_or_else(|| QesError::Infeasible(format!("epsilon^2 < 0 at gamma0 = {gamma0}")))?;
        let a = self.matrix(gamma0, eps);
        let (values, v) = svd_full(&a)?;
        let last = values.len() - 1;
        let col = v.column(last);
        let lead = col[self.n];
        if lead.abs() < 1e-12 {
            return Err(QesError::NoAlgebraicSolution(format!(
                "p has degree below n at gamma0 = {gamma0}"
            )));
        }
        let p = Poly::new(col.rows(0, self.n + 1).iter().map(|c| c / lead).collect());
        let q = Poly::new(col.rows(self.n + 1, self.n).iter().map(|c| c / lead).collect());
        Ok(QesSolution {
            n: self.n,
            fixed_coupling: gamma0,
            epsilon: eps,
            exponent: self.theta,
            spinor: PolySpinor::new(p, q),
            sigma_min: if values[0] > 0.0 { values[last] / values[0] } else { 0.0 },
            branch_id: 0,
            energy_branch: branch,
        })
    }

    /// The radial problem at a given γ₀.
    pub fn instance(&self, gamma0: f64) -> Result<ProblemInstance, QesError> {
        let params: BTreeMap<String, f64> = [
            ("M", self.mass),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta1", self.beta1),
            ("gamma0", gamma0),
            ("gamma1", self.gamma1),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        Ok(preset(Preset::ExtendedOscillatorQES, &params)?)
    }

    /// Transform taking the radial operator to the reduced system.
    pub fn transform(&self, gamma0: f64) -> GaugeTransform {
        let k = self.frame_scale();
        GaugeTransform::identity()
            .rotation(self.omega)
            .power(self.theta, self.theta)
            .exponential(self.lambda1(gamma0), self.radius)
            .right(Matrix2::new(1.0, 0.0, 0.0, k))
            .left(Matrix2::new(1.0, 0.0, 0.0, 1.0 / k))
            .premultiply(Premultiplier::R)
    }
}

/// γ₀ values in the range admitting polynomial solutions, ordered by γ₀.
pub fn extended_solve(
    sys: &ExtendedQesSystem,
    gamma0_range: (f64, f64),
    grid: usize,
    selection: BranchSelection,
) -> Result<Vec<QesSolution>, QesError> {
    let (lo, hi) = gamma0_range;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(QesError::Validation(format!("empty gamma0 range [{lo}, {hi}]")));
    }
    if grid < 2 {
        return Err(QesError::Validation("grid needs at least two points".into()));
    }
    let mut out = Vec::new();
    for branch in selection.branches() {
        let roots = scan_roots(|g| sys.sigma_min(g, branch), lo, hi, grid, ScanOptions::default());
        for (g, _) in roots {
            out.push(sys.solution_at(g, branch)?);
        }
    }
    out.sort_by(|a, b| a.fixed_coupling.total_cmp(&b.fixed_coupling));
    for (i, s) in out.iter_mut().enumerate() {
        s.branch_id = i;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::RadialOperator;

    fn reference(alpha: f64) -> ExtendedQesSystem {
        extended_build(1, 1.0, 1.0, alpha, 4.0, 3.0).unwrap()
    }

    #[test]
    fn transform_produces_displayed_coefficients() {
        let sys = extended_build(2, -2.0, 0.7, 0.4, 1.5, 2.5).unwrap();
        let (g0, eps) = (0.3, 1.1);
        let c = sys.coefficients(g0, eps);
        let op = sys
            .transform(g0)
            .conjugate(&RadialOperator::dirac(&sys.instance(g0).unwrap(), eps))
            .unwrap();
        let check = |l: &crate::polyalg::Laurent, terms: &[(i32, f64)]| {
            let mut d: f64 = 0.0;
            let mut seen = Vec::new();
            for &(p, v) in terms {
                d = d.max((l.coeff(p) - v).abs());
                seen.push(p);
            }
            for (p, v) in l.terms() {
                if !seen.contains(&p) {
                    d = d.max(v.abs());
                }
            }
            d
        };
        let errs = [
            check(op.first(0, 0), &[(1, 1.0)]),
            check(op.first(0, 1), &[]),
            check(op.first(1, 0), &[]),
            check(op.first(1, 1), &[(1, 1.0)]),
            check(op.zeroth(0, 0), &[(0, c.a2)]),
            check(op.zeroth(0, 1), &[(1, c.a1), (0, c.a0)]),
            check(op.zeroth(1, 0), &[(1, c.d1), (0, c.d0)]),
            check(op.zeroth(1, 1), &[(2, c.c2), (1, c.c1), (0, c.c0)]),
        ];
        for (i, e) in errs.iter().enumerate() {
            assert!(*e < 1e-12, "entry {i}: {e}");
        }
    }

    #[test]
    fn displayed_identities() {
        let sys = reference(0.5);
        let c = sys.coefficients(0.7, 2.0);
        assert_eq!(c.c2, -2.0 * sys.radius);
        assert!((c.c1 + 2.0 * (4.0 + 0.7 * 3.0) / 5.0).abs() < 1e-15);
    }

    #[test]
    fn small_gamma1_limit_of_a1() {
        let g1 = 1e-8;
        let sys = extended_build(1, 1.0, 1.0, 0.5, 2.0, g1).unwrap();
        let (g0, eps) = (0.4, 1.3);
        let c = sys.coefficients(g0, eps);
        let limit = (2.0 * eps + g0 * 2.0) / 2.0;
        assert!((c.a1 - limit).abs() < 1e-6, "{} vs {limit}", c.a1);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            extended_build(1, 1.0, 1.0, 0.5, 0.0, 3.0),
            Err(QesError::Singular(_))
        ));
        assert!(matches!(
            extended_build(1, 1.0, 1.0, 1.0, 4.0, 3.0),
            Err(QesError::Supercritical { .. })
        ));
        assert!(extended_build(0, 1.0, 1.0, 0.5, 4.0, 3.0).is_err());
    }

    #[test]
    fn reference_family_has_two_roots() {
        let sys = reference(0.5);
        let sols = extended_solve(&sys, (-20.0, 20.0), 4001, BranchSelection::Both).unwrap();
        assert_eq!(sols.len(), 2, "{sols:?}");
        for s in &sols {
            let c = sys.coefficients(s.fixed_coupling, s.epsilon);
            assert!((s.spinor.upper.leading() - 1.0).abs() < 1e-14);
            let q_lead = -(1.0 + c.a2) / c.a1;
            assert!((s.spinor.lower.coeff(0) - q_lead).abs() < 1e-8 * (1.0 + q_lead.abs()));
        }
    }
}
