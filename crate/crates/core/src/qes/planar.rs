use nalgebra::DMatrix;

use super::scan::{scan_roots, ScanOptions};
use super::{EnergyBranch, QesError, QesSolution};
use crate::model::{Geometry, Kappa, PhysicalParams, PotentialSpec, ProblemInstance};
use crate::polyalg::{smallest_singular, svd_full, Poly, PolySpinor};

/// Planar Coulomb problem in a uniform magnetic field, in the rescaled variable
/// x = r√(eB̃), with f = x^γ e^{−x²/4} Q and g = x^γ e^{−x²/4} P:
///
/// x P′ + (κ + γ) P − (ε − M) x Q − α Q = 0,
/// x Q′ + (γ − κ) Q − x² Q + (ε + M) x P + α P = 0,
///
/// with deg P = n + 1, deg Q = n, γ = √(κ² − α²) and ε² = M² + γ + κ + n + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSystem {
    n: usize,
    kappa: Kappa,
    mass: f64,
}

pub fn planar_build(n: usize, kappa: f64, mass: f64) -> Result<PlanarSystem, QesError> {
    let k = Kappa::from_f64(kappa)?;
    if k.is_integer() {
        return Err(QesError::Validation(format!("kappa = {kappa} is not a half-integer")));
    }
    if !mass.is_finite() {
        return Err(QesError::Validation("M is not finite".into()));
    }
    Ok(PlanarSystem { n, kappa: k, mass })
}

impl PlanarSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.value()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn unknowns(&self) -> usize {
        2 * self.n + 3
    }

    pub fn equations(&self) -> usize {
        2 * self.n + 5
    }

    pub fn gamma(&self, alpha: f64) -> Option<f64> {
        let k = self.kappa();
        let g2 = k * k - alpha * alpha;
        (g2 >= 0.0).then(|| g2.sqrt())
    }

    pub fn epsilon(&self, alpha: f64, branch: EnergyBranch) -> Option<f64> {
        let g = self.gamma(alpha)?;
        let e2 = self.mass * self.mass + g + self.kappa() + self.n as f64 + 1.0;
        (e2 >= 0.0).then(|| branch.sign() * e2.sqrt())
    }

    /// The (2n+5)×(2n+3) system; columns are p₀…p_{n+1} then q₀…q_n, rows the powers
    /// x⁰…x^{n+1} of the first equation then x⁰…x^{n+2} of the second.
    pub fn matrix(&self, alpha: f64, branch: EnergyBranch) -> Result<DMatrix<f64>, QesError> {
        let gamma = self
            .gamma(alpha)
            .ok_or_else(|| QesError::Infeasible(format!("alpha^2 > kappa^2 at alpha = {alpha}")))?;
        let eps = self
            .epsilon(alpha, branch)
            .ok_or_else(|| QesError::Infeasible(format!("epsilon^2 < 0 at alpha = {alpha}")))?;
        Ok(self.matrix_at(alpha, gamma, eps))
    }

    fn matrix_at(&self, alpha: f64, gamma: f64, eps: f64) -> DMatrix<f64> {
        let n = self.n;
        let k = self.kappa();
        let m = self.mass;
        let np = n + 2;
        let nq = n + 1;
        let off = n + 2;
        let mut a = DMatrix::zeros(self.equations(), self.unknowns());
        for i in 0..np {
            a[(i, i)] += i as f64 + k + gamma;
            a[(off + i + 1, i)] += eps + m;
            a[(off + i, i)] += alpha;
        }
        for j in 0..nq {
            a[(j + 1, np + j)] -= eps - m;
            a[(j, np + j)] -= alpha;
            a[(off + j, np + j)] += j as f64 + gamma - k;
            a[(off + j + 2, np + j)] -= 1.0;
        }
        a
    }

    pub fn sigma_min(&self, alpha: f64, branch: EnergyBranch) -> Option<f64> {
        let m = self.matrix(alpha, branch).ok()?;
        smallest_singular(&m).ok().map(|(s, _)| s)
    }

    /// Solution data at a given α, with P normalized monic.
    pub fn solution_at(&self, alpha: f64, branch: EnergyBranch) -> Result<QesSolution, QesError> {
        let a = self.matrix(alpha, branch)?;
        let (values, v) = svd_full(&a)?;
        let last = values.len() - 1;
        let sigma = if values[0] > 0.0 { values[last] / values[0] } else { 0.0 };
        let col = v.column(last);
        let np = self.n + 2;
        let lead = col[np - 1];
        if lead.abs() < 1e-12 {
            return Err(QesError::NoAlgebraicSolution(format!(
                "P has degree below n + 1 at alpha = {alpha}"
            )));
        }
        let p = Poly::new(col.rows(0, np).iter().map(|c| c / lead).collect());
        let q = Poly::new(col.rows(np, self.n + 1).iter().map(|c| c / lead).collect());
        Ok(QesSolution {
            n: self.n,
            fixed_coupling: alpha,
            epsilon: self.epsilon(alpha, branch).unwrap_or(f64::NAN),
            exponent: self.gamma(alpha).unwrap_or(f64::NAN),
            spinor: PolySpinor::new(q, p),
            sigma_min: sigma,
            branch_id: 0,
            energy_branch: branch,
        })
    }

    /// The radial problem in r that a planar solution solves, for field strength eB̃.
    ///
    /// The rescaled equations are the radial system with ε and α reversed in sign, so a
    /// solution (α, ε) corresponds to the Coulomb coupling −α and the energy −ε√(eB̃).
    pub fn instance(&self, alpha: f64, field: f64) -> Result<ProblemInstance, QesError> {
        if field <= 0.0 {
            return Err(QesError::Validation("field strength must be positive".into()));
        }
        let params = PhysicalParams {
            mass: self.mass * field.sqrt(),
            kappa: self.kappa,
            mu_n: 1.0,
            epsilon: None,
        };
        let pot = PotentialSpec::new(-alpha, 0.0, vec![], vec![], vec![0.0, 0.5 * field]);
        Ok(ProblemInstance::new(params, pot, Geometry::Planar)?)
    }

    /// Energy in the unscaled radial problem for a solution's ε.
    pub fn physical_energy(epsilon: f64, field: f64) -> f64 {
        -epsilon * field.sqrt()
    }
}

/// Solutions for n = 0 from ε = −(M ± √(M² + 2))/2 and α² = −(1 + 8κε²)/(16ε⁴), one entry per
/// sign of the square root.
pub fn planar_n0_closed_form(kappa: f64, mass: f64) -> Result<Vec<Result<QesSolution, QesError>>, QesError> {
    let sys = planar_build(0, kappa, mass)?;
    let root = (mass * mass + 2.0).sqrt();
    Ok([1.0, -1.0]
        .iter()
        .map(|&s| {
            let eps = -0.5 * (mass + s * root);
            let e2 = eps * eps;
            let alpha2 = -(1.0 + 8.0 * kappa * e2) / (16.0 * e2 * e2);
            if alpha2 < 0.0 {
                return Err(QesError::NoAlgebraicSolution(format!(
                    "alpha^2 = {alpha2} < 0 at epsilon = {eps}"
                )));
            }
            let alpha = alpha2.sqrt();
            let gamma = sys.gamma(alpha).ok_or_else(|| {
                QesError::NoAlgebraicSolution(format!("alpha = {alpha} exceeds |kappa|"))
            })?;
            let gamma_closed = -1.0 / (4.0 * e2) - kappa;
            if (gamma - gamma_closed).abs() > 1e-9 {
                return Err(QesError::NoAlgebraicSolution(format!(
                    "gamma = {gamma} differs from the required {gamma_closed} at epsilon = {eps}"
                )));
            }
            let consistency = e2 - (mass * mass + gamma + kappa + 1.0);
            if consistency.abs() > 1e-12 * (1.0 + e2) {
                return Err(QesError::NoAlgebraicSolution(format!(
                    "epsilon^2 consistency fails by {consistency:e}"
                )));
            }
            let branch = EnergyBranch::of(eps);
            let q0 = eps + mass;
            let p = Poly::new(vec![-alpha / q0, 1.0]);
            let q = Poly::constant(q0);
            let a = sys.matrix_at(alpha, gamma, eps);
            let sigma = smallest_singular(&a)?.0;
            Ok(QesSolution {
                n: 0,
                fixed_coupling: alpha,
                epsilon: eps,
                exponent: gamma,
                spinor: PolySpinor::new(q, p),
                sigma_min: sigma,
                branch_id: 0,
                energy_branch: branch,
            })
        })
        .collect())
}

/// Couplings α in the range admitting polynomial solutions, on both ε branches, sorted by α.
pub fn planar_solve(
    sys: &PlanarSystem,
    alpha_range: (f64, f64),
    grid: usize,
) -> Result<Vec<QesSolution>, QesError> {
    let (lo, hi) = alpha_range;
    let k = sys.kappa().abs();
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(QesError::Validation(format!("empty alpha range [{lo}, {hi}]")));
    }
    if lo < -k || hi > k {
        return Err(QesError::Validation(format!(
            "alpha range [{lo}, {hi}] leaves [-|kappa|, |kappa|]"
        )));
    }
    if grid < 2 {
        return Err(QesError::Validation("grid needs at least two points".into()));
    }
    let mut out = Vec::new();
    for branch in EnergyBranch::BOTH {
        let roots = scan_roots(|a| sys.sigma_min(a, branch), lo, hi, grid, ScanOptions::default());
        for (alpha, _) in roots {
            out.push(sys.solution_at(alpha, branch)?);
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

    #[test]
    fn dimensions() {
        let s = planar_build(2, 0.5, 0.0).unwrap();
        let m = s.matrix(0.3, EnergyBranch::Positive).unwrap();
        assert_eq!(m.shape(), (9, 7));
        assert!(planar_build(1, 1.0, 0.0).is_err());
        assert!(s.matrix(0.7, EnergyBranch::Positive).is_err());
    }

    #[test]
    fn closed_form_half_coupling() {
        let sols = planar_n0_closed_form(-0.5, 0.0).unwrap();
        for s in sols {
            let s = s.unwrap();
            assert!((s.fixed_coupling - 0.5).abs() < 1e-15);
            assert!((s.epsilon * s.epsilon - 0.5).abs() < 1e-15);
            assert!(s.exponent.abs() < 1e-15);
            assert!(s.sigma_min < 1e-12);
        }
    }

    #[test]
    fn positive_kappa_has_no_n0_solution() {
        for s in planar_n0_closed_form(0.5, 0.0).unwrap() {
            assert!(matches!(s, Err(QesError::NoAlgebraicSolution(_))));
        }
    }

    #[test]
    fn closed_form_spinor_solves_system() {
        for s in planar_n0_closed_form(-0.5, 1.0).unwrap().into_iter().flatten() {
            let sys = planar_build(0, -0.5, 1.0).unwrap();
            let a = sys.matrix(s.fixed_coupling, s.energy_branch).unwrap();
            let mut v = nalgebra::DVector::zeros(3);
            v[0] = s.spinor.lower.coeff(0);
            v[1] = s.spinor.lower.coeff(1);
            v[2] = s.spinor.upper.coeff(0);
            assert!((a * v).amax() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_does_not_admit_roots_generically() {
        let s = planar_build(1, 0.5, 0.3).unwrap();
        assert!(s.sigma_min(0.0, EnergyBranch::Positive).unwrap() > 1e-6);
    }
}
