use nalgebra::Matrix2;

use super::operator::{lmat_left, lmat_map, lmat_right, premultiplier_shift, LMat, Laurent};
use super::{PolyAlgError, PolySpinor, Premultiplier, RadialOperator, Variable};

/// One factor of a composite gauge transformation.
///
/// Acting on an operator H (in the order listed in a [`GaugeTransform`]):
/// similarity steps send H to G⁻¹HG and substitute ψ = Gφ; `RightConstant(K)` sends H to HK
/// with φ_old = Kφ; `LeftConstant(L)` sends H to LH; `Premultiply`/`Divide` multiply or divide
/// the equations by r or x; the variable steps rewrite the operator in x = r² or back in r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeStep {
    /// Similarity by U(ω) = [[cos ω, −sin ω], [sin ω, cos ω]].
    Rotation(f64),
    /// Similarity by an invertible constant matrix.
    Similarity(Matrix2<f64>),
    /// Similarity by diag(r^upper, r^lower).
    Power { upper: f64, lower: f64 },
    /// Similarity by exp(−λ₂r²/2 − λ₁r).
    Exponential { lambda1: f64, lambda2: f64 },
    RightConstant(Matrix2<f64>),
    LeftConstant(Matrix2<f64>),
    Premultiply(Premultiplier),
    Divide(Premultiplier),
    SquareVariable,
    RevertVariable,
}

impl GaugeStep {
    fn inverse(&self) -> Result<GaugeStep, PolyAlgError> {
        let inv = |m: &Matrix2<f64>| {
            m.try_inverse()
                .ok_or_else(|| PolyAlgError::Validation("singular constant factor".into()))
        };
        Ok(match *self {
            GaugeStep::Rotation(w) => GaugeStep::Rotation(-w),
            GaugeStep::Similarity(m) => GaugeStep::Similarity(inv(&m)?),
            GaugeStep::Power { upper, lower } => GaugeStep::Power {
                upper: -upper,
                lower: -lower,
            },
            GaugeStep::Exponential { lambda1, lambda2 } => GaugeStep::Exponential {
                lambda1: -lambda1,
                lambda2: -lambda2,
            },
            GaugeStep::RightConstant(m) => GaugeStep::RightConstant(inv(&m)?),
            GaugeStep::LeftConstant(m) => GaugeStep::LeftConstant(inv(&m)?),
            GaugeStep::Premultiply(p) => GaugeStep::Divide(p),
            GaugeStep::Divide(p) => GaugeStep::Premultiply(p),
            GaugeStep::SquareVariable => GaugeStep::RevertVariable,
            GaugeStep::RevertVariable => GaugeStep::SquareVariable,
        })
    }

    /// Function-side factor S(r) and its r-derivative.
    fn function_factor(&self, r: f64) -> Option<(Matrix2<f64>, Matrix2<f64>)> {
        match *self {
            GaugeStep::Rotation(w) => Some((rotation(w), Matrix2::zeros())),
            GaugeStep::Similarity(m) | GaugeStep::RightConstant(m) => Some((m, Matrix2::zeros())),
            GaugeStep::Power { upper, lower } => Some((
                Matrix2::new(r.powf(upper), 0.0, 0.0, r.powf(lower)),
                Matrix2::new(upper * r.powf(upper - 1.0), 0.0, 0.0, lower * r.powf(lower - 1.0)),
            )),
            GaugeStep::Exponential { lambda1, lambda2 } => {
                let e = (-0.5 * lambda2 * r * r - lambda1 * r).exp();
                let de = -(lambda2 * r + lambda1) * e;
                Some((Matrix2::identity() * e, Matrix2::identity() * de))
            }
            _ => None,
        }
    }

    /// Equation-side factor at r.
    fn equation_factor(&self, r: f64) -> Matrix2<f64> {
        let scalar = |p: Premultiplier| match p {
            Premultiplier::One => 1.0,
            Premultiplier::R => r,
            Premultiplier::X => r * r,
        };
        match self.function_factor(r) {
            Some((m, _)) if !matches!(self, GaugeStep::RightConstant(_)) => {
                m.try_inverse().unwrap_or_else(|| Matrix2::from_element(f64::NAN))
            }
            _ => match *self {
                GaugeStep::LeftConstant(m) => m,
                GaugeStep::Premultiply(p) => Matrix2::identity() * scalar(p),
                GaugeStep::Divide(p) => Matrix2::identity() / scalar(p),
                _ => Matrix2::identity(),
            },
        }
    }
}

pub fn rotation(omega: f64) -> Matrix2<f64> {
    let (s, c) = omega.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Ordered composite of gauge steps, applied first to last.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaugeTransform {
    steps: Vec<GaugeStep>,
}

impl GaugeTransform {
    pub fn identity() -> Self {
        GaugeTransform { steps: Vec::new() }
    }

    pub fn from_steps(steps: Vec<GaugeStep>) -> Self {
        GaugeTransform { steps }
    }

    pub fn steps(&self) -> &[GaugeStep] {
        &self.steps
    }

    pub fn then(mut self, step: GaugeStep) -> Self {
        self.steps.push(step);
        self
    }

    pub fn rotation(self, omega: f64) -> Self {
        self.then(GaugeStep::Rotation(omega))
    }

    pub fn similarity(self, m: Matrix2<f64>) -> Self {
        self.then(GaugeStep::Similarity(m))
    }

    pub fn power(self, upper: f64, lower: f64) -> Self {
        self.then(GaugeStep::Power { upper, lower })
    }

    pub fn exponential(self, lambda1: f64, lambda2: f64) -> Self {
        self.then(GaugeStep::Exponential { lambda1, lambda2 })
    }

    /// Right factor [[1, y], [0, 1]].
    pub fn shear(self, y: f64) -> Self {
        self.then(GaugeStep::RightConstant(Matrix2::new(1.0, y, 0.0, 1.0)))
    }

    pub fn right(self, m: Matrix2<f64>) -> Self {
        self.then(GaugeStep::RightConstant(m))
    }

    pub fn left(self, m: Matrix2<f64>) -> Self {
        self.then(GaugeStep::LeftConstant(m))
    }

    pub fn premultiply(self, p: Premultiplier) -> Self {
        self.then(GaugeStep::Premultiply(p))
    }

    pub fn square_variable(self) -> Self {
        self.then(GaugeStep::SquareVariable)
    }

    pub fn inverse(&self) -> Result<GaugeTransform, PolyAlgError> {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(GaugeStep::inverse)
            .collect::<Result<_, _>>()?;
        Ok(GaugeTransform { steps })
    }

    /// Net exponents of the power prefactor.
    pub fn theta(&self) -> (f64, f64) {
        self.steps.iter().fold((0.0, 0.0), |(a, b), s| match s {
            GaugeStep::Power { upper, lower } => (a + upper, b + lower),
            _ => (a, b),
        })
    }

    /// Net (λ₁, λ₂) of the exponential prefactor.
    pub fn lambdas(&self) -> (f64, f64) {
        self.steps.iter().fold((0.0, 0.0), |(a, b), s| match s {
            GaugeStep::Exponential { lambda1, lambda2 } => (a + lambda1, b + lambda2),
            _ => (a, b),
        })
    }

    /// Net rotation angle.
    pub fn omega(&self) -> f64 {
        self.steps.iter().fold(0.0, |a, s| match s {
            GaugeStep::Rotation(w) => a + w,
            _ => a,
        })
    }

    /// Product of the constant right factors in application order.
    pub fn constant_right(&self) -> Matrix2<f64> {
        self.steps.iter().fold(Matrix2::identity(), |a, s| match s {
            GaugeStep::RightConstant(m) => a * m,
            _ => a,
        })
    }

    /// Working variable after the transform, starting from r.
    pub fn target_variable(&self) -> Result<Variable, PolyAlgError> {
        let mut var = Variable::R;
        for s in &self.steps {
            var = match (s, var) {
                (GaugeStep::SquareVariable, Variable::R) => Variable::X,
                (GaugeStep::RevertVariable, Variable::X) => Variable::R,
                (GaugeStep::SquareVariable | GaugeStep::RevertVariable, _) => {
                    return Err(PolyAlgError::Structure("inconsistent variable changes".into()))
                }
                (_, v) => v,
            };
        }
        Ok(var)
    }

    /// Physical spinor value and r-derivative at r from a transformed polynomial spinor.
    pub fn reconstruct(&self, phi: &PolySpinor, r: f64) -> Result<([f64; 2], [f64; 2]), PolyAlgError> {
        let (mut v, mut dv) = match self.target_variable()? {
            Variable::R => (
                nalgebra::Vector2::from(phi.eval(r)),
                nalgebra::Vector2::new(phi.upper.derivative().eval(r), phi.lower.derivative().eval(r)),
            ),
            Variable::X => {
                let x = r * r;
                (
                    nalgebra::Vector2::from(phi.eval(x)),
                    nalgebra::Vector2::new(
                        2.0 * r * phi.upper.derivative().eval(x),
                        2.0 * r * phi.lower.derivative().eval(x),
                    ),
                )
            }
        };
        for s in self.steps.iter().rev() {
            if let Some((m, dm)) = s.function_factor(r) {
                let nv = m * v;
                dv = dm * v + m * dv;
                v = nv;
            }
        }
        Ok(([v[0], v[1]], [dv[0], dv[1]]))
    }

    /// Product of the equation-side factors at r: conjugate(H)φ = A(r)·(Hψ).
    pub fn equation_factor(&self, r: f64) -> Matrix2<f64> {
        self.steps
            .iter()
            .fold(Matrix2::identity(), |a, s| s.equation_factor(r) * a)
    }

    /// The operator with every step applied; the premultiplier is folded into the coefficients.
    pub fn conjugate(&self, op: &RadialOperator) -> Result<RadialOperator, PolyAlgError> {
        let mut cur = op.baked()?;
        let scale = cur.max_abs().max(1.0);
        for step in &self.steps {
            cur = apply_step(cur, step, scale)?;
        }
        let tol = 1e-14 * cur.max_abs().max(1.0);
        for l in cur.first.iter().chain(&cur.zeroth).flatten() {
            if let Some(k) = l.min_power(tol) {
                if k < -1 {
                    return Err(PolyAlgError::Structure(format!(
                        "transformed operator has a pole of order {}",
                        -k
                    )));
                }
            }
        }
        Ok(cur)
    }
}

fn require_r(op: &RadialOperator, what: &str) -> Result<(), PolyAlgError> {
    if op.variable == Variable::R {
        Ok(())
    } else {
        Err(PolyAlgError::Structure(format!("{what} must precede the change to x = r^2")))
    }
}

fn similarity_const(op: RadialOperator, m: &Matrix2<f64>) -> Result<RadialOperator, PolyAlgError> {
    let inv = m
        .try_inverse()
        .ok_or_else(|| PolyAlgError::Validation("singular similarity matrix".into()))?;
    Ok(RadialOperator {
        first: lmat_right(&lmat_left(&inv, &op.first), m),
        zeroth: lmat_right(&lmat_left(&inv, &op.zeroth), m),
        ..op
    })
}

fn apply_step(op: RadialOperator, step: &GaugeStep, scale: f64) -> Result<RadialOperator, PolyAlgError> {
    let drop = 1e-14 * scale;
    match *step {
        GaugeStep::Rotation(w) => {
            require_r(&op, "rotation")?;
            similarity_const(op, &rotation(w))
        }
        GaugeStep::Similarity(m) => {
            require_r(&op, "similarity")?;
            similarity_const(op, &m)
        }
        GaugeStep::Power { upper, lower } => {
            require_r(&op, "power prefactor")?;
            let th = [upper, lower];
            let mut first: LMat = Default::default();
            let mut zeroth: LMat = Default::default();
            for i in 0..2 {
                for j in 0..2 {
                    let diff = th[j] - th[i];
                    let k = diff.round();
                    let active = !op.first[i][j].cleaned(drop).is_zero()
                        || !op.zeroth[i][j].cleaned(drop).is_zero();
                    if (diff - k).abs() > 1e-9 {
                        if active {
                            return Err(PolyAlgError::Structure(format!(
                                "non-integer power r^{diff} in entry ({i},{j})"
                            )));
                        }
                        continue;
                    }
                    let k = k as i32;
                    first[i][j] = op.first[i][j].shift(k);
                    zeroth[i][j] = op.zeroth[i][j]
                        .shift(k)
                        .add(&op.first[i][j].shift(k - 1).scale(th[j]));
                }
            }
            Ok(RadialOperator { first, zeroth, ..op })
        }
        GaugeStep::Exponential { lambda1, lambda2 } => {
            require_r(&op, "exponential prefactor")?;
            let mut dphi = Laurent::term(1, -lambda2);
            dphi.add_term(0, -lambda1);
            let mut zeroth = op.zeroth.clone();
            for i in 0..2 {
                for j in 0..2 {
                    zeroth[i][j] = zeroth[i][j].add(&op.first[i][j].mul(&dphi));
                }
            }
            Ok(RadialOperator { zeroth, ..op })
        }
        GaugeStep::RightConstant(m) => Ok(RadialOperator {
            first: lmat_right(&op.first, &m),
            zeroth: lmat_right(&op.zeroth, &m),
            ..op
        }),
        GaugeStep::LeftConstant(m) => Ok(RadialOperator {
            first: lmat_left(&m, &op.first),
            zeroth: lmat_left(&m, &op.zeroth),
            ..op
        }),
        GaugeStep::Premultiply(p) | GaugeStep::Divide(p) => {
            let mut s = premultiplier_shift(op.variable, p)?;
            if matches!(step, GaugeStep::Divide(_)) {
                s = -s;
            }
            Ok(RadialOperator {
                first: lmat_map(&op.first, |l| l.shift(s)),
                zeroth: lmat_map(&op.zeroth, |l| l.shift(s)),
                ..op
            })
        }
        GaugeStep::SquareVariable => {
            require_r(&op, "squaring the variable")?;
            let convert = |l: &Laurent, derivative: bool| -> Result<Laurent, PolyAlgError> {
                let mut out = Laurent::zero();
                for (k, c) in l.terms() {
                    let (k, c) = if derivative { (k + 1, 2.0 * c) } else { (k, c) };
                    if k.rem_euclid(2) != 0 {
                        if c.abs() <= drop {
                            continue;
                        }
                        return Err(PolyAlgError::Structure(format!(
                            "odd power r^{k} is not a polynomial in x = r^2"
                        )));
                    }
                    out.add_term(k / 2, c);
                }
                Ok(out)
            };
            let mut first: LMat = Default::default();
            let mut zeroth: LMat = Default::default();
            for i in 0..2 {
                for j in 0..2 {
                    first[i][j] = convert(&op.first[i][j], true)?;
                    zeroth[i][j] = convert(&op.zeroth[i][j], false)?;
                }
            }
            Ok(RadialOperator {
                variable: Variable::X,
                premultiplier: op.premultiplier,
                first,
                zeroth,
            })
        }
        GaugeStep::RevertVariable => {
            if op.variable != Variable::X {
                return Err(PolyAlgError::Structure("operator is not in x = r^2".into()));
            }
            let mut first: LMat = Default::default();
            let mut zeroth: LMat = Default::default();
            for i in 0..2 {
                for j in 0..2 {
                    for (k, c) in op.first[i][j].terms() {
                        first[i][j].add_term(2 * k - 1, 0.5 * c);
                    }
                    for (k, c) in op.zeroth[i][j].terms() {
                        zeroth[i][j].add_term(2 * k, c);
                    }
                }
            }
            Ok(RadialOperator {
                variable: Variable::R,
                premultiplier: op.premultiplier,
                first,
                zeroth,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, Preset};
    use crate::polyalg::Poly;
    use std::collections::BTreeMap;

    fn oscillator(mass: f64, kappa: f64, mu: f64) -> crate::model::ProblemInstance {
        let p: BTreeMap<String, f64> = [("M", mass), ("kappa", kappa), ("mu_n", mu)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        preset(Preset::DiracOscillator, &p).unwrap()
    }

    #[test]
    fn identity_transform_returns_operator() {
        let op = RadialOperator::dirac(&oscillator(1.0, 1.0, 1.0), 0.3);
        let out = GaugeTransform::identity().conjugate(&op).unwrap();
        assert_eq!(out, op);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let u = rotation(0.37);
        assert!((u.transpose() * u - Matrix2::identity()).amax() < 1e-15);
    }

    #[test]
    fn oscillator_transform_gives_polynomial_form() {
        let (m, k, mu) = (1.3, 2.0, 0.7);
        let eps = 0.4;
        let y = 2.0 * mu / (m + eps);
        let g = GaugeTransform::identity()
            .power(k, k - 1.0)
            .exponential(0.0, mu)
            .shear(y)
            .premultiply(Premultiplier::R)
            .square_variable();
        let out = g.conjugate(&RadialOperator::dirac(&oscillator(m, k, mu), eps)).unwrap();
        assert_eq!(out.variable(), Variable::X);
        let close = |l: &Laurent, terms: &[(i32, f64)]| {
            let mut expect = Laurent::zero();
            for &(p, c) in terms {
                expect.add_term(p, c);
            }
            l.add(&expect.scale(-1.0)).max_abs() < 1e-12
        };
        assert!(close(out.first(0, 0), &[(1, 2.0)]));
        assert!(close(out.first(0, 1), &[(1, 2.0 * y)]));
        assert!(close(out.first(1, 0), &[]));
        assert!(close(out.first(1, 1), &[(1, 2.0)]));
        assert!(close(out.zeroth(0, 0), &[]));
        assert!(close(out.zeroth(0, 1), &[(0, m - eps)]));
        assert!(close(out.zeroth(1, 0), &[(1, m + eps)]));
        assert!(close(out.zeroth(1, 1), &[(0, 2.0 * k - 1.0)]));
    }

    #[test]
    fn non_integer_offdiagonal_power_is_a_structure_error() {
        let op = RadialOperator::dirac(&oscillator(1.0, 1.0, 1.0), 0.3);
        let g = GaugeTransform::identity().power(0.5, 0.0);
        assert!(matches!(g.conjugate(&op), Err(PolyAlgError::Structure(_))));
        let g = GaugeTransform::identity().power(1.0, 0.0).square_variable();
        assert!(matches!(g.conjugate(&op), Err(PolyAlgError::Structure(_))));
    }

    #[test]
    fn inverse_undoes_transform() {
        let op = RadialOperator::dirac(&oscillator(1.0, 3.0, 0.5), 0.2);
        let g = GaugeTransform::identity()
            .power(3.0, 2.0)
            .exponential(0.0, 0.5)
            .shear(0.8)
            .premultiply(Premultiplier::R)
            .square_variable();
        let there = g.conjugate(&op).unwrap();
        let back = g.inverse().unwrap().conjugate(&there).unwrap();
        assert_eq!(back.variable(), Variable::R);
        assert!(back.max_abs_diff(&op).unwrap() < 1e-12 * op.max_abs());
    }

    #[test]
    fn inverse_undoes_rotation_and_constants() {
        let op = RadialOperator::dirac(&oscillator(1.0, 3.0, 0.5), 0.2);
        let g = GaugeTransform::identity()
            .rotation(0.3)
            .similarity(Matrix2::new(1.0, 2.0, 0.5, -1.0))
            .left(Matrix2::new(1.0, 0.0, -1.0, 1.0))
            .premultiply(Premultiplier::X);
        let back = g.inverse().unwrap().conjugate(&g.conjugate(&op).unwrap()).unwrap();
        assert!(back.max_abs_diff(&op).unwrap() < 1e-12 * op.max_abs());
    }

    #[test]
    fn reconstruct_matches_direct_evaluation() {
        let g = GaugeTransform::identity().power(2.0, 1.0).exponential(0.0, 1.0).shear(0.5);
        let phi = PolySpinor::new(Poly::new(vec![1.0, 2.0]), Poly::new(vec![0.5]));
        let r: f64 = 0.7;
        let (v, dv) = g.reconstruct(&phi, r).unwrap();
        let e = (-0.5 * r * r).exp();
        let f = |r: f64| {
            let e = (-0.5 * r * r).exp();
            (r * r * (1.0 + 2.0 * r + 0.25) * e, r * 0.5 * e)
        };
        assert!((v[0] - r * r * e * (1.0 + 2.0 * r + 0.25)).abs() < 1e-14);
        assert!((v[1] - r * 0.5 * e).abs() < 1e-14);
        let h = 1e-6;
        let d0 = (f(r + h).0 - f(r - h).0) / (2.0 * h);
        let d1 = (f(r + h).1 - f(r - h).1) / (2.0 * h);
        assert!((dv[0] - d0).abs() < 1e-8 && (dv[1] - d1).abs() < 1e-8);
    }
}
