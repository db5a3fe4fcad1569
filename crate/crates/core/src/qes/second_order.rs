use nalgebra::DMatrix;

use super::{QesError, QesSolution};
use crate::polyalg::{Poly, ScalarOp};

/// Scalar operator
///
/// T = (x² + x₀x) d² + (−x²(x + x₀) + 2β(x + x₀) + δ) d + ε̃ x(x + x₀) + (b − c) x + b x₀,
///
/// where δ is a constant drift offset (zero in the reference form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderT {
    pub x0: f64,
    pub b: f64,
    pub c: f64,
    pub beta_t: f64,
    pub eps_tilde: f64,
    pub drift_offset: f64,
}

pub fn t_build(x0: f64, b: f64, c: f64, beta_t: f64, eps_tilde: f64) -> SecondOrderT {
    SecondOrderT {
        x0,
        b,
        c,
        beta_t,
        eps_tilde,
        drift_offset: 0.0,
    }
}

impl SecondOrderT {
    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift_offset = drift;
        self
    }

    /// Decoupled equation for Q of a planar system at (α, ε): x₀ = α/(ε + M), β = γ,
    /// b = 2εα + (κ − γ)(ε + M)/α, c = α/(ε + M) + (κ − γ)(ε + M)/α,
    /// ε̃ = ε² − M² − κ − γ − 1, and drift offset x₀.
    pub fn planar_reduction(kappa: f64, mass: f64, alpha: f64, epsilon: f64) -> Result<Self, QesError> {
        let g2 = kappa * kappa - alpha * alpha;
        if g2 < 0.0 {
            return Err(QesError::Supercritical {
                alpha2: alpha * alpha,
                kappa2: kappa * kappa,
            });
        }
        if alpha == 0.0 || epsilon + mass == 0.0 {
            return Err(QesError::Singular("alpha = 0 or epsilon = -M".into()));
        }
        let gamma = g2.sqrt();
        let em = epsilon + mass;
        let x0 = alpha / em;
        Ok(SecondOrderT {
            x0,
            b: 2.0 * epsilon * alpha + (kappa - gamma) * em / alpha,
            c: x0 + (kappa - gamma) * em / alpha,
            beta_t: gamma,
            eps_tilde: epsilon * epsilon - mass * mass - kappa - gamma - 1.0,
            drift_offset: x0,
        })
    }

    pub fn planar_solution(kappa: f64, mass: f64, sol: &QesSolution) -> Result<Self, QesError> {
        Self::planar_reduction(kappa, mass, sol.fixed_coupling, sol.epsilon)
    }

    pub fn operator(&self) -> ScalarOp {
        let (x0, bt) = (self.x0, self.beta_t);
        ScalarOp::new(vec![
            Poly::new(vec![
                self.b * x0,
                self.eps_tilde * x0 + self.b - self.c,
                self.eps_tilde,
            ]),
            Poly::new(vec![2.0 * bt * x0 + self.drift_offset, 2.0 * bt, -x0, -1.0]),
            Poly::new(vec![0.0, x0, 1.0]),
        ])
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        self.operator().apply(p)
    }

    /// Matrix of T on P(n) with rows for x⁰…x^{n+1}: n + 2 equations.
    pub fn system_matrix(&self, n: usize) -> DMatrix<f64> {
        self.operator().matrix_rep(n, n + 2).rows(0, n + 2).into_owned()
    }

    /// Coefficient of x^{n+2} in T xⁿ; vanishes exactly when ε̃ = n.
    pub fn top_coefficient(&self, n: usize) -> f64 {
        self.eps_tilde - n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// x(x d − n)
    JPlus,
    /// x d − n/2
    JZero,
    /// d
    JMinus,
}

impl Generator {
    pub fn operator(self, n: usize) -> ScalarOp {
        let n = n as f64;
        match self {
            Generator::JPlus => ScalarOp::new(vec![Poly::new(vec![0.0, -n]), Poly::monomial(2, 1.0)]),
            Generator::JZero => ScalarOp::new(vec![Poly::constant(-n / 2.0), Poly::monomial(1, 1.0)]),
            Generator::JMinus => ScalarOp::d(),
        }
    }
}

/// Σ cᵢ·(product of generators); an empty product is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratorPoly {
    pub terms: Vec<(f64, Vec<Generator>)>,
}

impl GeneratorPoly {
    pub fn expand(&self, n: usize) -> ScalarOp {
        self.terms.iter().fold(ScalarOp::zero(), |acc, (c, word)| {
            let op = word
                .iter()
                .fold(ScalarOp::constant(1.0), |p, g| p.compose(&g.operator(n)));
            acc.add(&op.scale(*c))
        })
    }
}

/// T = x·T_QES + S_QES
#[derive(Debug, Clone, PartialEq)]
pub struct QesDecomposition {
    pub n: usize,
    pub t_qes: GeneratorPoly,
    pub s_qes: GeneratorPoly,
}

impl QesDecomposition {
    pub fn expand(&self) -> ScalarOp {
        ScalarOp::x()
            .compose(&self.t_qes.expand(self.n))
            .add(&self.s_qes.expand(self.n))
    }
}

pub fn t_qes_decompose(t: &SecondOrderT, n: usize) -> Result<QesDecomposition, QesError> {
    if (t.eps_tilde - n as f64).abs() > 1e-12 {
        return Err(QesError::NotQuantized {
            eps_tilde: t.eps_tilde,
            n,
        });
    }
    use Generator::*;
    let nf = n as f64;
    let (x0, b, c, beta) = (t.x0, t.b, t.c, t.beta_t);
    let t_qes = GeneratorPoly {
        terms: vec![
            (-1.0, vec![JPlus]),
            (-x0, vec![JZero]),
            (x0 * nf / 2.0 + b - c, vec![]),
        ],
    };
    let s_qes = GeneratorPoly {
        terms: vec![
            (1.0, vec![JPlus, JMinus]),
            (x0, vec![JZero, JMinus]),
            (nf + 2.0 * beta, vec![JZero]),
            (x0 * nf / 2.0 + 2.0 * beta * x0 + t.drift_offset, vec![JMinus]),
            (nf * nf / 2.0 + beta * nf + b * x0, vec![]),
        ],
    };
    Ok(QesDecomposition { n, t_qes, s_qes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_is_annihilated_in_the_trivial_case() {
        let t = t_build(0.0, 1.3, 1.3, 0.0, 0.0);
        assert!(t.apply(&Poly::constant(1.0)).is_zero());
        let op = t.operator();
        assert_eq!(op.coeff(2), Poly::monomial(2, 1.0));
        assert_eq!(op.coeff(1), Poly::monomial(3, -1.0));
    }

    #[test]
    fn action_on_x() {
        let (x0, b, c, bt, e) = (0.5, 2.0, 0.75, 1.5, 3.0);
        let t = t_build(x0, b, c, bt, e);
        // T x = −x²(x+x₀) + 2β(x+x₀) + ε̃x(x+x₀)·x + (b−c)x² + b x₀ x
        let expect = Poly::new(vec![
            2.0 * bt * x0,
            2.0 * bt + b * x0,
            -x0 + e * x0 + b - c,
            -1.0 + e,
        ]);
        assert!((&t.apply(&Poly::monomial(1, 1.0)) - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn highest_weight_is_annihilated() {
        for n in 0..5 {
            let img = Generator::JPlus.operator(n).apply(&Poly::monomial(n, 1.0));
            assert!(img.is_zero());
        }
    }

    #[test]
    fn requires_quantized_eps_tilde() {
        let t = t_build(0.1, 0.2, 0.3, 0.4, 1.5);
        assert!(matches!(t_qes_decompose(&t, 1), Err(QesError::NotQuantized { .. })));
    }

    proptest! {
        #[test]
        fn decomposition_round_trips(
            x0 in -2.0..2.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
            beta in -2.0..2.0f64, drift in -1.0..1.0f64, n in 0usize..4,
        ) {
            let t = t_build(x0, b, c, beta, n as f64).with_drift(drift);
            let d = t_qes_decompose(&t, n).unwrap();
            let diff = d.expand().sub(&t.operator()).max_abs();
            prop_assert!(diff <= 1e-12 * (1.0 + t.operator().max_abs()));
        }
    }
}
