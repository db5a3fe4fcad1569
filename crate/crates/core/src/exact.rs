//! Exactly solvable cases: the Dirac oscillator, its rotated extension and the
//! Dirac–Coulomb problem.
//!
//! Each level is found by choosing ε so that the gauge-transformed radial operator
//! maps a space of polynomial spinors into itself; the eigen-spinor is the nullspace
//! of the operator's matrix on that space.

use std::collections::BTreeMap;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::model::{preset, ModelError, PhysicalParams, Preset, ProblemInstance};
use crate::polyalg::{
    svd_full, GaugeTransform, PolyAlgError, PolySpinor, Premultiplier, RadialOperator,
};

/// Tolerance for overflow rows and singular values, relative to the operator's largest coefficient.
pub const SUBSPACE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("no bound states: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("supercritical coupling: kappa^2 + beta^2 - alpha^2 = {0}")]
    Supercritical(f64),
    #[error("no bound state with eta = {n} in (-M, M)")]
    NoBoundState { n: usize },
    #[error("level n = {n} at epsilon = {epsilon} has no polynomial eigen-spinor")]
    NotInvariant { n: usize, epsilon: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    PolyAlg(#[from] PolyAlgError),
}

/// An eigenstate in the transformed frame.
#[derive(Debug, Clone)]
pub struct ExactState {
    pub epsilon: f64,
    pub transform: GaugeTransform,
    /// Polynomial spinor in the transform's target variable.
    pub spinor: PolySpinor,
    pub deg_upper: i32,
    pub deg_lower: i32,
    /// Max-abs of the transformed operator applied to the spinor, relative to the
    /// operator and spinor scales.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ExactLevel {
    pub n: usize,
    pub epsilon_plus: f64,
    /// Second root when only ε² is fixed.
    pub epsilon_minus: Option<f64>,
    /// Realized eigenstates; a quantized value can fail to carry a normalizable state.
    pub states: Vec<ExactState>,
}

#[derive(Debug, Clone)]
pub struct ExactSpectrumResult {
    pub instance: ProblemInstance,
    pub levels: Vec<ExactLevel>,
}

impl ExactSpectrumResult {
    pub fn states(&self) -> impl Iterator<Item = (usize, &ExactState)> {
        self.levels.iter().flat_map(|l| l.states.iter().map(move |s| (l.n, s)))
    }

    pub fn max_residual(&self) -> f64 {
        self.states().map(|(_, s)| s.residual).fold(0.0, f64::max)
    }
}

/// The rotated oscillator family: after an optional rotation by ω the operator
/// coincides with a Dirac oscillator of mass `mass`, label `kappa` and coupling `coupling`.
#[derive(Debug, Clone)]
struct OscillatorFamily {
    instance: ProblemInstance,
    omega: f64,
    mass: f64,
    kappa: f64,
    coupling: f64,
}

impl OscillatorFamily {
    /// Offset added to n in ε² = M² + 4μ(n + offset).
    fn offset(&self) -> f64 {
        if self.kappa > 0.0 {
            0.0
        } else {
            -self.kappa + 0.5
        }
    }

    fn energy(&self, n: usize) -> f64 {
        (self.mass * self.mass + 4.0 * self.coupling * (n as f64 + self.offset())).sqrt()
    }

    /// Transform at ε; also returns the (upper, lower) degrees of the invariant space.
    fn transform(&self, n: usize, epsilon: f64) -> (GaugeTransform, i32, i32) {
        let mut g = GaugeTransform::identity();
        if self.omega != 0.0 {
            g = g.rotation(self.omega);
        }
        g = if self.kappa > 0.0 {
            g.power(self.kappa, self.kappa - 1.0)
        } else {
            g.power(1.0 - self.kappa, -self.kappa)
        };
        g = g.exponential(0.0, self.coupling);
        let denom = epsilon + self.mass;
        let n = n as i32;
        let (g, du, dl) = if denom.abs() > 1e-12 * (1.0 + self.mass.abs()) {
            (g.shear(2.0 * self.coupling / denom), n - 1, n)
        } else {
            (g, n, n - 1)
        };
        (g.premultiply(Premultiplier::R).square_variable(), du, dl)
    }

    fn state(&self, n: usize, epsilon: f64) -> Result<Option<ExactState>, ExactError> {
        let (g, du, dl) = self.transform(n, epsilon);
        invariant_state(&self.instance, epsilon, g, du, dl)
    }

    fn spectrum(&self, n_max: usize) -> Result<ExactSpectrumResult, ExactError> {
        let levels = (0..=n_max)
            .map(|n| {
                let e = self.energy(n);
                let mut states = Vec::new();
                for eps in [e, -e] {
                    if let Some(s) = self.state(n, eps)? {
                        states.push(s);
                    }
                }
                Ok(ExactLevel {
                    n,
                    epsilon_plus: e,
                    epsilon_minus: Some(-e),
                    states,
                })
            })
            .collect::<Result<_, ExactError>>()?;
        Ok(ExactSpectrumResult {
            instance: self.instance.clone(),
            levels,
        })
    }
}

/// Conjugates the radial operator at ε and extracts a polynomial eigen-spinor on
/// P(du) ⊕ P(dl), if the space is invariant and the restricted operator is singular.
fn invariant_state(
    instance: &ProblemInstance,
    epsilon: f64,
    g: GaugeTransform,
    du: i32,
    dl: i32,
) -> Result<Option<ExactState>, ExactError> {
    if du < 0 && dl < 0 {
        return Ok(None);
    }
    let op = g.conjugate(&RadialOperator::dirac(instance, epsilon))?;
    let rep = op.matrix_rep(du, dl)?;
    let threshold = SUBSPACE_TOL * op.max_abs().max(f64::MIN_POSITIVE);
    if rep.overflow_norm() > threshold {
        return Ok(None);
    }
    let (values, vectors) = svd_full(&rep.matrix)?;
    let last = values.len() - 1;
    if values[last] >= threshold {
        return Ok(None);
    }
    let mut spinor = rep.spinor_from(&vectors.column(last).into_owned());
    let lead = if dl >= 0 {
        spinor.lower.coeff(dl as usize)
    } else {
        spinor.upper.coeff(du as usize)
    };
    let norm = if lead.abs() > 1e-8 * spinor.max_abs() {
        lead
    } else {
        spinor.max_abs()
    };
    spinor = spinor.scale(1.0 / norm);
    let image = op.apply(&spinor)?;
    let residual = image.max_abs() / (op.max_abs() * spinor.max_abs());
    Ok(Some(ExactState {
        epsilon,
        transform: g,
        spinor,
        deg_upper: du,
        deg_lower: dl,
        residual,
    }))
}

fn params_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Dirac oscillator (E(r) = −r): levels ε² = M² + 4nμₙ for κ > 0, and
/// ε² = M² + 4μₙ(n + |κ| + 1/2) for κ < 0.
pub fn oscillator_spectrum(params: &PhysicalParams, n_max: usize) -> Result<ExactSpectrumResult, ExactError> {
    if params.mu_n <= 0.0 {
        return Err(ExactError::Domain(format!(
            "mu_n = {} does not confine",
            params.mu_n
        )));
    }
    let instance = preset(
        Preset::DiracOscillator,
        &params_map(&[
            ("M", params.mass),
            ("kappa", params.kappa.value()),
            ("mu_n", params.mu_n),
        ]),
    )?;
    OscillatorFamily {
        instance,
        omega: 0.0,
        mass: params.mass,
        kappa: params.kappa.value(),
        coupling: params.mu_n,
    }
    .spectrum(n_max)
}

/// Extended oscillator data alongside its spectrum.
#[derive(Debug, Clone)]
pub struct ExtendedOscillatorResult {
    pub spectrum: ExactSpectrumResult,
    pub omega: f64,
    /// cos 2ω
    pub cos2w: f64,
    pub radius: f64,
    pub forced_beta: f64,
    pub forced_gamma0: f64,
}

/// Oscillator with W = β/r + β₁r and E = γ₀ + γ₁r at the forced β, γ₀ (α = 0):
/// levels E² = M²/c² + 4nR with c = cos 2ω, R = √(γ₁² + β₁²).
pub fn extended_oscillator_spectrum(
    mass: f64,
    kappa: f64,
    beta1: f64,
    gamma1: f64,
    n_max: usize,
) -> Result<ExtendedOscillatorResult, ExactError> {
    let radius = gamma1.hypot(beta1);
    if radius == 0.0 {
        return Err(ExactError::Domain("beta1 = gamma1 = 0".into()));
    }
    let cos2w = gamma1 / radius;
    if cos2w.abs() < 1e-12 {
        return Err(ExactError::Singular("cos 2ω = 0".into()));
    }
    let instance = preset(
        Preset::ExtendedOscillatorES,
        &params_map(&[("M", mass), ("kappa", kappa), ("beta1", beta1), ("gamma1", gamma1)]),
    )?;
    let omega = 0.5 * beta1.atan2(gamma1);
    let forced_beta = instance.potentials.beta;
    let forced_gamma0 = instance.potentials.gamma_poly[0];
    let spectrum = OscillatorFamily {
        instance,
        omega,
        mass: mass / cos2w,
        kappa: kappa / cos2w,
        coupling: radius,
    }
    .spectrum(n_max)?;
    Ok(ExtendedOscillatorResult {
        spectrum,
        omega,
        cos2w,
        radius,
        forced_beta,
        forced_gamma0,
    })
}

/// Quantization quantity of the Coulomb problem at a given ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombEta {
    pub eta: f64,
    pub theta: f64,
    pub lambda: f64,
}

/// η = (αε − Mβ)/√(M² − ε²) − √(κ² + β² − α²).
pub fn coulomb_eta(params: &PhysicalParams, alpha: f64, beta: f64) -> Result<CoulombEta, ExactError> {
    let eps = params
        .epsilon
        .ok_or_else(|| ExactError::Domain("epsilon is required".into()))?;
    let m = params.mass;
    if eps.abs() >= m.abs() {
        return Err(ExactError::Domain(format!("|epsilon| = {} >= M", eps.abs())));
    }
    let k = params.kappa.value();
    let disc = k * k + beta * beta - alpha * alpha;
    if disc <= 0.0 {
        return Err(ExactError::Supercritical(disc));
    }
    let theta = disc.sqrt();
    let lambda = ((m - eps) * (m + eps)).sqrt();
    Ok(CoulombEta {
        eta: (alpha * eps - m * beta) / lambda - theta,
        theta,
        lambda,
    })
}

/// Closed-form Coulomb level for β = 0: ε = M·N/√(N² + α²), N = n + √(κ² − α²).
pub fn sommerfeld_energy(mass: f64, kappa: f64, alpha: f64, n: usize) -> f64 {
    let big_n = n as f64 + (kappa * kappa - alpha * alpha).sqrt();
    mass * big_n / (big_n * big_n + alpha * alpha).sqrt()
}

/// Transform taking the Coulomb operator at ε to a form preserving P(n−1) ⊕ P(n) when η = n.
pub fn coulomb_transform(mass: f64, epsilon: f64, theta: f64) -> GaugeTransform {
    let um = (mass - epsilon).sqrt();
    let up = (mass + epsilon).sqrt();
    GaugeTransform::identity()
        .similarity(Matrix2::new(um, um, up, -up))
        .power(theta, theta)
        .exponential(um * up, 0.0)
        .left(Matrix2::new(1.0, 0.0, -1.0, 1.0))
        .right(Matrix2::new(1.0, -1.0, 1.0, 0.0))
        .premultiply(Premultiplier::R)
}

/// Solves η(ε) = n by bisection on (−M, M) for n = 1…n_max.
pub fn coulomb_spectrum(
    params: &PhysicalParams,
    alpha: f64,
    beta: f64,
    n_max: usize,
) -> Result<ExactSpectrumResult, ExactError> {
    let m = params.mass;
    if m <= 0.0 {
        return Err(ExactError::Domain("M must be positive".into()));
    }
    let instance = preset(
        Preset::DiracCoulomb,
        &params_map(&[("M", m), ("kappa", params.kappa.value()), ("alpha", alpha), ("beta", beta)]),
    )?;
    let eta_at = |eps: f64| coulomb_eta(&params.with_epsilon(eps), alpha, beta);
    let delta = 1e-12 * m;
    let (lo0, hi0) = (-m + delta, m - delta);
    let mut levels = Vec::new();
    for n in 1..=n_max {
        let target = n as f64;
        let g = |eps: f64| eta_at(eps).map(|e| e.eta - target);
        let (mut lo, mut hi) = (lo0, hi0);
        let (glo, ghi) = (g(lo)?, g(hi)?);
        if glo.signum() == ghi.signum() {
            return Err(ExactError::NoBoundState { n });
        }
        let rising = glo < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (g(mid)? < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eps = 0.5 * (lo + hi);
        let ce = eta_at(eps)?;
        let g_t = coulomb_transform(m, eps, ce.theta);
        let state = invariant_state(&instance, eps, g_t, n as i32 - 1, n as i32)?
            .ok_or(ExactError::NotInvariant { n, epsilon: eps })?;
        levels.push(ExactLevel {
            n,
            epsilon_plus: eps,
            epsilon_minus: None,
            states: vec![state],
        });
    }
    Ok(ExactSpectrumResult { instance, levels })
}
