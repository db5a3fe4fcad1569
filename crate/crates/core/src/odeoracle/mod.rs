//! Shooting solver for the first-order radial system
//!
//! f′ = (κ/r + μₙE) f − (M − ε − V + W) g,
//! g′ = −(M + ε + V + W) f − (κ/r + μₙE) g.
//!
//! It integrates outward from a Frobenius start near the origin and inward from the
//! decaying asymptotic branch, and locates energies where the two solutions are parallel.
//! Nothing here depends on the algebraic modules.

mod integrator;

pub use integrator::Sample;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ProblemInstance};
use integrator::StepControl;

/// Exponent ∫λ dr that the decaying branch must reach before the outer cutoff.
pub const DECAY_EXPONENT: f64 = 40.0;
pub const R_MAX_CAP: f64 = 100.0;
const RTOL: f64 = 1e-11;
const MAX_ITER: usize = 300;
const OVERFLOW_LOG: f64 = 300.0 * std::f64::consts::LN_10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("supercritical coupling: kappa^2 + beta^2 - alpha^2 = {0}")]
    Supercritical(f64),
    #[error("invalid shooting configuration: {0}")]
    Config(String),
    #[error("miss distance does not change sign on [{lo}, {hi}] ({miss_lo:e}, {miss_hi:e})")]
    NoRootInBracket {
        lo: f64,
        hi: f64,
        miss_lo: f64,
        miss_hi: f64,
    },
    #[error("no convergence after {iterations} iterations; last bracket [{lo}, {hi}]")]
    NotConverged { iterations: usize, lo: f64, hi: f64 },
    #[error("solution exceeded the rescaling range at epsilon = {epsilon}")]
    Overflow { epsilon: f64 },
    #[error("integration failed at epsilon = {epsilon}")]
    Integration { epsilon: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub r_min: f64,
    /// Chosen from the asymptotic decay rate when None.
    pub r_max: Option<f64>,
    /// Caps the step size at (r_max − r_min)/steps.
    pub steps: usize,
    /// Outer classical turning point when None.
    pub match_point: Option<f64>,
    pub tol_energy: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            r_min: 1e-6,
            r_max: None,
            steps: 20_000,
            match_point: None,
            tol_energy: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outward,
    Inward,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub direction: Direction,
    /// In integration order.
    pub samples: Vec<Sample>,
    /// Cumulative rescaling passed 1e±300.
    pub overflow: bool,
}

impl Trajectory {
    /// Unit vector along the solution at the last sample.
    pub fn end_direction(&self) -> [f64; 2] {
        let y = self.samples.last().map(|s| s.y).unwrap_or([0.0; 2]);
        let n = y[0].hypot(y[1]);
        [y[0] / n, y[1] / n]
    }

    /// Sign changes of the upper component, ignoring samples below 1e-8 of its peak.
    pub fn node_count(&self) -> usize {
        let logs: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.y[0].abs().ln() + s.log_scale)
            .collect();
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = peak + 1e-8f64.ln();
        let mut last = 0.0;
        let mut nodes = 0;
        for (s, l) in self.samples.iter().zip(&logs) {
            if *l < floor {
                continue;
            }
            let sign = s.y[0].signum();
            if last != 0.0 && sign != last {
                nodes += 1;
            }
            last = sign;
        }
        nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub epsilon: f64,
    /// det(y_out, y_in)/(|y_out||y_in|) at the match point.
    pub miss_distance: f64,
    pub node_count: usize,
    pub normalizable: bool,
}

/// K(r) with y′ = K y, y = (f, g).
fn system_matrix(inst: &ProblemInstance, eps: f64, r: f64) -> [[f64; 2]; 2] {
    let p = &inst.potentials;
    let m = inst.params.mass;
    let a = inst.kappa() / r + inst.params.mu_n * p.electric(r);
    let (v, w) = (p.vector(r), p.scalar(r));
    [[a, -(m - eps - v + w)], [-(m + eps + v + w), -a]]
}

/// The same matrix with the 1/r terms dropped.
fn asymptotic_matrix(inst: &ProblemInstance, eps: f64, r: f64) -> [[f64; 2]; 2] {
    let p = &inst.potentials;
    let m = inst.params.mass;
    let a = inst.params.mu_n * p.electric(r);
    let (v, w) = (p.vector(r) - p.alpha / r, p.scalar(r) - p.beta / r);
    [[a, -(m - eps - v + w)], [-(m + eps + v + w), -a]]
}

fn decay_rate_squared(k: [[f64; 2]; 2]) -> f64 {
    k[0][0] * k[0][0] + k[0][1] * k[1][0]
}

/// Regular exponent θ at the origin: θ² = κ² − α² + β². The degenerate case θ = 0 is allowed.
pub fn indicial_exponent(inst: &ProblemInstance) -> Result<f64, OracleError> {
    let (k, a, b) = (inst.kappa(), inst.potentials.alpha, inst.potentials.beta);
    let t2 = k * k - a * a + b * b;
    if t2 < 0.0 {
        return Err(OracleError::Supercritical(t2));
    }
    Ok(t2.sqrt())
}

/// Frobenius start r^θ(v + r w) at `r`, where v spans the indicial kernel and
/// (θ + 1 − N) w = K₀ v with N the residue of K at the origin and K₀ its constant part.
fn outward_start(inst: &ProblemInstance, theta: f64, eps: f64, r: f64) -> [f64; 2] {
    let (k, a, b) = (inst.kappa(), inst.potentials.alpha, inst.potentials.beta);
    let v = if k > 0.0 { [k + theta, -(a + b)] } else { [a - b, theta - k] };
    let m = inst.params.mass;
    let g0 = inst.params.mu_n * inst.potentials.gamma_poly.first().copied().unwrap_or(0.0);
    let k0 = [[g0, eps - m], [-(m + eps), -g0]];
    let rhs = [k0[0][0] * v[0] + k0[0][1] * v[1], k0[1][0] * v[0] + k0[1][1] * v[1]];
    let s = theta + 1.0;
    // θ + 1 − N with N = [[κ, α − β], [−(α + β), −κ]]
    let mat = [[s - k, b - a], [a + b, s + k]];
    let det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0];
    let w = [
        (mat[1][1] * rhs[0] - mat[0][1] * rhs[1]) / det,
        (mat[0][0] * rhs[1] - mat[1][0] * rhs[0]) / det,
    ];
    [v[0] + r * w[0], v[1] + r * w[1]]
}

/// Eigenvector of K(r_max) for the eigenvalue −λ, and whether λ² > 0.
fn inward_start(k: [[f64; 2]; 2]) -> ([f64; 2], bool) {
    let (a, b, c) = (k[0][0], k[0][1], k[1][0]);
    let l2 = decay_rate_squared(k);
    let lam = l2.abs().sqrt();
    let v = if a >= 0.0 { [b, -(a + lam)] } else { [lam - a, -c] };
    if v[0] == 0.0 && v[1] == 0.0 {
        return ([1.0, 0.0], l2 > 0.0);
    }
    (v, l2 > 0.0)
}

/// Smallest r at which ∫λ dr over the current decaying region exceeds
/// [`DECAY_EXPONENT`], using the asymptotic decay rate; capped at [`R_MAX_CAP`].
pub fn auto_r_max(inst: &ProblemInstance, eps: f64) -> f64 {
    let dr = 1e-3;
    let mut acc = 0.0;
    let mut r = dr;
    while r < R_MAX_CAP {
        let l2 = decay_rate_squared(asymptotic_matrix(inst, eps, r));
        if l2 > 0.0 {
            acc += l2.sqrt() * dr;
        } else {
            acc = 0.0;
        }
        if acc > DECAY_EXPONENT {
            return r;
        }
        r += dr;
    }
    R_MAX_CAP
}

/// Outer classical turning point at `eps`, where the local decay rate λ² of the full
/// system last becomes positive; the minimum of λ² when there is none.
pub fn auto_match_point(inst: &ProblemInstance, eps: f64, r_min: f64, r_max: f64) -> f64 {
    let pts = 4000;
    let (l0, l1) = ((10.0 * r_min).ln(), (0.5 * r_max).ln());
    let grid = (0..=pts).map(|i| (l0 + (l1 - l0) * i as f64 / pts as f64).exp());
    let mut last_allowed = None;
    let mut argmin = (f64::INFINITY, (r_min * r_max).sqrt());
    for r in grid {
        let l2 = decay_rate_squared(system_matrix(inst, eps, r));
        if l2 <= 0.0 {
            last_allowed = Some(r);
        }
        if l2 < argmin.0 {
            argmin = (l2, r);
        }
    }
    last_allowed.unwrap_or(argmin.1)
}

/// Shooting setup with the cutoffs fixed, so that the miss distance is a continuous
/// function of ε over a bracket.
#[derive(Debug, Clone)]
pub struct Shooter<'a> {
    instance: &'a ProblemInstance,
    theta: f64,
    r_min: f64,
    r_max: f64,
    match_point: f64,
    ctl: StepControl,
}

impl<'a> Shooter<'a> {
    /// `eps_ref` selects the automatic outer cutoff.
    pub fn new(instance: &'a ProblemInstance, cfg: &ShootingConfig, eps_ref: f64) -> Result<Self, OracleError> {
        instance.validate()?;
        let theta = indicial_exponent(instance)?;
        let r_min = cfg.r_min;
        let r_max = cfg.r_max.unwrap_or_else(|| auto_r_max(instance, eps_ref));
        let match_point = cfg
            .match_point
            .unwrap_or_else(|| auto_match_point(instance, eps_ref, r_min, r_max));
        if !(r_min > 0.0 && r_min < match_point && match_point < r_max && r_max.is_finite()) {
            return Err(OracleError::Config(format!(
                "need 0 < r_min < match_point < r_max, got {r_min}, {match_point}, {r_max}"
            )));
        }
        if cfg.steps == 0 || cfg.tol_energy.is_nan() || cfg.tol_energy <= 0.0 {
            return Err(OracleError::Config("steps and tol_energy must be positive".into()));
        }
        let ctl = StepControl {
            rtol: RTOL,
            h_max: (r_max - r_min) / cfg.steps as f64,
            h_init: r_min * 1e-2,
            max_steps: 200 * cfg.steps + 1_000_000,
        };
        Ok(Shooter {
            instance,
            theta,
            r_min,
            r_max,
            match_point,
            ctl,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn match_point(&self) -> f64 {
        self.match_point
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn run(&self, eps: f64, direction: Direction) -> Result<(Trajectory, bool), OracleError> {
        let k = |r: f64| system_matrix(self.instance, eps, r);
        let (r0, y0, decaying, ctl) = match direction {
            Direction::Outward => {
                let v = outward_start(self.instance, self.theta, eps, self.r_min);
                (self.r_min, v, true, self.ctl)
            }
            Direction::Inward => {
                let (v, dec) = inward_start(k(self.r_max));
                let ctl = StepControl {
                    h_init: 1e-3 * (self.r_max - self.match_point),
                    ..self.ctl
                };
                (self.r_max, v, dec, ctl)
            }
        };
        let samples = integrator::integrate(k, r0, self.match_point, y0, ctl)
            .ok_or(OracleError::Integration { epsilon: eps })?;
        let overflow = samples
            .last()
            .is_some_and(|s| s.log_scale.abs() > OVERFLOW_LOG);
        Ok((
            Trajectory {
                direction,
                samples,
                overflow,
            },
            decaying,
        ))
    }

    pub fn integrate(&self, eps: f64, direction: Direction) -> Result<Trajectory, OracleError> {
        self.run(eps, direction).map(|(t, _)| t)
    }

    pub fn miss(&self, eps: f64) -> Result<f64, OracleError> {
        Ok(self.shoot(eps)?.miss_distance)
    }

    pub fn shoot(&self, eps: f64) -> Result<ShootingResult, OracleError> {
        let (out, _) = self.run(eps, Direction::Outward)?;
        let (inw, decaying) = self.run(eps, Direction::Inward)?;
        if out.overflow || inw.overflow {
            return Err(OracleError::Overflow { epsilon: eps });
        }
        let u = out.end_direction();
        let v = inw.end_direction();
        Ok(ShootingResult {
            epsilon: eps,
            miss_distance: u[0] * v[1] - u[1] * v[0],
            node_count: out.node_count() + inw.node_count(),
            normalizable: decaying && self.theta > -0.5,
        })
    }

    /// Brent's method on the miss distance.
    pub fn solve(&self, lo: f64, hi: f64, tol: f64) -> Result<ShootingResult, OracleError> {
        let (mut a, mut b) = (lo, hi);
        let (mut fa, mut fb) = (self.miss(a)?, self.miss(b)?);
        if fa == 0.0 {
            return self.shoot(a);
        }
        if fb == 0.0 {
            return self.shoot(b);
        }
        if fa.signum() == fb.signum() {
            return Err(OracleError::NoRootInBracket {
                lo,
                hi,
                miss_lo: fa,
                miss_hi: fb,
            });
        }
        let (mut c, mut fc) = (a, fa);
        let mut d = b - a;
        let mut e = d;
        for _ in 0..MAX_ITER {
            if fb.signum() == fc.signum() {
                c = a;
                fc = fa;
                d = b - a;
                e = d;
            }
            if fc.abs() < fb.abs() {
                a = b;
                b = c;
                c = a;
                fa = fb;
                fb = fc;
                fc = fa;
            }
            let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
            let xm = 0.5 * (c - b);
            if xm.abs() <= tol1 || fb == 0.0 {
                return self.shoot(b);
            }
            if e.abs() >= tol1 && fa.abs() > fb.abs() {
                let s = fb / fa;
                let (mut p, mut q);
                if a == c {
                    p = 2.0 * xm * s;
                    q = 1.0 - s;
                } else {
                    let qq = fa / fc;
                    let rr = fb / fc;
                    p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                    q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
                }
                if p > 0.0 {
                    q = -q;
                }
                p = p.abs();
                if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                    e = d;
                    d = p / q;
                } else {
                    d = xm;
                    e = d;
                }
            } else {
                d = xm;
                e = d;
            }
            a = b;
            fa = fb;
            b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
            fb = self.miss(b)?;
        }
        Err(OracleError::NotConverged {
            iterations: MAX_ITER,
            lo: b.min(c),
            hi: b.max(c),
        })
    }
}

pub fn integrate(
    instance: &ProblemInstance,
    epsilon: f64,
    cfg: &ShootingConfig,
    direction: Direction,
) -> Result<Trajectory, OracleError> {
    Shooter::new(instance, cfg, epsilon)?.integrate(epsilon, direction)
}

pub fn miss_distance(instance: &ProblemInstance, epsilon: f64, cfg: &ShootingConfig) -> Result<f64, OracleError> {
    Shooter::new(instance, cfg, epsilon)?.miss(epsilon)
}

pub fn find_eigenvalue(
    instance: &ProblemInstance,
    bracket: (f64, f64),
    cfg: &ShootingConfig,
) -> Result<ShootingResult, OracleError> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    Shooter::new(instance, cfg, 0.5 * (lo + hi))?.solve(lo, hi, cfg.tol_energy)
}

/// Eigenvalue nearest to `guess` inside a window of half-width 2e-3·max(1, |guess|).
pub fn confirm(instance: &ProblemInstance, guess: f64, cfg: &ShootingConfig) -> Result<ShootingResult, OracleError> {
    let w = 2e-3 * guess.abs().max(1.0);
    let shooter = Shooter::new(instance, cfg, guess)?;
    let pts = 16;
    let grid: Vec<f64> = (0..=pts)
        // offset so that the guess itself is never a bracket end
        .map(|i| guess - w + 2.0 * w * (i as f64 - 0.37) / pts as f64)
        .collect();
    let miss: Vec<f64> = grid
        .par_iter()
        .map(|&e| shooter.miss(e))
        .collect::<Result<_, _>>()?;
    let best = (0..pts)
        .filter(|&i| miss[i] == 0.0 || miss[i].signum() != miss[i + 1].signum())
        .min_by(|&i, &j| {
            let di = (0.5 * (grid[i] + grid[i + 1]) - guess).abs();
            let dj = (0.5 * (grid[j] + grid[j + 1]) - guess).abs();
            di.total_cmp(&dj)
        });
    match best {
        Some(i) => shooter.solve(grid[i], grid[i + 1], cfg.tol_energy),
        None => Err(OracleError::NoRootInBracket {
            lo: grid[0],
            hi: grid[pts],
            miss_lo: miss[0],
            miss_hi: miss[pts],
        }),
    }
}

/// All sign changes of the miss distance on a uniform grid of `points` energies.
/// The outer cutoff is fixed per grid cell.
pub fn scan_eigenvalues(
    instance: &ProblemInstance,
    range: (f64, f64),
    points: usize,
    cfg: &ShootingConfig,
) -> Result<Vec<ShootingResult>, OracleError> {
    if points < 2 || range.0.is_nan() || range.1.is_nan() || range.0 >= range.1 {
        return Err(OracleError::Config("scan needs lo < hi and at least two points".into()));
    }
    let step = (range.1 - range.0) / (points - 1) as f64;
    let found: Vec<Option<ShootingResult>> = (0..points - 1)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = (range.0 + i as f64 * step, range.0 + (i + 1) as f64 * step);
            let shooter = Shooter::new(instance, cfg, 0.5 * (lo + hi))?;
            let (a, b) = (shooter.miss(lo)?, shooter.miss(hi)?);
            if (a.signum() == b.signum() && a != 0.0) || (b == 0.0 && a != 0.0) {
                return Ok(None);
            }
            shooter.solve(lo, hi, cfg.tol_energy).map(Some)
        })
        .collect::<Result<_, OracleError>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Geometry, PhysicalParams, PotentialSpec};

    fn oscillator(kappa: f64) -> ProblemInstance {
        ProblemInstance::new(
            PhysicalParams::new(1.0, kappa, 1.0).unwrap(),
            PotentialSpec::new(0.0, 0.0, vec![], vec![], vec![0.0, -1.0]),
            Geometry::ThreeD,
        )
        .unwrap()
    }

    fn coulomb() -> ProblemInstance {
        ProblemInstance::new(
            PhysicalParams::new(1.0, -1.0, 0.0).unwrap(),
            PotentialSpec::new(0.5, 0.0, vec![], vec![], vec![]),
            Geometry::ThreeD,
        )
        .unwrap()
    }

    #[test]
    fn oscillator_scan_finds_both_signs() {
        let found = scan_eigenvalues(&oscillator(1.0), (-4.0, 4.0), 81, &ShootingConfig::default()).unwrap();
        let expect = [-13f64.sqrt(), -3.0, -5f64.sqrt(), -1.0, 5f64.sqrt(), 3.0, 13f64.sqrt()];
        assert_eq!(found.len(), expect.len());
        for (f, e) in found.iter().zip(expect) {
            assert!((f.epsilon - e).abs() < 1e-9, "{} vs {e}", f.epsilon);
            assert_eq!(f.node_count, ((e * e - 1.0) / 4.0).round() as usize);
        }
    }

    #[test]
    fn oscillator_ladder() {
        let inst = oscillator(1.0);
        let cfg = ShootingConfig::default();
        // the lowest level sits at −M only
        for (n, e) in [-1.0, 5f64.sqrt(), 3.0, 13f64.sqrt()].into_iter().enumerate() {
            let res = confirm(&inst, e + 1e-4, &cfg).unwrap();
            assert_eq!(res.node_count, n);
            assert!((res.epsilon - e).abs() < 1e-8, "n={n}: {}", res.epsilon);
            assert!(res.normalizable);
        }
    }

    #[test]
    fn oscillator_miss_vanishes_at_level() {
        let inst = oscillator(1.0);
        let m = miss_distance(&inst, 5f64.sqrt(), &ShootingConfig::default()).unwrap();
        assert!(m.abs() < 1e-8, "{m}");
    }

    #[test]
    fn coulomb_level() {
        let n = 1.0 + 0.75f64.sqrt();
        let e = n / (n * n + 0.25f64).sqrt();
        let res = confirm(&coulomb(), e, &ShootingConfig::default()).unwrap();
        assert!((res.epsilon - e).abs() < 1e-8, "{}", res.epsilon);
    }

    #[test]
    fn free_solution_grows() {
        let inst = ProblemInstance::new(
            PhysicalParams::new(1.0, 1.0, 0.0).unwrap(),
            PotentialSpec::new(0.0, 0.0, vec![], vec![], vec![]),
            Geometry::ThreeD,
        )
        .unwrap();
        let cfg = ShootingConfig {
            r_max: Some(20.0),
            match_point: Some(10.0),
            ..Default::default()
        };
        let tr = integrate(&inst, 0.6, &cfg, Direction::Outward).unwrap();
        let s = tr.samples.last().unwrap();
        let log_norm = s.y[0].hypot(s.y[1]).ln() + s.log_scale;
        // decay rate √(1 − 0.36) = 0.8; growth from r ≈ 1 to 10 is e^{7.2} up to powers of r
        assert!(log_norm > 0.8 * 9.0 - 3.0);
    }

    #[test]
    fn supercritical_is_rejected() {
        let inst = ProblemInstance::new(
            PhysicalParams::new(1.0, -1.0, 0.0).unwrap(),
            PotentialSpec::new(1.5, 0.0, vec![], vec![], vec![]),
            Geometry::ThreeD,
        )
        .unwrap();
        assert!(matches!(
            miss_distance(&inst, 0.5, &ShootingConfig::default()),
            Err(OracleError::Supercritical(_))
        ));
    }

    #[test]
    fn empty_bracket_is_reported() {
        let inst = oscillator(1.0);
        let r = find_eigenvalue(&inst, (1.5, 2.0), &ShootingConfig::default());
        assert!(matches!(r, Err(OracleError::NoRootInBracket { .. })));
    }

    #[test]
    fn auto_cutoff_for_oscillator() {
        let r = auto_r_max(&oscillator(1.0), 1.0);
        // ∫ r dr = 40
        assert!((r - 80f64.sqrt()).abs() < 0.01, "{r}");
    }

    #[test]
    fn bad_config() {
        let cfg = ShootingConfig {
            match_point: Some(1e3),
            ..Default::default()
        };
        assert!(matches!(
            Shooter::new(&oscillator(1.0), &cfg, 1.0),
            Err(OracleError::Config(_))
        ));
    }
}
