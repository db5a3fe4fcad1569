#![allow(dead_code)]

use dirac_qes::model::{Geometry, PhysicalParams, PotentialSpec, ProblemInstance};
use dirac_qes::polyalg::{GaugeTransform, Poly, PolySpinor, Premultiplier, RadialOperator, Variable};
use nalgebra::Matrix2;
use rand::Rng;

/// |conj(H)φ − A·H(Tφ)| at r, relative to the size of the terms on the right.
pub fn conjugation_gap(op: &RadialOperator, g: &GaugeTransform, phi: &PolySpinor, r: f64) -> f64 {
    let conj = g.conjugate(op).expect("conjugation");
    let (t, dphi) = match g.target_variable().unwrap() {
        Variable::R => (r, [phi.upper.derivative().eval(r), phi.lower.derivative().eval(r)]),
        Variable::X => {
            let x = r * r;
            (x, [phi.upper.derivative().eval(x), phi.lower.derivative().eval(x)])
        }
    };
    let lhs = conj.eval_at(t, phi.eval(t), dphi).unwrap();
    let (v, dv) = g.reconstruct(phi, r).unwrap();
    let h0 = op.eval_at(r, v, [0.0; 2]).unwrap();
    let h1 = op.eval_at(r, [0.0; 2], dv).unwrap();
    let a = g.equation_factor(r);
    let h = nalgebra::Vector2::new(h0[0] + h1[0], h0[1] + h1[1]);
    let rhs = a * h;
    let scale = a.norm() * (h0[0].hypot(h0[1]) + h1[0].hypot(h1[1]));
    (lhs[0] - rhs[0]).hypot(lhs[1] - rhs[1]) / scale.max(f64::MIN_POSITIVE)
}

pub fn random_poly<R: Rng>(rng: &mut R, max_deg: usize) -> Poly {
    let d = rng.random_range(0..=max_deg);
    Poly::new((0..=d).map(|_| rng.random_range(-1.0..1.0)).collect())
}

pub fn random_instance<R: Rng>(rng: &mut R) -> ProblemInstance {
    let kappa = *[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].get(rng.random_range(0..6)).unwrap();
    let s = rng.random_range(0..3);
    let mut coeffs = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (ap, bp, gp) = (coeffs(s), coeffs(s), coeffs(s + 1));
    ProblemInstance::new(
        PhysicalParams::new(rng.random_range(0.1..2.0), kappa, rng.random_range(-1.5..1.5)).unwrap(),
        PotentialSpec::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            ap,
            bp,
            gp,
        ),
        Geometry::ThreeD,
    )
    .unwrap()
}

fn random_invertible<R: Rng>(rng: &mut R) -> Matrix2<f64> {
    loop {
        let m = Matrix2::<f64>::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if m.determinant().abs() > 0.2 {
            return m;
        }
    }
}

/// Composite of rotation, integer-offset power, exponential, constant mixing and an
/// optional premultiplier, all in the variable r.
pub fn random_transform<R: Rng>(rng: &mut R) -> GaugeTransform {
    let mut g = GaugeTransform::identity();
    if rng.random_bool(0.5) {
        g = g.rotation(rng.random_range(-1.5..1.5));
    }
    let theta = rng.random_range(0.0..3.0);
    let k = rng.random_range(-1..=1) as f64;
    g = g
        .power(theta, theta + k)
        .exponential(rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0));
    if rng.random_bool(0.5) {
        g = g.right(random_invertible(rng));
    }
    if rng.random_bool(0.5) {
        g = g.left(random_invertible(rng));
    }
    // an offset between the two powers leaves r^-2 terms unless the equations are multiplied by r
    if k != 0.0 || rng.random_bool(0.5) {
        g = g.premultiply(Premultiplier::R);
    }
    g
}
