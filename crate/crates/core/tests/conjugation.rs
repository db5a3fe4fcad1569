mod common;

use common::{conjugation_gap, random_instance, random_poly, random_transform};
use dirac_qes::polyalg::{GaugeTransform, PolySpinor, Premultiplier, RadialOperator};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #[test]
    fn conjugated_operator_matches_pointwise(seed in any::<u64>(), eps in -3.0..3.0f64, r in 0.2..2.5f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let g = random_transform(&mut rng);
        let phi = PolySpinor::new(random_poly(&mut rng, 4), random_poly(&mut rng, 4));
        let op = RadialOperator::dirac(&inst, eps);
        let gap = conjugation_gap(&op, &g, &phi, r);
        prop_assert!(gap < 1e-12, "gap {gap:e}");
    }

    #[test]
    fn inverse_transform_restores_operator(seed in any::<u64>(), eps in -3.0..3.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let g = GaugeTransform::identity()
            .power(1.5, 0.5)
            .exponential(0.0, 1.0)
            .shear(0.3)
            .premultiply(Premultiplier::R);
        let op = RadialOperator::dirac(&inst, eps);
        let back = g.inverse().unwrap().conjugate(&g.conjugate(&op).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&op).unwrap() < 1e-12 * op.max_abs().max(1.0));
    }
}

#[test]
fn squared_variable_keeps_pointwise_identity() {
    use dirac_qes::model::{preset, Preset};
    let params = [("M", 1.0), ("kappa", 2.0), ("mu_n", 0.7)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let inst = preset(Preset::DiracOscillator, &params).unwrap();
    let g = GaugeTransform::identity()
        .power(2.0, 1.0)
        .exponential(0.0, 0.7)
        .shear(0.4)
        .premultiply(Premultiplier::R)
        .square_variable();
    let mut rng = StdRng::seed_from_u64(7);
    let phi = PolySpinor::new(random_poly(&mut rng, 3), random_poly(&mut rng, 3));
    for r in [0.3, 0.9, 1.7] {
        let gap = conjugation_gap(&RadialOperator::dirac(&inst, 1.3), &g, &phi, r);
        assert!(gap < 1e-12, "r = {r}: {gap:e}");
    }
}
