use dirac_qes::exact::{coulomb_spectrum, extended_oscillator_spectrum, oscillator_spectrum, sommerfeld_energy};
use dirac_qes::model::PhysicalParams;
use dirac_qes::odeoracle::{confirm, find_eigenvalue, scan_eigenvalues, OracleError, ShootingConfig};
use dirac_qes::qes::{
    extended_build, extended_solve, planar_build, planar_n0_closed_form, planar_solve, BranchSelection,
    PlanarSystem,
};

fn cfg() -> ShootingConfig {
    ShootingConfig::default()
}

#[test]
fn oscillator_states_are_confirmed_with_matching_nodes() {
    let res = oscillator_spectrum(&PhysicalParams::new(1.0, 1.0, 1.0).unwrap(), 4).unwrap();
    for (n, s) in res.states() {
        let hit = confirm(&res.instance, s.epsilon, &cfg()).unwrap();
        assert!((hit.epsilon - s.epsilon).abs() < 1e-9, "n = {n}");
        assert_eq!(hit.node_count, n);
        assert!(hit.normalizable);
    }
}

#[test]
fn oscillator_scaling_covariance() {
    for n in 1..4usize {
        let mut k = Vec::new();
        for mu in [0.5, 2.0] {
            let res = oscillator_spectrum(&PhysicalParams::new(1.0, 2.0, mu).unwrap(), n).unwrap();
            let e = res.levels[n].epsilon_plus;
            let hit = confirm(&res.instance, e, &cfg()).unwrap();
            k.push((hit.epsilon * hit.epsilon - 1.0).sqrt());
        }
        assert!((k[1] / k[0] - 2.0).abs() < 1e-8, "n = {n}: {k:?}");
    }
}

#[test]
fn negative_kappa_oscillator_is_confirmed() {
    let res = oscillator_spectrum(&PhysicalParams::new(1.0, -2.0, 1.0).unwrap(), 2).unwrap();
    assert!(res.states().count() > 0);
    for (n, s) in res.states() {
        let hit = confirm(&res.instance, s.epsilon, &cfg()).unwrap();
        assert!((hit.epsilon - s.epsilon).abs() < 1e-9, "n = {n}");
    }
}

#[test]
fn coulomb_ladder_is_confirmed() {
    let p = PhysicalParams::new(1.0, -1.0, 0.0).unwrap();
    let res = coulomb_spectrum(&p, 0.5, 0.0, 3).unwrap();
    for (n, s) in res.states() {
        let closed = sommerfeld_energy(1.0, -1.0, 0.5, n);
        let hit = confirm(&res.instance, closed, &cfg()).unwrap();
        assert!((hit.epsilon - closed).abs() < 1e-6, "n = {n}: {}", hit.epsilon);
        assert!((s.epsilon - closed).abs() < 1e-12);
        assert_eq!(hit.node_count, n);
    }
}

#[test]
fn extended_oscillator_states_are_confirmed() {
    let ext = extended_oscillator_spectrum(1.0, 1.0, 4.0, 3.0, 3).unwrap();
    for (n, s) in ext.spectrum.states() {
        let hit = confirm(&ext.spectrum.instance, s.epsilon, &cfg()).unwrap();
        assert!((hit.epsilon - s.epsilon).abs() < 1e-9, "n = {n}");
        let e2 = 25.0 / 9.0 + 20.0 * n as f64;
        assert!((s.epsilon * s.epsilon - e2).abs() < 1e-9);
    }
}

#[test]
fn extended_oscillator_has_no_level_between_ladder_steps() {
    let ext = extended_oscillator_spectrum(1.0, 1.0, 4.0, 3.0, 1).unwrap();
    let e = (25.0f64 / 9.0 + 10.0).sqrt();
    let found = scan_eigenvalues(&ext.spectrum.instance, (e - 0.5, e + 0.5), 21, &cfg()).unwrap();
    assert!(found.is_empty(), "{found:?}");
}

#[test]
fn planar_ground_state_is_confirmed() {
    let field = 1.0;
    let sys = planar_build(0, -0.5, 0.0).unwrap();
    for sol in planar_n0_closed_form(-0.5, 0.0).unwrap() {
        let sol = sol.unwrap();
        let inst = sys.instance(sol.fixed_coupling, field).unwrap();
        let e = PlanarSystem::physical_energy(sol.epsilon, field);
        let hit = confirm(&inst, e, &cfg()).unwrap();
        assert!((hit.epsilon.abs() - 0.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(hit.node_count, 0);
    }
}

#[test]
fn planar_first_excited_roots_are_confirmed() {
    let field = 2.0;
    let sys = planar_build(1, 0.5, 0.5).unwrap();
    let roots = planar_solve(&sys, (-0.5, 0.5), 2001).unwrap();
    assert_eq!(roots.len(), 4);
    for sol in roots {
        let inst = sys.instance(sol.fixed_coupling, field).unwrap();
        let e = PlanarSystem::physical_energy(sol.epsilon, field);
        let hit = confirm(&inst, e, &cfg()).unwrap();
        assert!((hit.epsilon - e).abs() < 1e-8, "alpha = {}", sol.fixed_coupling);
        assert!(hit.normalizable);
    }
}

#[test]
fn extended_qes_roots_are_confirmed() {
    let sys = extended_build(1, 1.0, 1.0, 0.5, 4.0, 3.0).unwrap();
    let roots = extended_solve(&sys, (-20.0, 20.0), 4001, BranchSelection::Both).unwrap();
    assert_eq!(roots.len(), 2);
    for sol in roots {
        let inst = sys.instance(sol.fixed_coupling).unwrap();
        let hit = confirm(&inst, sol.epsilon, &cfg()).unwrap();
        assert!((hit.epsilon - sol.epsilon).abs() < 1e-8, "gamma0 = {}", sol.fixed_coupling);
    }
}

#[test]
fn grid_refinement_is_converged() {
    let res = oscillator_spectrum(&PhysicalParams::new(1.0, 1.0, 1.0).unwrap(), 3).unwrap();
    let coul = coulomb_spectrum(&PhysicalParams::new(1.0, -1.0, 0.0).unwrap(), 0.5, 0.0, 2).unwrap();
    for (inst, e) in [
        (&res.instance, 13f64.sqrt()),
        (&coul.instance, sommerfeld_energy(1.0, -1.0, 0.5, 2)),
    ] {
        let coarse = confirm(inst, e, &cfg()).unwrap();
        let fine = confirm(inst, e, &ShootingConfig { steps: 40_000, ..cfg() }).unwrap();
        assert!((coarse.epsilon - fine.epsilon).abs() < 1e-8);
    }
}

#[test]
fn bracket_without_level_is_an_error() {
    let res = oscillator_spectrum(&PhysicalParams::new(1.0, 1.0, 1.0).unwrap(), 1).unwrap();
    let err = find_eigenvalue(&res.instance, (0.5, 1.5), &cfg()).unwrap_err();
    assert!(matches!(err, OracleError::NoRootInBracket { .. }));
}
