use kdv_core::datasets::{random_compatible_data, shaped_data, InitialShape, SignalShape};
use kdv_core::grid::{make_grid, Field, TimeGrid};
use kdv_core::picard::{
    estimate_existence_time, forcing_exponent, picard_solve, DataShape, DuhamelMap, ExistenceProbe,
};
use kdv_core::reference_solver::solve_nonlinear_direct;
use kdv_core::BoundaryTriple;
use std::f64::consts::PI;

#[test]
fn small_data_agree_with_the_direct_solver() {
    let g = make_grid(1.0, 65).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    for seed in 0..10 {
        let (phi, h) = random_compatible_data(seed, g, tg, 0.1).unwrap();
        let (picard, diag) = picard_solve(&phi, &h, &tg, 1e-10, 50).unwrap();
        assert!(diag.converged);
        assert!(diag.terminal_ratio() < 0.9);
        let direct = solve_nonlinear_direct(&phi, &h, &tg).unwrap();
        let err = picard.relative_l2_distance(&direct).unwrap();
        assert!(err < 0.02, "seed {seed}: {err}");
    }
}

#[test]
fn returned_trajectory_is_a_fixed_point() {
    let g = make_grid(1.0, 65).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let tol = 1e-9;
    let (phi, h) = random_compatible_data(3, g, tg, 0.1).unwrap();
    let (v, _) = picard_solve(&phi, &h, &tg, tol, 50).unwrap();
    let again = DuhamelMap::new(&phi, &h, &tg).unwrap().apply(&v).unwrap();
    assert!(again.combine(1.0, &v, -1.0).unwrap().sup_l2() <= 2.0 * tol);
}

#[test]
fn contraction_estimate_grows_with_amplitude() {
    let g = make_grid(1.0, 65).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    for seed in 0..3 {
        let (phi, h) = random_compatible_data(seed, g, tg, 0.1).unwrap();
        let estimates: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&a| {
                picard_solve(&phi.scaled(a), &h.scaled(a), &tg, 1e-10, 80)
                    .unwrap()
                    .1
                    .contraction_estimate()
            })
            .collect();
        assert!(estimates.windows(2).all(|w| w[0] <= w[1]), "{estimates:?}");
    }
}

#[test]
fn large_data_are_not_contractive() {
    let g = make_grid(1.0, 65).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let (phi, h) = random_compatible_data(0, g, tg, 0.1).unwrap();
    let err = picard_solve(&phi.scaled(5000.0), &h.scaled(5000.0), &tg, 1e-10, 50).unwrap_err();
    assert_eq!(err.name(), "non-contractive");
}

fn late_pulse(t: f64) -> [f64; 3] {
    [0.0, (PI * t / 4.0).sin().powi(2), 0.0]
}

#[test]
fn existence_time_shrinks_for_large_data() {
    let g = make_grid(1.0, 65).unwrap();
    let shape = DataShape {
        phi: InitialShape::Bump.sample(g),
        signals: &late_pulse,
    };
    let probe = ExistenceProbe::default();
    let table = estimate_existence_time(&[0.0, 5.0, 20.0, 80.0, 320.0], &shape, &probe).unwrap();
    assert_eq!(table[0].horizon, probe.ceiling);
    assert!(table[0].at_ceiling);
    assert!(table.windows(2).all(|w| w[1].horizon <= w[0].horizon), "{table:?}");
    assert!(table[4].horizon < 0.5 * probe.ceiling, "{table:?}");
}

#[test]
fn existence_time_rejects_unsorted_amplitudes() {
    let g = make_grid(1.0, 17).unwrap();
    let shape = DataShape {
        phi: Field::zeros(g),
        signals: &late_pulse,
    };
    assert!(estimate_existence_time(&[1.0, 0.5], &shape, &ExistenceProbe::default()).is_err());
}

#[test]
fn forcing_estimate_exponent_is_positive() {
    let g = make_grid(1.0, 129).unwrap();
    let tg = TimeGrid::new(1.0, 1024).unwrap();
    let mut data: Vec<(Field, BoundaryTriple)> = (0..3)
        .map(|c| {
            let mut s = [SignalShape::Zero; 3];
            s[c] = SignalShape::SinSquared;
            shaped_data(g, tg, InitialShape::Zero, s, 0.1)
        })
        .collect();
    data.push(random_compatible_data(1, g, tg, 0.1).unwrap());
    let solutions: Vec<_> = data
        .iter()
        .map(|(phi, h)| solve_nonlinear_direct(phi, h, &tg).unwrap())
        .collect();
    let (curve, slope) = forcing_exponent(&solutions, &[1.0, 0.5, 0.25, 0.125]).unwrap();
    assert!(curve.iter().all(|c| c.is_finite() && *c > 0.0));
    assert!((0.2..=0.6).contains(&slope), "{curve:?} slope {slope}");
}
