use kdv_core::boundary_integral::{wbdr_apply, wbdr_apply_with_report, wbdr_linearity_check, QuadConfig};
use kdv_core::grid::{make_grid, Field, Grid1D, TimeGrid};
use kdv_core::reference_solver::solve_linear;
use kdv_core::BoundaryTriple;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
    let den: f64 = b.iter().map(|q| q * q).sum();
    (num / den).sqrt()
}

fn bump_case(n: usize, m: usize) -> (Grid1D, TimeGrid, BoundaryTriple) {
    let g = make_grid(1.0, n).unwrap();
    let tg = TimeGrid::new(1.0, m).unwrap();
    let h = BoundaryTriple::from_fns(tg, |t| (PI * t).sin().powi(2), |_| 0.0, |_| 0.0);
    (g, tg, h)
}

#[test]
fn agrees_with_finite_differences() {
    let (g, tg, h) = bump_case(257, 512);
    let cfg = QuadConfig::for_time_grid(&tg);
    let (spectral, report) = wbdr_apply_with_report(&h, &g, &tg, &cfg).unwrap();
    let fd = solve_linear(&Field::zeros(g), None, &h, &tg).unwrap();
    let err = spectral.relative_l2_distance(&fd).unwrap();
    assert!(err < 0.02, "relative error {err}");
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert_eq!(report.singular_rhos.len(), 1);
}

#[test]
fn traces_reproduce_data() {
    let (g, tg, h) = bump_case(65, 256);
    let traj = wbdr_apply(&h, &g, &tg, &QuadConfig::for_time_grid(&tg)).unwrap();
    let tr = traj.traces();
    assert!(relative_l2(&tr.u_left, h.h1()) < 0.05);
    // the other two data vanish; measure against the scale of h1
    let scale: f64 = h.h1().iter().map(|v| v * v).sum::<f64>().sqrt();
    for trace in [&tr.ux_right, &tr.uxx_right] {
        let norm: f64 = trace.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 0.05 * scale);
    }
}

#[test]
fn traces_reproduce_each_channel() {
    let g = make_grid(1.0, 33).unwrap();
    let tg = TimeGrid::new(1.0, 256).unwrap();
    let cfg = QuadConfig::for_time_grid(&tg);
    let bump = |t: f64| (PI * t).sin().powi(2);
    for channel in 0..3 {
        let fs: Vec<Box<dyn Fn(f64) -> f64>> = (0..3)
            .map(|c| -> Box<dyn Fn(f64) -> f64> {
                if c == channel { Box::new(bump) } else { Box::new(|_| 0.0) }
            })
            .collect();
        let h = BoundaryTriple::from_fns(tg, &fs[0], &fs[1], &fs[2]);
        let traj = wbdr_apply(&h, &g, &tg, &cfg).unwrap();
        let tr = traj.traces();
        let got = [&tr.u_left, &tr.ux_right, &tr.uxx_right][channel];
        let err = relative_l2(got, h.channels()[channel]);
        assert!(err < 0.05, "channel {channel}: {err}");
    }
}

#[test]
fn superposition() {
    let g = make_grid(1.0, 33).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let cfg = QuadConfig::for_time_grid(&tg);
    let h = BoundaryTriple::from_fns(tg, |t| (PI * t).sin().powi(2), |t| t * t, |_| 0.0);
    let zero = BoundaryTriple::zeros(tg);
    assert!(wbdr_linearity_check(&h, &zero, 1.0, 0.0, &g, &tg, &cfg).unwrap() < 1e-12);
    assert_eq!(wbdr_linearity_check(&h, &h, 0.0, 0.0, &g, &tg, &cfg).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let other = BoundaryTriple::from_fns(
            tg,
            |t| c[0] * t * t * (3.0 - 2.0 * t),
            |t| c[1] * (2.0 * PI * t).sin(),
            |t| c[2] * t.powi(3),
        );
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let dev = wbdr_linearity_check(&h, &other, a, b, &g, &tg, &cfg).unwrap();
        assert!(dev <= 1e-8, "{dev}");
    }
}
