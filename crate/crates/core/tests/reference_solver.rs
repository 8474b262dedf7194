use kdv_core::fit::refinement_order;
use kdv_core::grid::{l2_norm, make_grid, Field, TimeGrid, Trajectory};
use kdv_core::reference_solver::{
    energy_report, h1_time_integral, semigroup_apply, solve_linear, EnergyIdentity,
};
use kdv_core::BoundaryTriple;

/// Exact solution `e^{-t} cos x` with its forcing and boundary data.
fn cosine_case(n: usize, m: usize) -> (Field, Trajectory, BoundaryTriple, TimeGrid, Trajectory) {
    let g = make_grid(1.0, n).unwrap();
    let tg = TimeGrid::new(1.0, m).unwrap();
    let exact = Trajectory::zeros(g, tg)
        .map_frames(|x, t, _| (-t).exp() * x.cos())
        .unwrap();
    let forcing = exact.map_frames(|x, t, _| -(-t).exp() * x.cos()).unwrap();
    let h = BoundaryTriple::from_fns(
        tg,
        |t| (-t).exp(),
        |t| -(-t).exp() * 1f64.sin(),
        |t| -(-t).exp() * 1f64.cos(),
    );
    (exact.field(0), forcing, h, tg, exact)
}

fn g_hom(x: f64) -> f64 {
    let (s1, c1) = (1f64.sin(), 1f64.cos());
    x.sin() - (c1 + s1) * x + 0.5 * s1 * x * x
}

/// `e^{-t} g(x)` with `g(0) = g'(1) = g''(1) = 0`.
fn homogeneous_case(n: usize, m: usize) -> (Field, Trajectory, TimeGrid) {
    let g = make_grid(1.0, n).unwrap();
    let tg = TimeGrid::new(1.0, m).unwrap();
    let (s1, c1) = (1f64.sin(), 1f64.cos());
    let forcing = Trajectory::zeros(g, tg)
        .map_frames(|x, t, _| {
            let dg = x.cos() - (c1 + s1) + s1 * x;
            let d3g = -x.cos();
            (-t).exp() * (-g_hom(x) + dg + d3g)
        })
        .unwrap();
    (Field::from_fn(g, g_hom), forcing, tg)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let errs: Vec<f64> = [(33, 32), (65, 64), (129, 128)]
        .iter()
        .map(|&(n, m)| {
            let (phi, f, h, tg, exact) = cosine_case(n, m);
            let traj = solve_linear(&phi, Some(&f), &h, &tg).unwrap();
            traj.relative_l2_distance(&exact).unwrap()
        })
        .collect();
    let ratio = errs[1] / errs[2];
    assert!((3.0..=5.5).contains(&ratio), "errors {errs:?}");
}

#[test]
fn linear_energy_identity_converges() {
    let res: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let (phi, f, h, tg, _) = cosine_case(n, n - 1);
            let traj = solve_linear(&phi, Some(&f), &h, &tg).unwrap();
            energy_report(&traj, Some(&f), EnergyIdentity::Linear)
                .unwrap()
                .max_residual
        })
        .collect();
    let p = refinement_order(&res);
    assert!(p >= 1.8, "residuals {res:?} order {p}");
}

#[test]
fn homogeneous_identities_converge() {
    for identity in [EnergyIdentity::Linear, EnergyIdentity::Weighted] {
        let res: Vec<f64> = [65, 129, 257]
            .iter()
            .map(|&n| {
                let (phi, f, tg) = homogeneous_case(n, n - 1);
                let h = BoundaryTriple::zeros(tg);
                let traj = solve_linear(&phi, Some(&f), &h, &tg).unwrap();
                energy_report(&traj, Some(&f), identity).unwrap().max_residual
            })
            .collect();
        let p = refinement_order(&res);
        assert!(p >= 1.8, "{identity:?}: residuals {res:?} order {p}");
    }
}

#[test]
fn semigroup_property() {
    let g = make_grid(1.0, 129).unwrap();
    let tg = TimeGrid::new(1.0, 128).unwrap();
    let phi = Field::from_fn(g, |x| (std::f64::consts::PI * x).sin().powi(2));
    let direct = semigroup_apply(&phi, 0.75, &tg).unwrap();
    let first = semigroup_apply(&phi, 0.25, &tg).unwrap();
    let two_step = semigroup_apply(&first, 0.5, &tg).unwrap();
    let diff = direct.combine(1.0, &two_step, -1.0).unwrap();
    let h = g.dx().powi(2) + tg.dt().powi(2);
    assert!(l2_norm(&diff) <= 5.0 * h * l2_norm(&phi), "{}", l2_norm(&diff));
    assert!(l2_norm(&direct) <= l2_norm(&phi) * (1.0 + tg.dt().powi(2)));
}

/// `sin²(πx)(1-x)²`: vanishes at 0 and to fourth order at 1.
fn compatible_bump(x: f64) -> f64 {
    (std::f64::consts::PI * x).sin().powi(2) * (1.0 - x).powi(2)
}

#[test]
fn smoothing_integral_is_refinement_stable() {
    let vals: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let g = make_grid(1.0, n).unwrap();
            // the boundary layer is stiff; keep dt well below dx
            let tg = TimeGrid::new(1.0, 8 * (n - 1)).unwrap();
            let phi = Field::from_fn(g, compatible_bump);
            let traj = solve_linear(&phi, None, &BoundaryTriple::zeros(tg), &tg).unwrap();
            h1_time_integral(&traj).unwrap()
        })
        .collect();
    for w in vals.windows(2) {
        let r = w[1] / w[0];
        assert!((0.8..=1.25).contains(&r), "{vals:?}");
    }
}

#[test]
fn traces_reproduce_boundary_data() {
    let (phi, f, h, tg, _) = cosine_case(65, 64);
    let traj = solve_linear(&phi, Some(&f), &h, &tg).unwrap();
    let tr = traj.traces();
    // frame 0 is the initial datum itself
    for k in 1..tg.len() {
        assert_eq!(tr.u_left[k], h.h1()[k]);
        assert!((tr.ux_right[k] - h.h2()[k]).abs() < 1e-8);
        assert!((tr.uxx_right[k] - h.h3()[k]).abs() < 1e-8);
    }
}
