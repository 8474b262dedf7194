use kdv_core::datasets::{shaped_data, InitialShape, SignalShape};
use kdv_core::fit::refinement_order;
use kdv_core::reference_solver::solve_nonlinear_direct;
use kdv_core::transform::*;
use kdv_core::{make_grid, BoundaryTriple, TimeGrid, Trajectory};
use proptest::prelude::*;

const SIGNALS: [SignalShape; 3] = [SignalShape::FlatStart; 3];

fn solve(level: usize, horizon: f64) -> (Trajectory, BoundaryTriple) {
    let g = make_grid(1.0, 32 * (1 << level) + 1).unwrap();
    let tg = TimeGrid::new(horizon, 64 << level).unwrap();
    let (phi, h) = shaped_data(g, tg, InitialShape::Hump, SIGNALS, 2.0);
    (solve_nonlinear_direct(&phi, &h, &tg).unwrap(), h)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn residual_converges_at_second_order() {
    let errs: Vec<f64> = (0..4)
        .map(|level| {
            let (u, _) = solve(level, 0.1);
            sup(&kdvb_residual(&to_kdvb(&u).unwrap()).unwrap())
        })
        .collect();
    let order = refinement_order(&errs);
    assert!(order >= 1.8, "order {order} from {errs:?}");
}

#[test]
fn traces_satisfy_the_transformed_conditions() {
    let (u, h) = solve(3, 0.1);
    let pair = GaugePair::from_kdv(u).unwrap();
    assert!(pair.mismatch() <= 1e-12);
    let d = kdvb_trace_defects(&pair.v, &h).unwrap();
    assert!(d.max() <= 0.05, "{d:?}");
    assert_eq!(d.left_value, 0.0);
}

#[test]
fn round_trip_is_exact() {
    let (u, _) = solve(1, 0.1);
    let back = from_kdvb(&to_kdvb(&u).unwrap()).unwrap();
    let scale = u.max_abs();
    for (a, b) in u.frames().iter().zip(back.frames()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-14 * scale);
        }
    }
}

#[test]
fn zero_trajectory_maps_to_zero() {
    let g = make_grid(1.0, 17).unwrap();
    let tg = TimeGrid::new(1.0, 8).unwrap();
    let v = to_kdvb(&Trajectory::zeros(g, tg)).unwrap();
    assert_eq!(v.max_abs(), 0.0);
    assert!(sup(&kdvb_residual(&v).unwrap()) == 0.0);
}

proptest! {
    #[test]
    fn boundary_map_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, len in 0.5f64..4.0) {
        let tg = TimeGrid::new(2.0, 16).unwrap();
        let h = BoundaryTriple::from_fns(tg, |t| t.sin(), |t| t * t, |t| 1.0 - t);
        let k = BoundaryTriple::from_fns(tg, |t| t.cos(), |t| -t, |t| t.exp());
        let lhs = kdvb_boundary_map(&h.combine(a, &k, b).unwrap(), len).unwrap();
        let rhs = kdvb_boundary_map(&h, len).unwrap().combine(a, &kdvb_boundary_map(&k, len).unwrap(), b).unwrap();
        for (x, y) in lhs.channels().iter().zip(rhs.channels()) {
            for (p, q) in x.iter().zip(y) {
                prop_assert!((p - q).abs() <= 1e-13 * (1.0 + p.abs()));
            }
        }
    }
}
