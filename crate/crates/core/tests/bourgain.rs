use std::f64::consts::PI;

use kdv_core::bourgain::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn geometry() -> PlaneGeometry {
    probe_geometry(64).unwrap()
}

/// `A e^{i(ξ₀x + τ₀t)}` with `ξ₀`, `τ₀` on the lattice: a single coefficient
/// of modulus `A · 2X · 2T₀ / 2π`.
fn spike(g: PlaneGeometry, j: i32, k: i32, amp: f64) -> (PlaneField, f64, f64, f64) {
    let xi = j as f64 * g.dxi();
    let tau = k as f64 * g.dtau();
    let w = PlaneField::from_fn(g, |x, t| Complex64::from_polar(amp, xi * x + tau * t)).unwrap();
    let c = amp * 4.0 * g.half_width * g.half_duration / (2.0 * PI);
    (w, xi, tau, c)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1e-300)
}

#[test]
fn single_spike_closed_forms() {
    let g = geometry();
    let cell = g.dxi() * g.dtau();
    for (j, k) in [(2, 5), (-3, 1), (7, -20), (0, 0)] {
        let (w, xi, tau, c) = spike(g, j, k, 0.7);
        let gap = (tau - (xi.powi(3) - xi)).abs();
        let (s, b, alpha) = (-0.4, 0.45, 0.6);
        let lam = ((1.0 + gap * gap).powf(b / 2.0) * (1.0 + xi * xi).powf(s / 2.0) * c) * cell.sqrt();
        assert!(close(xsb_norm(&w, s, b).unwrap(), lam));
        let small = if xi.abs() <= 1.0 {
            (1.0 + tau * tau).powf(alpha / 2.0) * c * cell.sqrt()
        } else {
            0.0
        };
        let got = lambda_alpha(&w, alpha).unwrap();
        assert!(close(got, small) || (small == 0.0 && got < 1e-12));

        let y = y_parts(&w, s, b, alpha).unwrap();
        let q = (1.0 + xi.abs()).powf(s) * c / (1.0 + gap).powf(b) * cell.sqrt();
        let gg = (1.0 + xi.abs()).powf(s) * c * g.dtau() / (1.0 + gap) * g.dxi().sqrt();
        let p = if xi.abs() <= 1.0 {
            c / (1.0 + tau.abs()).powf(1.0 - alpha) * cell.sqrt()
        } else {
            0.0
        };
        assert!(close(y.q, q));
        assert!(close(y.g, gg));
        assert!(close(y.p, p) || (p == 0.0 && y.p < 1e-12));
    }
}

#[test]
fn alpha_zero_is_l2_on_the_low_strip() {
    let g = geometry();
    // Low modes only: |ξ| ≤ 1 holds for j ≤ 4 at dξ = 1/4.
    let low = PlaneField::from_fn(g, |x, t| {
        Complex64::new((0.5 * x).cos() * (-4.0 * t * t).exp(), 0.0)
    })
    .unwrap();
    let l2 = low.l2_norm();
    assert!((lambda_alpha(&low, 0.0).unwrap() - l2).abs() < 1e-10 * l2);
    let (high, ..) = spike(g, 8, 0, 1.0);
    assert!(lambda_alpha(&high, 0.0).unwrap() < 1e-10);
}

#[test]
fn rejects_bad_parameters() {
    let w = PlaneField::zeros(geometry());
    assert!(xsb_norm(&w, 0.0, 1.2).is_err());
    assert!(xsb_norm(&w, -2.0, 0.5).is_err());
    assert!(lambda_alpha(&w, -0.1).is_err());
    assert!(PlaneField::new(geometry(), vec![Complex64::new(0.0, 0.0); 10]).is_err());
    let probe = BilinearProbe::default();
    assert!(bilinear_ensemble(&probe, geometry(), 2.0).is_err());
}

fn random_field(seed: u64) -> PlaneField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = geometry();
    BandLimited::random(&mut rng, g.dxi(), 4.0, 0.0)
        .windowed_evolution(g, 0.8)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parseval_and_monotonicity(seed in 0u64..1000, b1 in 0.0f64..0.5, db in 0.01f64..0.5, s1 in -1.0f64..0.0, ds in 0.01f64..1.0) {
        let w = random_field(seed);
        let l2 = w.l2_norm();
        prop_assert!((xsb_norm(&w, 0.0, 0.0).unwrap() - l2).abs() <= 1e-10 * l2);
        prop_assert!(xsb_norm(&w, s1, b1).unwrap() <= xsb_norm(&w, s1, b1 + db).unwrap());
        prop_assert!(xsb_norm(&w, s1, b1).unwrap() <= xsb_norm(&w, s1 + ds, b1).unwrap());
        let y_lo = y_parts(&w, s1, b1, 0.6).unwrap();
        let y_hi = y_parts(&w, s1, b1 + db, 0.6).unwrap();
        prop_assert!(y_hi.q <= y_lo.q);
    }

    #[test]
    fn bilinear_ratio_is_scale_invariant_and_symmetric(seed in 0u64..1000, c in 0.1f64..10.0) {
        let u = random_field(seed);
        let v = random_field(seed + 1);
        let r = bilinear_ratio(&u, &v, -0.5, 0.45, 0.55).unwrap();
        let scaled: Vec<Complex64> = u.samples().iter().map(|z| z * c).collect();
        let cu = PlaneField::new(*u.geometry(), scaled).unwrap();
        let rc = bilinear_ratio(&cu, &v, -0.5, 0.45, 0.55).unwrap();
        let rs = bilinear_ratio(&v, &u, -0.5, 0.45, 0.55).unwrap();
        prop_assert!((r - rc).abs() <= 1e-10 * r);
        prop_assert!((r - rs).abs() <= 1e-10 * r);
    }
}

#[test]
fn ensemble_maximum_is_stable_under_refinement() {
    let probe = BilinearProbe::default();
    let g = geometry();
    let max = |g| {
        bilinear_ensemble(&probe, g, 1.0)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max)
    };
    let coarse = max(g);
    let fine = max(g.refined());
    assert!(coarse > 0.0);
    assert!((fine / coarse - 1.0).abs() <= 0.2, "{coarse} vs {fine}");
}

#[test]
fn ratio_shrinks_with_the_time_support() {
    let probe = BilinearProbe::default();
    let (summary, ratios) = bilinear_summary(&probe, geometry(), &[1.0, 0.5, 0.25, 0.125]).unwrap();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.iter().all(|r| r.len() == 100 && r.iter().all(|x| x.is_finite())));
    assert!(summary.slope > 0.0, "slope {}", summary.slope);
}

#[test]
fn ensemble_is_reproducible() {
    let probe = BilinearProbe {
        draws: 4,
        ..Default::default()
    };
    let a = bilinear_ensemble(&probe, geometry(), 0.5).unwrap();
    let b = bilinear_ensemble(&probe, geometry(), 0.5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trace_bound_holds_on_random_data() {
    for nt in [256, 512] {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = BandLimited::random(&mut rng, 0.25, 3.0, -0.5);
            let r = trace_ratio(&phi, -0.5, 1.25, nt).unwrap();
            assert!(r > 0.0 && r <= 1.5, "seed {seed} nt {nt}: {r}");
        }
    }
}
