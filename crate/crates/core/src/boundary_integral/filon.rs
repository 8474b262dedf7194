//! Filon-type quadrature: piecewise quadratic interpolation integrated
//! exactly against an exponential.

use num_complex::Complex64;

/// `μ_p(z) = ∫₀¹ u^p e^{zu} du` for `p = 0, 1, 2`.
pub fn moments(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 1.0 {
        // power series: μ_p = Σ z^k / (k! (k + p + 1))
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..30 {
            for (p, slot) in out.iter_mut().enumerate() {
                *slot += term / (k + p + 1) as f64;
            }
            term *= z / (k + 1) as f64;
        }
        out
    } else {
        let ez = z.exp();
        let m0 = (ez - 1.0) / z;
        let m1 = (ez - m0) / z;
        let m2 = (ez - 2.0 * m1) / z;
        [m0, m1, m2]
    }
}

/// Weights `(w_0, w_½, w_1)` such that
/// `∫₀¹ e^{zu} q(u) du = Σ w_k q(u_k)` for every quadratic `q`, with nodes
/// `u = 0, 1/2, 1`.
pub fn quadratic_weights(z: Complex64) -> [Complex64; 3] {
    let [m0, m1, m2] = moments(z);
    [
        2.0 * m2 - 3.0 * m1 + m0,
        4.0 * m1 - 4.0 * m2,
        2.0 * m2 - m1,
    ]
}

/// Weights `(w_0, w_1)` for linear interpolation on `[0, 1]`.
pub fn linear_weights(z: Complex64) -> [Complex64; 2] {
    let [m0, m1, _] = moments(z);
    [m0 - m1, m1]
}

/// `∫₀^{t_end} e^{-st} h(t) dt` for uniform samples `h` with spacing `dt`,
/// interpolating `h` quadratically on consecutive interval pairs (linearly
/// on a leftover last interval). `h` is taken to vanish beyond the samples.
pub fn laplace_hat(h: &[f64], dt: f64, s: Complex64) -> Complex64 {
    let n = h.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let intervals = n - 1;
    let pairs = intervals / 2;
    let mut total = Complex64::new(0.0, 0.0);
    if pairs > 0 {
        // panel k covers [2k dt, (2k+2) dt]; the shift factor is geometric
        let width = 2.0 * dt;
        let w = quadratic_weights(-s * width);
        let step = (-s * width).exp();
        let mut shift = Complex64::new(width, 0.0);
        for k in 0..pairs {
            let i = 2 * k;
            total += shift * (w[0] * h[i] + w[1] * h[i + 1] + w[2] * h[i + 2]);
            shift *= step;
        }
    }
    if intervals % 2 == 1 {
        let i = n - 2;
        let w = linear_weights(-s * dt);
        let start = (-s * (i as f64 * dt)).exp();
        total += start * dt * (w[0] * h[i] + w[1] * h[i + 1]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn moments_agree_across_branches() {
        for z in [c(0.999, 0.0), c(0.0, 0.999), c(-0.7, 0.7)] {
            let a = moments(z);
            let b = moments(z * 1.002);
            for p in 0..3 {
                assert!((a[p] - b[p]).norm() < 5e-3 * a[p].norm().max(1e-3));
            }
        }
        let zero = moments(c(0.0, 0.0));
        assert!((zero[0] - 1.0).norm() < 1e-15);
        assert!((zero[1] - 0.5).norm() < 1e-15);
        assert!((zero[2] - 1.0 / 3.0).norm() < 1e-15);
        // ∫ u e^{iu} at z = 2i from the closed form
        let z = c(0.0, 2.0);
        let exact = (z.exp() * (z - 1.0) + 1.0) / (z * z);
        assert!((moments(z)[1] - exact).norm() < 1e-14);
    }

    #[test]
    fn zero_signal() {
        assert_eq!(laplace_hat(&[0.0; 11], 0.1, c(0.0, 3.0)), c(0.0, 0.0));
    }

    #[test]
    fn decaying_exponential() {
        let dt = 0.01;
        let h: Vec<f64> = (0..=2000).map(|k| (-(k as f64) * dt).exp()).collect();
        assert!((laplace_hat(&h, dt, c(1.0, 0.0)) - 0.5).norm() < 1e-6);
    }

    #[test]
    fn unit_box_on_the_imaginary_axis() {
        let s = c(0.0, 1.0);
        let exact = (1.0 - (-s).exp()) / s;
        for n in [11usize, 12] {
            let h = vec![1.0; n];
            let dt = 1.0 / (n - 1) as f64;
            assert!((laplace_hat(&h, dt, s) - exact).norm() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn quadratics_are_integrated_exactly() {
        let z = c(0.3, 40.0);
        let w = quadratic_weights(z);
        let q = |u: f64| 1.0 - 2.0 * u + 3.0 * u * u;
        let approx = w[0] * q(0.0) + w[1] * q(0.5) + w[2] * q(1.0);
        let m = moments(z);
        let exact = m[0] - 2.0 * m[1] + 3.0 * m[2];
        assert!((approx - exact).norm() < 1e-14);
    }
}
