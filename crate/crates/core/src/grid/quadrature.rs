use super::Field;
use crate::error::{invalid, Result};

/// Composite Simpson rule on uniform samples with spacing `h`. An odd number
/// of intervals is closed with the 3/8 rule on the last three; a single
/// interval falls back to the trapezoid rule.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        4 => 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals % 2 == 0 {
                (n - 1, None)
            } else {
                (n - 4, Some(n - 4))
            };
            let mut s = values[0] + values[even_end];
            for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * s;
            if let Some(k) = tail {
                total += 3.0 * h / 8.0
                    * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
            }
            total
        }
    }
}

/// Simpson quadrature of `f(x_i)` on `[a, b]` with `n` nodes.
pub fn simpson_samples(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    let v: Vec<f64> = (0..n).map(|i| f(a + i as f64 * h)).collect();
    simpson(&v, h)
}

pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    if f.grid() != g.grid() {
        return invalid("inner product of fields on different grids");
    }
    let prod: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    Ok(simpson(&prod, f.grid().dx()))
}

pub fn l2_norm(f: &Field) -> f64 {
    let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
    simpson(&sq, f.grid().dx()).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn norms_of_simple_fields() {
        let g = make_grid(1.0, 11).unwrap();
        assert!((l2_norm(&Field::from_fn(g, |_| 1.0)) - 1.0).abs() < 1e-14);
        let x = Field::from_fn(g, |x| x);
        assert!((l2_norm(&x) - 1.0 / 3f64.sqrt()).abs() < 1e-8);
        // even node count exercises the 3/8 closure
        let g = make_grid(1.0, 12).unwrap();
        assert!((l2_norm(&Field::from_fn(g, |x| x)) - 1.0 / 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [2usize, 3, 4, 5, 8, 9, 20] {
            let exact = if n == 2 { 0.5 } else { 0.25 };
            let f = |x: f64| if n == 2 { x } else { x * x * x };
            assert!((simpson_samples(0.0, 1.0, n, f) - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let a = Field::zeros(make_grid(1.0, 11).unwrap());
        let b = Field::zeros(make_grid(1.0, 13).unwrap());
        assert_eq!(l2_inner(&a, &b).unwrap_err().name(), "invalid-argument");
    }

    #[test]
    fn derivative_of_vanishing_field_integrates_to_small() {
        // int_0^1 f' = f(1) - f(0) = 0 for fields vanishing at both ends
        for n in [33usize, 65, 129] {
            let g = make_grid(1.0, n).unwrap();
            let f = Field::from_fn(g, |x| (std::f64::consts::PI * x).sin() * x.exp());
            let d = crate::grid::differentiate(&f, 1).unwrap();
            let q = simpson(d.values(), g.dx()).abs();
            assert!(q <= 10.0 * g.dx() * g.dx(), "n={n} q={q}");
        }
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(seed in proptest::collection::vec(-5.0f64..5.0, 17 * 2)) {
            let g = make_grid(1.0, 17).unwrap();
            let f = Field::new(g, seed[..17].to_vec()).unwrap();
            let h = Field::new(g, seed[17..].to_vec()).unwrap();
            let ip = l2_inner(&f, &h).unwrap();
            // Simpson weights are positive, so the discrete form is an inner product.
            prop_assert!(ip.abs() <= l2_norm(&f) * l2_norm(&h) * (1.0 + 1e-12) + 1e-12);
            prop_assert!((ip - l2_inner(&h, &f).unwrap()).abs() < 1e-12);
        }
    }
}
