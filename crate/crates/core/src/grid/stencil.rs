use super::Field;
use crate::error::{invalid, Result};

/// Finite-difference weights for the `order`-th derivative at `x0` on the
/// nodes `xs` (Fornberg's recursion). Exact for polynomials of degree
/// `< xs.len()`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(order)
}

/// Row-wise stencil representation of `d^order/dx^order` on a uniform grid:
/// centered fourth-order stencils in the interior (5 points for orders 1-2,
/// 7 points for order 3) and second-order one-sided stencils of `order + 2`
/// points anchored at the boundary elsewhere.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    order: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

impl DiffOperator {
    pub fn new(n: usize, dx: f64, order: usize) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return invalid(format!("derivative order must be 1, 2 or 3, got {order}"));
        }
        if n < order + 4 {
            return invalid(format!(
                "order-{order} differentiation needs at least {} nodes, got {n}",
                order + 4
            ));
        }
        let half = if order == 3 { 3 } else { 2 };
        let one_sided = order + 2;
        let scale = dx.powi(order as i32);
        let centered = scaled(&window_weights(half, 2 * half + 1, order), scale);
        let left: Vec<Vec<f64>> = (0..half)
            .map(|i| scaled(&window_weights(i, one_sided, order), scale))
            .collect();
        let right: Vec<Vec<f64>> = (0..half)
            .map(|i| scaled(&window_weights(one_sided - 1 - i, one_sided, order), scale))
            .collect();
        let rows = (0..n)
            .map(|i| {
                if i < half {
                    (0, left[i].clone())
                } else if i + half >= n {
                    (n - one_sided, right[n - 1 - i].clone())
                } else {
                    (i - half, centered.clone())
                }
            })
            .collect();
        Ok(Self { order, rows })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(first column, weights)` of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let (s, w) = &self.rows[i];
        (*s, w)
    }

    pub fn apply_at(&self, values: &[f64], i: usize) -> f64 {
        let (s, w) = &self.rows[i];
        w.iter().zip(&values[*s..]).map(|(a, b)| a * b).sum()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.rows.len());
        (0..values.len()).map(|i| self.apply_at(values, i)).collect()
    }
}

fn window_weights(pos: usize, width: usize, order: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..width).map(|k| k as f64).collect();
    fornberg_weights(pos as f64, &xs, order)
}

fn scaled(w: &[f64], s: f64) -> Vec<f64> {
    w.iter().map(|v| v / s).collect()
}

/// Derivative of uniformly spaced samples.
pub fn differentiate_samples(values: &[f64], dx: f64, order: usize) -> Result<Vec<f64>> {
    Ok(DiffOperator::new(values.len(), dx, order)?.apply(values))
}

/// Derivative of a field (order 1, 2 or 3).
pub fn differentiate(f: &Field, order: usize) -> Result<Field> {
    let values = differentiate_samples(f.values(), f.grid().dx(), order)?;
    Field::new(*f.grid(), values)
}
