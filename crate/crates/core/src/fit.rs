//! Small regression helpers for convergence and scaling studies.

/// Least-squares line `y ≈ slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = cov / var;
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Observed order of errors measured on grids refined by 2 each level.
pub fn refinement_order(errors: &[f64]) -> f64 {
    let hs: Vec<f64> = (0..errors.len()).map(|k| 0.5f64.powi(k as i32)).collect();
    log_log_slope(&hs, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_lines() {
        let (s, c) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        assert!((refinement_order(&[1.0, 0.25, 0.0625]) - 2.0).abs() < 1e-12);
        assert!((log_log_slope(&[1.0, 10.0, 100.0], &[1.0, 0.1, 0.01]) + 1.0).abs() < 1e-12);
    }
}
