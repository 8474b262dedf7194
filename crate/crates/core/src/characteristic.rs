//! Roots of `s + λ + λ³ = 0`, the 3×3 boundary system and its Cramer ratios.
//!
//! Along the imaginary axis `s = i(ρ³ - ρ)`, `ρ > 1`, the roots are
//! `iρ` and `(±√(3ρ² - 4) - iρ)/2`. The system matrix has rows
//! `(1, 1, 1)`, `(λ_j e^{λ_j})` and `(λ_j² e^{λ_j})`. Its columns are
//! rescaled by `e^{-max(Re λ_j, 0)}` before inversion so that nothing
//! overflows for large `ρ`; log-magnitudes of the ratios are kept because
//! several of them underflow long before the asymptotic regime ends.

use std::fmt::Write as _;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KdvError, Result};

/// Relative threshold under which the system determinant is treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-13;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `s + λ + λ³`.
pub fn char_poly(s: Complex64, lambda: Complex64) -> Complex64 {
    s + lambda + lambda * lambda * lambda
}

/// The three roots of the characteristic cubic in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootTriple {
    roots: [Complex64; 3],
    s: Complex64,
    rho: Option<f64>,
}

impl RootTriple {
    pub fn lambda1(&self) -> Complex64 {
        self.roots[0]
    }

    pub fn lambda2(&self) -> Complex64 {
        self.roots[1]
    }

    pub fn lambda3(&self) -> Complex64 {
        self.roots[2]
    }

    pub fn roots(&self) -> [Complex64; 3] {
        self.roots
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn residuals(&self) -> [f64; 3] {
        self.roots.map(|l| char_poly(self.s, l).norm())
    }

    /// Largest distance between `self` and `other` viewed as unordered sets.
    pub fn set_distance(&self, other: &RootTriple) -> f64 {
        let one_way = |a: &[Complex64; 3], b: &[Complex64; 3]| {
            a.iter()
                .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        one_way(&self.roots, &other.roots).max(one_way(&other.roots, &self.roots))
    }
}

fn residual_bound(s: Complex64) -> f64 {
    1e-12 * s.norm().max(1.0)
}

fn polish(s: Complex64, mut lambda: Complex64) -> Complex64 {
    for _ in 0..60 {
        let f = char_poly(s, lambda);
        let df = 3.0 * lambda * lambda + 1.0;
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        let next = lambda - step;
        if char_poly(s, next).norm() >= f.norm() {
            break;
        }
        lambda = next;
    }
    lambda
}

/// Canonical order: λ₁ has the smallest `|Re|` (ties to the largest `Im`),
/// λ₂ the larger real part of the rest (ties to the larger `Im`).
fn canonical(mut r: [Complex64; 3], s: Complex64) -> [Complex64; 3] {
    let tie = 1e-9 * (1.0 + s.norm().cbrt());
    let better_first = |a: &Complex64, b: &Complex64| {
        let (ra, rb) = (a.re.abs(), b.re.abs());
        if (ra - rb).abs() <= tie {
            a.im > b.im
        } else {
            ra < rb
        }
    };
    let mut first = 0;
    for k in 1..3 {
        if better_first(&r[k], &r[first]) {
            first = k;
        }
    }
    r.swap(0, first);
    let (a, b) = (r[1], r[2]);
    let b_wins = if (a.re - b.re).abs() <= tie {
        b.im > a.im
    } else {
        b.re > a.re
    };
    if b_wins {
        r.swap(1, 2);
    }
    r
}

/// Roots of `s + λ + λ³ = 0` from Cardano's formula, polished by Newton.
pub fn char_roots(s: Complex64) -> Result<RootTriple> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(KdvError::InvalidArgument(format!("non-finite s = {s}")));
    }
    // λ³ + pλ + q with p = 1, q = s; Δ₀ = -3p, Δ₁ = 27q
    let d1 = 27.0 * s;
    let disc = (d1 * d1 + 108.0).sqrt();
    let c_plus = (d1 + disc) / 2.0;
    let c_minus = (d1 - disc) / 2.0;
    let big = if c_plus.norm() >= c_minus.norm() {
        c_plus
    } else {
        c_minus
    };
    let c = big.cbrt();
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    let mut ck = c;
    for root in &mut roots {
        *root = polish(s, -(ck - 3.0 / ck) / 3.0);
        ck *= omega;
    }
    let bound = residual_bound(s);
    if roots.iter().any(|&l| char_poly(s, l).norm() > bound) {
        return Err(KdvError::Internal(format!(
            "root polishing did not reach residual {bound:e} at s = {s}"
        )));
    }
    Ok(RootTriple {
        roots: canonical(roots, s),
        s,
        rho: None,
    })
}

/// `ρ³ - ρ`, the frequency on the imaginary axis for parameter `ρ`.
pub fn frequency(rho: f64) -> f64 {
    rho * rho * rho - rho
}

/// Closed-form roots at `s = i(ρ³ - ρ)`, `ρ > 1`, with the principal branch
/// of `√(3ρ² - 4)` below `ρ = 2/√3`.
pub fn lambda_plus(rho: f64) -> Result<RootTriple> {
    if !(rho.is_finite() && rho > 1.0) {
        return Err(KdvError::OutOfRange(format!("rho must exceed 1, got {rho}")));
    }
    let s = I * frequency(rho);
    let root = Complex64::new(3.0 * rho * rho - 4.0, 0.0).sqrt();
    let closed = [
        I * rho,
        (root - I * rho) / 2.0,
        (-root - I * rho) / 2.0,
    ];
    let roots = closed.map(|l| polish(s, l));
    Ok(RootTriple {
        roots,
        s,
        rho: Some(rho),
    })
}

/// Rows `(1,1,1)`, `(λ_j e^{λ_j})`, `(λ_j² e^{λ_j})`.
pub fn system_matrix(roots: &RootTriple) -> Matrix3<Complex64> {
    let r = roots.roots;
    let e = r.map(|l| l.exp());
    Matrix3::from_fn(|i, j| match i {
        0 => Complex64::new(1.0, 0.0),
        1 => r[j] * e[j],
        _ => r[j] * r[j] * e[j],
    })
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant_cofactor(m: &Matrix3<Complex64>) -> Complex64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Determinant from a partially pivoted LU factorization.
pub fn determinant_lu(m: &Matrix3<Complex64>) -> Complex64 {
    m.lu().determinant()
}

/// Solves `A c = rhs` by Cramer's rule (column replacement).
pub fn cramer_solve(m: &Matrix3<Complex64>, rhs: [Complex64; 3]) -> Result<[Complex64; 3]> {
    let det = determinant_cofactor(m);
    if det.norm() == 0.0 {
        return Err(KdvError::SolverFailure("singular 3x3 system".into()));
    }
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut mj = *m;
        for (i, v) in rhs.iter().enumerate() {
            mj[(i, j)] = *v;
        }
        *slot = determinant_cofactor(&mj) / det;
    }
    Ok(out)
}

/// Cramer ratios `Δ_{j,m}/Δ` at parameter `ρ`, i.e. the entries of the
/// inverse system matrix. Indices are 0-based: `(j, m)` here is `(j+1, m+1)`
/// in the usual numbering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioMatrix {
    rho: f64,
    roots: RootTriple,
    /// Inverse of the column-scaled matrix.
    scaled_inverse: [[Complex64; 3]; 3],
    /// `max(Re λ_j, 0)`, the log of the column scale.
    shift: [f64; 3],
    /// Scaled determinant divided by its Hadamard bound.
    relative_det: f64,
}

impl RatioMatrix {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn roots(&self) -> &RootTriple {
        &self.roots
    }

    /// `Δ_{j,m}/Δ`; may underflow to zero for the exponentially small entries.
    pub fn entry(&self, j: usize, m: usize) -> Complex64 {
        self.scaled_inverse[j][m] * (-self.shift[j]).exp()
    }

    pub fn entries(&self) -> [[Complex64; 3]; 3] {
        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (j, row) in out.iter_mut().enumerate() {
            for (m, v) in row.iter_mut().enumerate() {
                *v = self.entry(j, m);
            }
        }
        out
    }

    /// `ln |Δ_{j,m}/Δ|`, finite even where [`entry`](Self::entry) underflows.
    pub fn ln_abs(&self, j: usize, m: usize) -> f64 {
        self.scaled_inverse[j][m].norm().ln() - self.shift[j]
    }

    /// `(Δ_{j,m}/Δ) e^{λ_j}`, computed without forming either factor.
    pub fn entry_times_exp(&self, j: usize, m: usize) -> Complex64 {
        let l = self.roots.roots[j];
        self.scaled_inverse[j][m] * (l - self.shift[j]).exp()
    }

    /// `|det|` of the scaled matrix relative to the product of its column norms.
    pub fn relative_determinant(&self) -> f64 {
        self.relative_det
    }
}

/// Cramer ratios along the imaginary axis.
pub fn delta_ratios(rho: f64) -> Result<RatioMatrix> {
    let roots = lambda_plus(rho)?;
    let shift = roots.roots.map(|l| l.re.max(0.0));
    let r = roots.roots;
    let scaled = Matrix3::from_fn(|i, j| {
        let d = (-shift[j]).exp();
        match i {
            0 => Complex64::new(d, 0.0),
            1 => r[j] * (r[j] - shift[j]).exp(),
            _ => r[j] * r[j] * (r[j] - shift[j]).exp(),
        }
    });
    let det = determinant_cofactor(&scaled);
    let hadamard: f64 = (0..3).map(|j| scaled.column(j).norm()).product();
    let relative_det = det.norm() / hadamard;
    if !(relative_det > SINGULAR_THRESHOLD) {
        return Err(KdvError::SingularFrequency {
            rho,
            det_abs: det.norm(),
        });
    }
    // inverse = adjugate / det; adjugate[j][m] = cofactor(m, j)
    let mut scaled_inverse = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (j, row) in scaled_inverse.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate() {
            let (r0, r1) = others(m);
            let (c0, c1) = others(j);
            let minor = scaled[(r0, c0)] * scaled[(r1, c1)] - scaled[(r0, c1)] * scaled[(r1, c0)];
            let sign = if (j + m) % 2 == 0 { 1.0 } else { -1.0 };
            *v = sign * minor / det;
        }
    }
    Ok(RatioMatrix {
        rho,
        roots,
        scaled_inverse,
        shift,
        relative_det,
    })
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Relative determinant at `rho`, zero where the system is singular.
fn relative_determinant_at(rho: f64) -> f64 {
    delta_ratios(rho).map_or(0.0, |r| r.relative_determinant())
}

/// Pre-scan of `[rho_min, rho_max]` for zeros of the system determinant.
/// Local minima of the relative determinant on a uniform sample are refined
/// by golden-section search and reported when the refined value falls below
/// `1e-5`.
pub fn scan_singular_frequencies(rho_min: f64, rho_max: f64, samples: usize) -> Vec<f64> {
    let lo = rho_min.max(1.0 + 1e-9);
    let samples = samples.max(3);
    let h = (rho_max - lo) / (samples - 1) as f64;
    let vals: Vec<f64> = (0..samples)
        .map(|k| relative_determinant_at(lo + k as f64 * h))
        .collect();
    let mut hits = Vec::new();
    for k in 1..samples - 1 {
        if !(vals[k] <= vals[k - 1] && vals[k] <= vals[k + 1]) {
            continue;
        }
        let (mut a, mut b) = (lo + (k - 1) as f64 * h, lo + (k + 1) as f64 * h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            if b - a <= 4.0 * f64::EPSILON * b {
                break;
            }
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if relative_determinant_at(c) <= relative_determinant_at(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let rho = 0.5 * (a + b);
        if relative_determinant_at(rho) < 1e-5 && hits.iter().all(|r: &f64| (r - rho).abs() > h) {
            hits.push(rho);
        }
    }
    hits
}

/// `rho` followed by real and imaginary parts and log-magnitudes of the nine
/// ratios, one row per sample.
pub fn ratios_to_csv(rhos: &[f64]) -> Result<String> {
    let mut out = String::from("rho");
    for j in 1..=3 {
        for m in 1..=3 {
            let _ = write!(out, ",re_{j}{m},im_{j}{m},ln_abs_{j}{m}");
        }
    }
    out.push('\n');
    for &rho in rhos {
        let r = delta_ratios(rho)?;
        let _ = write!(out, "{rho:.17e}");
        for j in 0..3 {
            for m in 0..3 {
                let e = r.entry(j, m);
                let _ = write!(out, ",{:.17e},{:.17e},{:.17e}", e.re, e.im, r.ln_abs(j, m));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_at_zero() {
        let r = char_roots(c(0.0, 0.0)).unwrap();
        let expected = RootTriple {
            roots: [c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)],
            s: c(0.0, 0.0),
            rho: None,
        };
        assert!(r.set_distance(&expected) < 1e-14);
        // λ = i at ρ = 1 solves the cubic with s = 0
        assert!(char_poly(c(0.0, 0.0), I).norm() < 1e-15);
    }

    #[test]
    fn roots_at_rho_two() {
        let r = char_roots(c(0.0, 6.0)).unwrap();
        let s2 = 2f64.sqrt();
        let expected = [c(0.0, 2.0), c(s2, -1.0), c(-s2, -1.0)];
        for (a, b) in r.roots().iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
        assert!(r.residuals().iter().all(|&x| x <= 1e-12 * 6.0));
        let lp = lambda_plus(2.0).unwrap();
        for (a, b) in lp.roots().iter().zip(expected) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn lambda_plus_values() {
        let r = lambda_plus(10.0).unwrap();
        assert!((r.lambda2().re - 296f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((r.lambda2().re - 8.602).abs() < 1e-3);
        assert_eq!(lambda_plus(1.0).unwrap_err().name(), "out-of-range");
        assert_eq!(lambda_plus(0.5).unwrap_err().name(), "out-of-range");
        let big = lambda_plus(1e6).unwrap();
        assert!((big.lambda2().re / 1e6 - 3f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn principal_branch_below_threshold_is_continuous() {
        let crit = 2.0 / 3f64.sqrt();
        let a = lambda_plus(crit - 1e-9).unwrap();
        let b = lambda_plus(crit + 1e-9).unwrap();
        for (x, y) in a.roots().iter().zip(b.roots()) {
            assert!((x - y).norm() < 1e-3);
        }
        let cr = char_roots(a.s()).unwrap();
        assert!(cr.set_distance(&a) < 1e-4);
    }

    #[test]
    fn determinant_two_ways() {
        let m = system_matrix(&char_roots(c(0.0, 0.0)).unwrap());
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 1)], c(1.0, 0.0));
        assert_eq!(m[(0, 2)], c(1.0, 0.0));
        let (a, b) = (determinant_cofactor(&m), determinant_lu(&m));
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn cramer_round_trip() {
        let m = system_matrix(&lambda_plus(3.3).unwrap());
        let rhs = [c(0.3, -1.2), c(2.0, 0.5), c(-0.7, 0.1)];
        let sol = cramer_solve(&m, rhs).unwrap();
        for (i, want) in rhs.iter().enumerate() {
            let got: Complex64 = (0..3).map(|j| m[(i, j)] * sol[j]).sum();
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn ratios_invert_the_unscaled_matrix() {
        let r = delta_ratios(4.0).unwrap();
        let m = system_matrix(r.roots());
        for mm in 0..3 {
            let mut e = [c(0.0, 0.0); 3];
            e[mm] = c(1.0, 0.0);
            let sol = cramer_solve(&m, e).unwrap();
            for j in 0..3 {
                assert!((sol[j] - r.entry(j, mm)).norm() < 1e-10 * (1.0 + sol[j].norm()));
            }
        }
    }

    // The only zero is where λ₂ and λ₃ coalesce, ρ = 2/√3.
    #[test]
    fn scan_finds_only_the_coalescence_point() {
        let hits = scan_singular_frequencies(1.0, 60.0, 2000);
        assert_eq!(hits.len(), 1, "{hits:?}");
        assert!((hits[0] - 2.0 / 3f64.sqrt()).abs() < 1e-6);
        // a double root is only resolved to ~sqrt(eps), so the determinant
        // is tiny but not exactly zero there
        let at = delta_ratios(2.0 / 3f64.sqrt()).map_or(0.0, |r| r.relative_determinant());
        assert!(at < 1e-5);
    }

    #[test]
    fn csv_dump_has_one_row_per_rho() {
        let csv = ratios_to_csv(&[2.0, 3.0]).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 28);
    }
}
