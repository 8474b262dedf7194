//! Discrete Bourgain-type norms on a space-time rectangle and empirical
//! probes of the bilinear and trace estimates.
//!
//! A [`PlaneField`] holds samples on `[-X, X) × [-T₀, T₀)` and its Fourier
//! coefficients on the dual lattice `ξ_j = jπ/X`, `τ_k = kπ/T₀`, scaled so
//! that `Σ |w̃|² dξ dτ = Σ |w|² dx dt` (the `(2π)⁻²` measure is folded into
//! `w̃`). Every norm below is a weighted lattice sum of `|w̃|`. Distances to
//! the dispersion surface use `τ - (ξ³ - ξ)`, the phase of the free
//! propagator `e^{i(ξ³-ξ)t} e^{ixξ}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, KdvError, Result};
use crate::fit::log_log_slope;

/// Smallest lattice dimension accepted.
pub const MIN_POINTS: usize = 64;

/// Rectangle `[-X, X) × [-T₀, T₀)` with `nx × nt` periodic samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGeometry {
    pub half_width: f64,
    pub half_duration: f64,
    pub nx: usize,
    pub nt: usize,
}

impl PlaneGeometry {
    pub fn new(half_width: f64, half_duration: f64, nx: usize, nt: usize) -> Result<Self> {
        for (name, n) in [("nx", nx), ("nt", nt)] {
            if n < MIN_POINTS || !n.is_power_of_two() {
                return invalid(format!("{name} must be a power of two >= {MIN_POINTS}, got {n}"));
            }
        }
        if !(half_width > 0.0 && half_duration > 0.0) {
            return invalid("rectangle half sizes must be positive");
        }
        Ok(Self {
            half_width,
            half_duration,
            nx,
            nt,
        })
    }

    /// Same rectangle with twice the samples in each direction.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            nt: 2 * self.nt,
            ..*self
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.half_duration / self.nt as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    pub fn dtau(&self) -> f64 {
        PI / self.half_duration
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn t(&self, k: usize) -> f64 {
        -self.half_duration + k as f64 * self.dt()
    }

    fn signed(j: usize, n: usize) -> f64 {
        if j < n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        }
    }

    /// Frequency of coefficient column `j`.
    pub fn xi(&self, j: usize) -> f64 {
        Self::signed(j, self.nx) * self.dxi()
    }

    /// Frequency of coefficient row `k`.
    pub fn tau(&self, k: usize) -> f64 {
        Self::signed(k, self.nt) * self.dtau()
    }
}

/// 2-D transform along rows of length `nx` and columns of length `nt`.
fn fft2(data: &mut [Complex64], nx: usize, nt: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (fx, ft): (std::sync::Arc<dyn Fft<f64>>, std::sync::Arc<dyn Fft<f64>>) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(nt))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(nt))
    };
    for row in data.chunks_mut(nx) {
        fx.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); nt];
    for j in 0..nx {
        for k in 0..nt {
            column[k] = data[k * nx + j];
        }
        ft.process(&mut column);
        for k in 0..nt {
            data[k * nx + j] = column[k];
        }
    }
}

/// Samples `w(x_i, t_k)` (row `k`, column `i`) with cached coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    geometry: PlaneGeometry,
    samples: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl PlaneField {
    pub fn new(geometry: PlaneGeometry, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != geometry.nx * geometry.nt {
            return invalid(format!(
                "expected {} samples, got {}",
                geometry.nx * geometry.nt,
                samples.len()
            ));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("plane field contains non-finite samples");
        }
        let mut coeffs = samples.clone();
        fft2(&mut coeffs, geometry.nx, geometry.nt, false);
        let scale = geometry.dx() * geometry.dt() / (2.0 * PI);
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(Self {
            geometry,
            samples,
            coeffs,
        })
    }

    pub fn from_fn(geometry: PlaneGeometry, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let samples = (0..geometry.nt)
            .flat_map(|k| (0..geometry.nx).map(move |i| (i, k)))
            .map(|(i, k)| f(geometry.x(i), geometry.t(k)))
            .collect();
        Self::new(geometry, samples)
    }

    pub fn zeros(geometry: PlaneGeometry) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); geometry.nx * geometry.nt];
        Self {
            geometry,
            samples: z.clone(),
            coeffs: z,
        }
    }

    pub fn geometry(&self) -> &PlaneGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Normalized coefficient `w̃(ξ_j, τ_k)`.
    pub fn coefficient(&self, j: usize, k: usize) -> Complex64 {
        self.coeffs[k * self.geometry.nx + j]
    }

    /// `(Σ |w|² dx dt)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let g = &self.geometry;
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx() * g.dt()).sqrt()
    }

    /// Pointwise product.
    pub fn product(&self, other: &PlaneField) -> Result<PlaneField> {
        if self.geometry != other.geometry {
            return invalid("plane fields live on different lattices");
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .collect();
        Self::new(self.geometry, samples)
    }

    /// `∂_x` by multiplying the coefficients with `iξ`. The Nyquist column is
    /// zeroed.
    pub fn dx_spectral(&self) -> PlaneField {
        let g = self.geometry;
        let mut coeffs = self.coeffs.clone();
        for k in 0..g.nt {
            for j in 0..g.nx {
                let factor = if j == g.nx / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, g.xi(j))
                };
                coeffs[k * g.nx + j] *= factor;
            }
        }
        let mut samples = coeffs.clone();
        fft2(&mut samples, g.nx, g.nt, true);
        let scale = 2.0 * PI / (g.dx() * g.dt() * (g.nx * g.nt) as f64);
        samples.iter_mut().for_each(|z| *z *= scale);
        PlaneField {
            geometry: g,
            samples,
            coeffs,
        }
    }

    /// `Σ weight(ξ, τ) |w̃|² dξ dτ`.
    fn weighted_sum(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let g = &self.geometry;
        let mut total = 0.0;
        for k in 0..g.nt {
            let tau = g.tau(k);
            for j in 0..g.nx {
                let c = self.coeffs[k * g.nx + j];
                if c.re != 0.0 || c.im != 0.0 {
                    total += weight(g.xi(j), tau) * c.norm_sqr();
                }
            }
        }
        total * g.dxi() * g.dtau()
    }
}

fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// `τ - (ξ³ - ξ)`
fn dispersion_gap(xi: f64, tau: f64) -> f64 {
    tau - (xi * xi * xi - xi)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return invalid(format!("{name} must lie in [0, 1], got {v}"));
    }
    Ok(())
}

/// `Λ_{s,b}(w) = (Σ ⟨τ-(ξ³-ξ)⟩^{2b} ⟨ξ⟩^{2s} |w̃|²)^{1/2}`.
pub fn xsb_norm(w: &PlaneField, s: f64, b: f64) -> Result<f64> {
    check_unit("b", b)?;
    if !(-1.0..=1.0).contains(&s) {
        return invalid(format!("s must lie in [-1, 1], got {s}"));
    }
    Ok(w
        .weighted_sum(|xi, tau| bracket(dispersion_gap(xi, tau)).powf(2.0 * b) * bracket(xi).powf(2.0 * s))
        .sqrt())
}

/// `λ_α(w) = (Σ_{|ξ|≤1} ⟨τ⟩^{2α} |w̃|²)^{1/2}`.
pub fn lambda_alpha(w: &PlaneField, alpha: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    Ok(w
        .weighted_sum(|xi, tau| {
            if xi.abs() <= 1.0 {
                bracket(tau).powf(2.0 * alpha)
            } else {
                0.0
            }
        })
        .sqrt())
}

/// `(Λ_{s,b}² + λ_α²)^{1/2}`.
pub fn x_alpha_norm(w: &PlaneField, s: f64, b: f64, alpha: f64) -> Result<f64> {
    Ok(xsb_norm(w, s, b)?.hypot(lambda_alpha(w, alpha)?))
}

/// The three pieces of the `Y^α_{s,b}` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YParts {
    /// `(Σ_{|ξ|≤1} |w̃|² / (1+|τ|)^{2(1-α)})^{1/2}`
    pub p: f64,
    /// `(Σ_ξ (1+|ξ|)^{2s} (Σ_τ |w̃| / (1+|τ-(ξ³-ξ)|) dτ)² dξ)^{1/2}`
    pub g: f64,
    /// `(Σ (1+|ξ|)^{2s} |w̃|² / (1+|τ-(ξ³-ξ)|)^{2b})^{1/2}`
    pub q: f64,
}

impl YParts {
    pub fn total(&self) -> f64 {
        (self.p * self.p + self.g * self.g + self.q * self.q).sqrt()
    }
}

pub fn y_parts(w: &PlaneField, s: f64, b: f64, alpha: f64) -> Result<YParts> {
    check_unit("b", b)?;
    check_unit("alpha", alpha)?;
    let g = w.geometry();
    let p = w
        .weighted_sum(|xi, tau| {
            if xi.abs() <= 1.0 {
                (1.0 + tau.abs()).powf(-2.0 * (1.0 - alpha))
            } else {
                0.0
            }
        })
        .sqrt();
    let q = w
        .weighted_sum(|xi, tau| {
            (1.0 + xi.abs()).powf(2.0 * s) * (1.0 + dispersion_gap(xi, tau).abs()).powf(-2.0 * b)
        })
        .sqrt();
    let mut g_sq = 0.0;
    for j in 0..g.nx {
        let xi = g.xi(j);
        let inner: f64 = (0..g.nt)
            .map(|k| w.coefficient(j, k).norm() / (1.0 + dispersion_gap(xi, g.tau(k)).abs()))
            .sum::<f64>()
            * g.dtau();
        g_sq += (1.0 + xi.abs()).powf(2.0 * s) * inner * inner;
    }
    Ok(YParts {
        p,
        g: (g_sq * g.dxi()).sqrt(),
        q,
    })
}

/// `(𝒫_α² + 𝒢_s² + 𝒬_{s,b}²)^{1/2}`.
pub fn ysb_norm(w: &PlaneField, s: f64, b: f64, alpha: f64) -> Result<f64> {
    Ok(y_parts(w, s, b, alpha)?.total())
}

/// `‖∂_x(uv)‖_{Y^α_{s,b}} / (‖u‖_{X^α_{s,b}} ‖v‖_{X^α_{s,b}})`.
pub fn bilinear_ratio(u: &PlaneField, v: &PlaneField, s: f64, b: f64, alpha: f64) -> Result<f64> {
    let denom = x_alpha_norm(u, s, b, alpha)? * x_alpha_norm(v, s, b, alpha)?;
    if denom == 0.0 {
        return Err(KdvError::UndefinedRatio(
            "an argument of the bilinear form has zero norm".into(),
        ));
    }
    let flux = u.product(v)?.dx_spectral();
    Ok(ysb_norm(&flux, s, b, alpha)? / denom)
}

/// Smooth bump supported in `|t| < support`, equal to 1 at `t = 0`.
pub fn time_window(t: f64, support: f64) -> f64 {
    let r = t / support;
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Real initial datum given by its positive-frequency coefficients on the
/// lattice `ξ_j = j dξ`, `j = 1..`; the negative half is the conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited {
    pub dxi: f64,
    pub coefficients: Vec<Complex64>,
}

impl BandLimited {
    /// Gaussian coefficients with envelope `⟨ξ⟩^{-s-1}` on `0 < ξ ≤ cutoff`.
    pub fn random(rng: &mut impl Rng, dxi: f64, cutoff: f64, s: f64) -> Self {
        let modes = (cutoff / dxi).floor() as usize;
        let coefficients = (1..=modes)
            .map(|j| {
                let env = bracket(j as f64 * dxi).powf(-s - 1.0);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * env
            })
            .collect();
        Self { dxi, coefficients }
    }

    /// `W_ℝ(t)φ(x) = Σ_j 2 Re(c_j e^{i(ξ_j x + (ξ_j³ - ξ_j) t)})`.
    pub fn evolve(&self, x: f64, t: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let xi = (j + 1) as f64 * self.dxi;
                2.0 * (c * Complex64::from_polar(1.0, xi * x + (xi * xi * xi - xi) * t)).re
            })
            .sum()
    }

    /// `‖φ‖_{H^s}` on the periodic cell of length `2π/dξ`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let length = 2.0 * PI / self.dxi;
        let sum: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| 2.0 * bracket((j + 1) as f64 * self.dxi).powf(2.0 * s) * c.norm_sqr())
            .sum();
        (sum * length).sqrt()
    }

    /// `ψ(t/T) W_ℝ(t)φ` sampled on the plane.
    pub fn windowed_evolution(&self, geometry: PlaneGeometry, support: f64) -> Result<PlaneField> {
        PlaneField::from_fn(geometry, |x, t| {
            let w = time_window(t, support);
            Complex64::new(if w == 0.0 { 0.0 } else { w * self.evolve(x, t) }, 0.0)
        })
    }
}

/// Settings of the seeded bilinear ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearProbe {
    pub seed: u64,
    pub draws: usize,
    pub s: f64,
    pub b: f64,
    pub alpha: f64,
    /// Largest spatial frequency carried by the random data.
    pub cutoff: f64,
}

impl Default for BilinearProbe {
    fn default() -> Self {
        Self {
            seed: 7,
            draws: 100,
            s: -0.5,
            b: 0.45,
            alpha: 0.55,
            cutoff: 3.0,
        }
    }
}

/// Default rectangle of the probes: `[-4π, 4π) × [-1.25, 1.25)`.
pub fn probe_geometry(n: usize) -> Result<PlaneGeometry> {
    PlaneGeometry::new(4.0 * PI, 1.25, n, n)
}

/// Ratio of every draw for the time support `support`. Draw `i` uses the
/// seed `master + i`, so the ensemble does not depend on the lattice.
pub fn bilinear_ensemble(
    probe: &BilinearProbe,
    geometry: PlaneGeometry,
    support: f64,
) -> Result<Vec<f64>> {
    if !(support > 0.0 && support <= geometry.half_duration) {
        return invalid(format!(
            "time support {support} must lie in (0, {}]",
            geometry.half_duration
        ));
    }
    (0..probe.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(probe.seed.wrapping_add(i as u64));
            let u = BandLimited::random(&mut rng, geometry.dxi(), probe.cutoff, probe.s);
            let v = BandLimited::random(&mut rng, geometry.dxi(), probe.cutoff, probe.s);
            let u = u.windowed_evolution(geometry, support)?;
            let v = v.windowed_evolution(geometry, support)?;
            bilinear_ratio(&u, &v, probe.s, probe.b, probe.alpha)
        })
        .collect()
}

/// Maximum ratio per time support and the log-log slope of the maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearSummary {
    pub supports: Vec<f64>,
    pub max_ratios: Vec<f64>,
    pub slope: f64,
}

pub fn bilinear_summary(
    probe: &BilinearProbe,
    geometry: PlaneGeometry,
    supports: &[f64],
) -> Result<(BilinearSummary, Vec<Vec<f64>>)> {
    let ratios = supports
        .iter()
        .map(|&t| bilinear_ensemble(probe, geometry, t))
        .collect::<Result<Vec<_>>>()?;
    let max_ratios: Vec<f64> = ratios
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();
    let slope = if supports.len() >= 2 {
        log_log_slope(supports, &max_ratios)
    } else {
        f64::NAN
    };
    Ok((
        BilinearSummary {
            supports: supports.to_vec(),
            max_ratios,
            slope,
        },
        ratios,
    ))
}

/// `‖ψ(t) W_ℝ(t)φ(0)‖_{H^{(s+1)/3}_t} / ‖φ‖_{H^s}` for one datum, with the
/// window `ψ` of support `half_duration`.
pub fn trace_ratio(phi: &BandLimited, s: f64, half_duration: f64, nt: usize) -> Result<f64> {
    if nt < MIN_POINTS || !nt.is_power_of_two() {
        return invalid(format!("nt must be a power of two >= {MIN_POINTS}"));
    }
    let dt = 2.0 * half_duration / nt as f64;
    let mut trace: Vec<Complex64> = (0..nt)
        .map(|k| {
            let t = -half_duration + k as f64 * dt;
            Complex64::new(time_window(t, half_duration) * phi.evolve(0.0, t), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(nt).process(&mut trace);
    let dtau = PI / half_duration;
    let exponent = (s + 1.0) / 3.0;
    let sum: f64 = trace
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let tau = PlaneGeometry::signed(k, nt) * dtau;
            bracket(tau).powf(2.0 * exponent) * (c * dt).norm_sqr()
        })
        .sum();
    let trace_norm = (sum * dtau / (2.0 * PI)).sqrt();
    let data_norm = phi.hs_norm(s);
    if data_norm == 0.0 {
        return Err(KdvError::UndefinedRatio("datum has zero norm".into()));
    }
    Ok(trace_norm / data_norm)
}
