//! Spectral solution of the pure boundary-forcing problem
//! `v_t + v_x + v_xxx = 0`, `v(x,0) = 0`, `v(0,t) = h1`, `v_x(1,t) = h2`,
//! `v_xx(1,t) = h3` on the unit interval.
//!
//! With `ĥ_m` the Laplace transforms of the data and `ω = ρ³ - ρ`,
//!
//! `v(x,t) = (1/π) Re ∫₀^∞ e^{iωt} Σ_m ĥ_m(iω) [ Σ_{j=1,2} Q_{jm} e^{-λ_j(1-x)} + R_{3m} e^{λ_3 x} ] dω`
//!
//! where `R_{jm}` are the Cramer ratios and `Q_{jm} = R_{jm} e^{λ_j}`. The
//! real part is the sum of the integral and its conjugate. The integral is
//! evaluated with Filon panels that are uniform in `ω`: the non-oscillatory
//! factor is interpolated quadratically and integrated exactly against
//! `e^{iωt}`.

mod filon;

pub use filon::{laplace_hat, linear_weights, moments, quadratic_weights};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::characteristic::{delta_ratios, frequency, scan_singular_frequencies};
use crate::error::{invalid, KdvError, Result};
use crate::grid::{BoundaryTraces, Grid1D, TimeGrid, Trajectory};

/// Quadrature controls for [`wbdr_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Truncation of the `ρ` integral; the frequency bound is `ρ³ - ρ`.
    pub rho_max: f64,
    /// Number of Filon panels on `[0, ρ_max³ - ρ_max]`.
    pub panels: usize,
    /// Target absolute quadrature error used for the truncation warning.
    pub tol: f64,
}

impl QuadConfig {
    pub const MIN_RHO_MAX: f64 = 10.0;
    pub const MIN_PANELS: usize = 32;
    /// Panel width used by [`QuadConfig::for_time_grid`].
    pub const DEFAULT_PANEL_WIDTH: f64 = 0.25;

    pub fn new(rho_max: f64, panels: usize, tol: f64) -> Result<Self> {
        let cfg = Self {
            rho_max,
            panels,
            tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_max >= Self::MIN_RHO_MAX && self.rho_max.is_finite()) {
            return invalid(format!(
                "rho_max must be at least {}, got {}",
                Self::MIN_RHO_MAX,
                self.rho_max
            ));
        }
        if self.panels < Self::MIN_PANELS {
            return invalid(format!(
                "need at least {} panels, got {}",
                Self::MIN_PANELS,
                self.panels
            ));
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }

    /// Truncates at the Nyquist frequency `π/dt` of the sampled data.
    pub fn for_time_grid(tgrid: &TimeGrid) -> Self {
        let omega = std::f64::consts::PI / tgrid.dt();
        let rho_max = rho_of_frequency(omega).max(Self::MIN_RHO_MAX);
        let omega = frequency(rho_max);
        let panels = ((omega / Self::DEFAULT_PANEL_WIDTH).ceil() as usize).max(Self::MIN_PANELS);
        Self {
            rho_max,
            panels,
            tol: 1e-6,
        }
    }

    pub fn omega_max(&self) -> f64 {
        frequency(self.rho_max)
    }
}

/// Diagnostics of one spectral evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadReport {
    pub omega_max: f64,
    pub panels: usize,
    /// Estimated contribution of `ω > ω_max`, assuming the integrand decays
    /// like `ω⁻³` beyond the cut.
    pub truncation_bound: f64,
    /// Points `ρ > 1` where the system determinant vanishes.
    pub singular_rhos: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Largest real root of `ρ³ - ρ = ω` (`ω ≥ 0`).
pub fn rho_of_frequency(omega: f64) -> f64 {
    let mut rho = 1.0 + omega.max(0.0).cbrt();
    for _ in 0..100 {
        let f = frequency(rho) - omega;
        let step = f / (3.0 * rho * rho - 1.0);
        rho -= step;
        if step.abs() <= 1e-15 * rho {
            break;
        }
    }
    rho
}

/// Frequency `ω = ρ³ - ρ` at which `λ₂` and `λ₃` coalesce (`ρ = 2/√3`).
fn coalescence_frequency() -> f64 {
    frequency(2.0 / 3f64.sqrt())
}

/// Panel boundaries on `[0, ω_max]`. The first panel ends at `4/3` of the
/// coalescence frequency, so that point sits strictly between nodes.
fn panel_edges(cfg: &QuadConfig) -> Vec<f64> {
    let omega_max = cfg.omega_max();
    let first = 4.0 / 3.0 * coalescence_frequency();
    let rest = cfg.panels - 1;
    let width = (omega_max - first) / rest as f64;
    let mut edges = Vec::with_capacity(cfg.panels + 1);
    edges.push(0.0);
    edges.extend((0..=rest).map(|k| first + k as f64 * width));
    edges
}

/// Boundary data extended past `T` by holding the last value, times a C²
/// cutoff equal to 1 on `[0, T]` and vanishing from `1.1 T` on.
fn extended_samples(channel: &[f64], tgrid: &TimeGrid) -> Vec<f64> {
    let dt = tgrid.dt();
    let horizon = tgrid.horizon();
    let extra = (0.1 * horizon / dt).ceil() as usize + 1;
    let last = *channel.last().expect("non-empty channel");
    let mut out = channel.to_vec();
    for k in 1..=extra {
        let tau = (k as f64 * dt / (0.1 * horizon)).min(1.0);
        let smooth = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
        out.push(last * (1.0 - smooth));
    }
    out
}

/// Spectral coefficients at one frequency node: `a_j` multiplies
/// `e^{-λ_j(1-x)}` (j = 1, 2) and `b` multiplies `e^{λ_3 x}`.
#[derive(Debug, Clone, Copy)]
struct NodeCoefficients {
    lambda: [Complex64; 3],
    a: [Complex64; 2],
    b: Complex64,
}

impl NodeCoefficients {
    /// `∂_x^order` of the node's profile at `x`.
    fn eval(&self, x: f64, order: i32) -> Complex64 {
        let [l1, l2, l3] = self.lambda;
        self.a[0] * l1.powi(order) * (-l1 * (1.0 - x)).exp()
            + self.a[1] * l2.powi(order) * (-l2 * (1.0 - x)).exp()
            + self.b * l3.powi(order) * (l3 * x).exp()
    }
}

fn node_coefficients(omega: f64, hats: [Complex64; 3]) -> Result<NodeCoefficients> {
    // ρ = 1 is the edge of the parametrization; nudge into its interior
    let rho = rho_of_frequency(omega).max(1.0 + 1e-12);
    let r = delta_ratios(rho)?;
    let mut a = [Complex64::new(0.0, 0.0); 2];
    for (j, slot) in a.iter_mut().enumerate() {
        *slot = (0..3).map(|m| r.entry_times_exp(j, m) * hats[m]).sum();
    }
    let b = (0..3).map(|m| r.entry(2, m) * hats[m]).sum();
    Ok(NodeCoefficients {
        lambda: r.roots().roots(),
        a,
        b,
    })
}

/// Filon weights of every node at time `t` (nodes are panel ends and
/// midpoints, `2P + 1` in total).
fn node_weights(edges: &[f64], t: f64, out: &mut [Complex64]) {
    out.fill(Complex64::new(0.0, 0.0));
    for p in 0..edges.len() - 1 {
        let (a, b) = (edges[p], edges[p + 1]);
        let w = b - a;
        let z = Complex64::new(0.0, w * t);
        let base = Complex64::from_polar(w, a * t);
        let q = quadratic_weights(z);
        for k in 0..3 {
            out[2 * p + k] += base * q[k];
        }
    }
}

/// Spectral evaluation of the boundary operator on the unit interval.
pub fn wbdr_apply(
    h: &BoundaryTriple,
    grid: &Grid1D,
    tgrid: &TimeGrid,
    cfg: &QuadConfig,
) -> Result<Trajectory> {
    let (traj, report) = wbdr_apply_with_report(h, grid, tgrid, cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(traj)
}

/// [`wbdr_apply`] together with its quadrature diagnostics.
pub fn wbdr_apply_with_report(
    h: &BoundaryTriple,
    grid: &Grid1D,
    tgrid: &TimeGrid,
    cfg: &QuadConfig,
) -> Result<(Trajectory, QuadReport)> {
    cfg.validate()?;
    if (grid.length() - 1.0).abs() > 1e-12 {
        return Err(KdvError::NotApplicable(format!(
            "spectral boundary operator is implemented for L = 1 only (got L = {}); use the finite-difference solver",
            grid.length()
        )));
    }
    if h.time_grid() != tgrid {
        return invalid("boundary data and output use different time grids");
    }
    let edges = panel_edges(cfg);
    let mut report = QuadReport {
        omega_max: cfg.omega_max(),
        panels: cfg.panels,
        truncation_bound: 0.0,
        singular_rhos: scan_singular_frequencies(1.0, cfg.rho_max.min(50.0), 1000),
        warnings: Vec::new(),
    };
    if h.is_zero() {
        return Ok((Trajectory::zeros(*grid, *tgrid), report));
    }

    let nodes: Vec<f64> = (0..2 * cfg.panels + 1)
        .map(|q| {
            let p = q / 2;
            if q == 2 * cfg.panels {
                edges[cfg.panels]
            } else if q % 2 == 0 {
                edges[p]
            } else {
                0.5 * (edges[p] + edges[p + 1])
            }
        })
        .collect();
    for &rho in &report.singular_rhos {
        let omega = frequency(rho);
        let gap = nodes
            .iter()
            .map(|w| (w - omega).abs())
            .fold(f64::INFINITY, f64::min);
        if gap < 1e-6 {
            report.warnings.push(format!(
                "singular frequency rho = {rho} lies {gap:e} from a quadrature node"
            ));
        }
    }

    let samples: Vec<Vec<f64>> = h
        .channels()
        .iter()
        .map(|c| extended_samples(c, tgrid))
        .collect();
    let dt = tgrid.dt();
    let active: Vec<bool> = h.channels().iter().map(|c| c.iter().any(|v| *v != 0.0)).collect();
    let coefficients: Vec<NodeCoefficients> = nodes
        .par_iter()
        .map(|&omega| {
            let s = Complex64::new(0.0, omega);
            let mut hats = [Complex64::new(0.0, 0.0); 3];
            for m in 0..3 {
                if active[m] {
                    hats[m] = laplace_hat(&samples[m], dt, s);
                }
            }
            node_coefficients(omega, hats)
        })
        .collect::<Result<_>>()?;

    // node-major profiles, split into real and imaginary parts
    let xs = grid.nodes();
    let nx = xs.len();
    let nq = nodes.len();
    let mut prof_re = vec![0.0; nq * nx];
    let mut prof_im = vec![0.0; nq * nx];
    prof_re
        .par_chunks_mut(nx)
        .zip(prof_im.par_chunks_mut(nx))
        .zip(coefficients.par_iter())
        .for_each(|((re, im), c)| {
            for (i, &x) in xs.iter().enumerate() {
                let v = c.eval(x, 0);
                re[i] = v.re;
                im[i] = v.im;
            }
        });
    // trace profiles: u, u_x, u_xx at 0 and at 1
    let trace_spec: [(f64, i32); 6] = [(0.0, 0), (1.0, 0), (0.0, 1), (1.0, 1), (0.0, 2), (1.0, 2)];
    let trace_profiles: Vec<[Complex64; 6]> = coefficients
        .iter()
        .map(|c| trace_spec.map(|(x, k)| c.eval(x, k)))
        .collect();

    let last = coefficients.last().expect("at least one node");
    let envelope = xs
        .iter()
        .map(|&x| last.eval(x, 0).norm())
        .fold(0.0f64, f64::max)
        / std::f64::consts::PI;
    report.truncation_bound = envelope * report.omega_max / 2.0;
    if report.truncation_bound > cfg.tol {
        report.warnings.push(format!(
            "truncation at rho_max = {} leaves an estimated error of {:e} (tol {:e})",
            cfg.rho_max, report.truncation_bound, cfg.tol
        ));
    }

    let times = tgrid.times();
    let results: Vec<(Vec<f64>, [f64; 6])> = times
        .par_iter()
        .map(|&t| {
            let mut w = vec![Complex64::new(0.0, 0.0); nq];
            node_weights(&edges, t, &mut w);
            let mut frame = vec![0.0; nx];
            for (q, wq) in w.iter().enumerate() {
                let (wr, wi) = (wq.re, wq.im);
                let re = &prof_re[q * nx..(q + 1) * nx];
                let im = &prof_im[q * nx..(q + 1) * nx];
                for ((f, a), b) in frame.iter_mut().zip(re).zip(im) {
                    *f += wr * a - wi * b;
                }
            }
            let mut traces = [0.0; 6];
            for (wq, prof) in w.iter().zip(&trace_profiles) {
                for (slot, p) in traces.iter_mut().zip(prof) {
                    *slot += (wq * p).re;
                }
            }
            let scale = 1.0 / std::f64::consts::PI;
            frame.iter_mut().for_each(|f| *f *= scale);
            traces.iter_mut().for_each(|f| *f *= scale);
            (frame, traces)
        })
        .collect();

    let mut traces = BoundaryTraces::zeros(0);
    let mut frames = Vec::with_capacity(results.len());
    for (frame, tr) in results {
        frames.push(frame);
        traces.u_left.push(tr[0]);
        traces.u_right.push(tr[1]);
        traces.ux_left.push(tr[2]);
        traces.ux_right.push(tr[3]);
        traces.uxx_left.push(tr[4]);
        traces.uxx_right.push(tr[5]);
    }
    let traj = Trajectory::with_traces(*grid, *tgrid, frames, traces)?;
    Ok((traj, report))
}

/// Relative deviation `‖W(a h + b g) - a W(h) - b W(g)‖∞ / ‖a W(h) + b W(g)‖∞`
/// (absolute when the reference vanishes).
pub fn wbdr_linearity_check(
    h: &BoundaryTriple,
    g: &BoundaryTriple,
    a: f64,
    b: f64,
    grid: &Grid1D,
    tgrid: &TimeGrid,
    cfg: &QuadConfig,
) -> Result<f64> {
    let combined = wbdr_apply(&h.combine(a, g, b)?, grid, tgrid, cfg)?;
    let separate = wbdr_apply(h, grid, tgrid, cfg)?.combine(a, &wbdr_apply(g, grid, tgrid, cfg)?, b)?;
    let diff = combined.combine(1.0, &separate, -1.0)?.max_abs();
    let scale = separate.max_abs();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}
