//! Nonlinear solves by fixed-point iteration of the Duhamel map
//!
//! `Γ(w) = W₀(t)φ + W_bdr(t)h - ∫₀ᵗ W₀(t-τ)(w w_x)(τ) dτ`,
//!
//! with contraction monitoring in the `sup_t L²` norm and an empirical
//! estimate of the horizon on which the map contracts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::error::{invalid, KdvError, Result};
use crate::grid::{simpson, DiffOperator, Field, Grid1D, TimeGrid, Trajectory};
use crate::reference_solver::solve_linear;
use crate::sobolev::z_norm;

/// Consecutive non-decreasing residuals that end the iteration.
const STALL_LIMIT: usize = 3;

/// `∫₀ᵗ W₀(t-τ) F(τ) dτ`: the linear solve with forcing `F` and zero initial
/// and boundary data.
pub fn duhamel(forcing: &Trajectory) -> Result<Trajectory> {
    let grid = *forcing.grid();
    let tgrid = *forcing.time_grid();
    solve_linear(
        &Field::zeros(grid),
        Some(forcing),
        &BoundaryTriple::zeros(tgrid),
        &tgrid,
    )
}

/// `w w_x = (w²/2)_x` frame by frame.
pub fn convective_term(w: &Trajectory) -> Result<Trajectory> {
    let grid = *w.grid();
    let d1 = DiffOperator::new(grid.len(), grid.dx(), 1)?;
    let frames = w
        .frames()
        .iter()
        .map(|f| d1.apply(&f.iter().map(|u| 0.5 * u * u).collect::<Vec<_>>()))
        .collect();
    Trajectory::from_frames(grid, *w.time_grid(), frames)
}

/// The map `Γ` with its affine part `W₀(t)φ + W_bdr(t)h` computed once.
#[derive(Debug, Clone)]
pub struct DuhamelMap {
    affine: Trajectory,
}

impl DuhamelMap {
    /// The boundary lifting uses the finite-difference solver, so any `L` is
    /// accepted.
    pub fn new(phi: &Field, h: &BoundaryTriple, tgrid: &TimeGrid) -> Result<Self> {
        Ok(Self {
            affine: solve_linear(phi, None, h, tgrid)?,
        })
    }

    pub fn affine(&self) -> &Trajectory {
        &self.affine
    }

    pub fn apply(&self, w: &Trajectory) -> Result<Trajectory> {
        let integral = duhamel(&convective_term(w)?)?;
        self.affine.combine(1.0, &integral, -1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterates: usize,
    /// `sup_t ||v_{k+1} - v_k||_{L²}` per iteration.
    pub residuals: Vec<f64>,
    /// `residuals[k+1] / residuals[k]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

impl PicardDiagnostics {
    /// Last contraction ratio, or 0 when the iteration stopped before one
    /// could be formed.
    pub fn terminal_ratio(&self) -> f64 {
        self.ratios.last().copied().unwrap_or(0.0)
    }

    /// Largest observed ratio. Unlike the terminal ratio it does not depend
    /// on where the tolerance happens to stop the iteration.
    pub fn contraction_estimate(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Iterates `v_{k+1} = Γ(v_k)` from `v₀ = W₀φ + W_bdr h` until the residual
/// drops to `tol`.
///
/// Fails with `NonContractive` after [`STALL_LIMIT`] consecutive ratios
/// `≥ 1` and with `NoConvergence` once `max_iter` is used up.
pub fn picard_solve(
    phi: &Field,
    h: &BoundaryTriple,
    tgrid: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<(Trajectory, PicardDiagnostics)> {
    picard_solve_with(phi, h, tgrid, tol, max_iter, |_, _| {})
}

/// [`picard_solve`] with a callback receiving each iteration's diagnostics,
/// also on failure paths.
pub fn picard_solve_with(
    phi: &Field,
    h: &BoundaryTriple,
    tgrid: &TimeGrid,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, &PicardDiagnostics),
) -> Result<(Trajectory, PicardDiagnostics)> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    if max_iter < 2 {
        return invalid(format!("max_iter must be at least 2, got {max_iter}"));
    }
    let map = DuhamelMap::new(phi, h, tgrid)?;
    let mut current = map.affine().clone();
    let mut diag = PicardDiagnostics {
        iterates: 0,
        residuals: Vec::new(),
        ratios: Vec::new(),
        converged: false,
    };
    let mut stalled = 0;
    while diag.iterates < max_iter {
        let next = match map.apply(&current) {
            Ok(v) => v,
            // overflow inside the linear solve: the iteration has diverged
            Err(KdvError::InvalidArgument(_)) | Err(KdvError::SolverFailure(_)) => {
                return Err(KdvError::NonContractive {
                    iteration: diag.iterates + 1,
                });
            }
            Err(e) => return Err(e),
        };
        diag.iterates += 1;
        let residual = next.combine(1.0, &current, -1.0)?.sup_l2();
        if let Some(&prev) = diag.residuals.last() {
            let ratio = if prev > 0.0 { residual / prev } else { 0.0 };
            diag.ratios.push(ratio);
            stalled = if ratio >= 1.0 { stalled + 1 } else { 0 };
        }
        diag.residuals.push(residual);
        current = next;
        observe(diag.iterates, &diag);
        if !residual.is_finite() || stalled >= STALL_LIMIT {
            return Err(KdvError::NonContractive {
                iteration: diag.iterates,
            });
        }
        if residual <= tol {
            diag.converged = true;
            return Ok((current, diag));
        }
    }
    Err(KdvError::NoConvergence {
        iterations: diag.iterates,
        residual: diag.residuals.last().copied().unwrap_or(f64::NAN),
    })
}

/// Settings of [`estimate_existence_time`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceProbe {
    /// Largest horizon tried.
    pub ceiling: f64,
    /// Time step shared by every probe.
    pub dt: f64,
    pub bisection_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest terminal ratio accepted as contraction.
    pub max_ratio: f64,
}

impl Default for ExistenceProbe {
    fn default() -> Self {
        Self {
            ceiling: 4.0,
            dt: 1.0 / 64.0,
            bisection_steps: 8,
            tol: 1e-10,
            max_iter: 60,
            max_ratio: 0.9,
        }
    }
}

/// One row of the `T*(r)` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistencePoint {
    pub amplitude: f64,
    pub horizon: f64,
    /// Horizon equals the probe ceiling.
    pub at_ceiling: bool,
}

/// Base data `(φ, h(t))` to be scaled by an amplitude.
pub struct DataShape<'a> {
    pub phi: Field,
    pub signals: &'a (dyn Fn(f64) -> [f64; 3] + Sync),
}

impl DataShape<'_> {
    fn scaled(&self, r: f64, tgrid: TimeGrid) -> (Field, BoundaryTriple) {
        let samples: Vec<[f64; 3]> = tgrid.times().iter().map(|&t| (self.signals)(t)).collect();
        let channel = |m: usize| samples.iter().map(|s| r * s[m]).collect::<Vec<_>>();
        let h = BoundaryTriple::new(tgrid, channel(0), channel(1), channel(2))
            .expect("shape samples are finite and sized to the grid");
        (self.phi.scaled(r), h)
    }

    pub fn grid(&self) -> &Grid1D {
        self.phi.grid()
    }
}

/// Whether Picard contracts for data `r · shape` on `[0, θ]`.
fn contracts(shape: &DataShape<'_>, r: f64, theta: f64, probe: &ExistenceProbe) -> Result<bool> {
    let steps = ((theta / probe.dt).round() as usize).max(crate::grid::MIN_TIME_STEPS);
    let tgrid = TimeGrid::new(theta, steps)?;
    let (phi, h) = shape.scaled(r, tgrid);
    match picard_solve(&phi, &h, &tgrid, probe.tol, probe.max_iter) {
        Ok((_, d)) => Ok(d.terminal_ratio() <= probe.max_ratio),
        Err(KdvError::NonContractive { .. } | KdvError::NoConvergence { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Empirical `T*(r)`: for each amplitude, the largest horizon (bisected
/// between 0 and the ceiling) on which Picard converges with terminal
/// ratio at most `max_ratio`.
pub fn estimate_existence_time(
    amplitudes: &[f64],
    shape: &DataShape<'_>,
    probe: &ExistenceProbe,
) -> Result<Vec<ExistencePoint>> {
    if amplitudes.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return invalid("amplitudes must be finite and non-negative");
    }
    if amplitudes.windows(2).any(|w| w[1] < w[0]) {
        return invalid("amplitudes must be increasing");
    }
    if !(probe.ceiling > 0.0 && probe.dt > 0.0 && probe.dt * 4.0 <= probe.ceiling) {
        return invalid("probe needs 0 < 4 dt <= ceiling");
    }
    amplitudes
        .par_iter()
        .map(|&r| {
            if r == 0.0 || contracts(shape, r, probe.ceiling, probe)? {
                return Ok(ExistencePoint {
                    amplitude: r,
                    horizon: probe.ceiling,
                    at_ceiling: true,
                });
            }
            let (mut lo, mut hi) = (0.0, probe.ceiling);
            for _ in 0..probe.bisection_steps {
                let mid = 0.5 * (lo + hi);
                if mid < 4.0 * probe.dt {
                    // below the resolvable horizon
                    hi = mid;
                    continue;
                }
                if contracts(shape, r, mid, probe)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(ExistencePoint {
                amplitude: r,
                horizon: lo,
                at_ceiling: false,
            })
        })
        .collect()
}

/// `∫₀ᵀ ||u u_x||_{L²} dt / ||u||²_Z` with the `s = 0` solution norm.
pub fn forcing_ratio(traj: &Trajectory) -> Result<f64> {
    let dx = traj.grid().dx();
    let per_frame: Vec<f64> = convective_term(traj)?
        .frames()
        .iter()
        .map(|f| simpson(&f.iter().map(|v| v * v).collect::<Vec<_>>(), dx).max(0.0).sqrt())
        .collect();
    let numerator = simpson(&per_frame, traj.time_grid().dt());
    let z = z_norm(traj, 0.0)?;
    if z == 0.0 {
        return Err(KdvError::UndefinedRatio("solution norm vanishes".into()));
    }
    Ok(numerator / (z * z))
}

/// Worst case of [`forcing_ratio`] over an ensemble of solutions, on the
/// prefixes `[0, T]` for each `T` in `horizons`, and the log-log slope of
/// that curve (the empirical exponent `μ` in `C T^μ`).
///
/// The constant bounded by the estimate is a supremum over solutions, so a
/// single solution only gives a lower envelope.
pub fn forcing_exponent(solutions: &[Trajectory], horizons: &[f64]) -> Result<(Vec<f64>, f64)> {
    if solutions.is_empty() || horizons.len() < 2 {
        return invalid("need at least one solution and two horizons");
    }
    let mut worst = vec![0.0f64; horizons.len()];
    for u in solutions {
        let tg = u.time_grid();
        for (slot, &t) in worst.iter_mut().zip(horizons) {
            let steps = tg.index_of(t).ok_or_else(|| {
                KdvError::InvalidArgument(format!("horizon {t} is not a node of the time grid"))
            })?;
            *slot = slot.max(forcing_ratio(&u.prefix(steps)?)?);
        }
    }
    let slope = crate::fit::log_log_slope(horizons, &worst);
    Ok((worst, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_data_converge_at_once() {
        let g = make_grid(1.0, 33).unwrap();
        let tg = TimeGrid::new(1.0, 32).unwrap();
        let (traj, d) =
            picard_solve(&Field::zeros(g), &BoundaryTriple::zeros(tg), &tg, 1e-10, 10).unwrap();
        assert!(d.converged);
        assert_eq!(d.iterates, 1);
        assert_eq!(traj.max_abs(), 0.0);
        assert_eq!(d.ratios.len() + 1, d.residuals.len());
    }

    #[test]
    fn duhamel_of_zero_and_constant_forcing() {
        let g = make_grid(1.0, 65).unwrap();
        let tg = TimeGrid::new(1e-4, 8).unwrap();
        assert_eq!(duhamel(&Trajectory::zeros(g, tg)).unwrap().max_abs(), 0.0);
        // F is flat at both ends, so t F is accurate to O(t²)
        let f = Trajectory::zeros(g, tg)
            .map_frames(|x, _, _| (x * (1.0 - x)).powi(6))
            .unwrap();
        let out = duhamel(&f).unwrap();
        let relative_defect = |k: usize| {
            let expected = f.field(k).scaled(tg.time(k));
            out.field(k).combine(1.0, &expected, -1.0).unwrap().max_abs() / expected.max_abs()
        };
        let (early, late) = (relative_defect(2), relative_defect(8));
        assert!(late < 0.05, "{late}");
        // relative defect linear in t: four times the time, four times the defect
        assert!((3.5..=4.5).contains(&(late / early)), "{early} {late}");
    }

    #[test]
    fn argument_checks() {
        let g = make_grid(1.0, 17).unwrap();
        let tg = TimeGrid::new(1.0, 16).unwrap();
        let (phi, h) = (Field::zeros(g), BoundaryTriple::zeros(tg));
        assert!(picard_solve(&phi, &h, &tg, 0.0, 10).is_err());
        assert!(picard_solve(&phi, &h, &tg, 1e-8, 1).is_err());
    }
}
