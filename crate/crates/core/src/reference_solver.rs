//! Finite-difference reference solver.
//!
//! The spatial operator `A v = -v_xxx - v_x` uses the stencils of
//! [`DiffOperator`]. Three rows are replaced by the boundary conditions:
//! row 0 imposes `v(0) = h1`, row `n-2` the one-sided `v_x(L) = h2` and row
//! `n-1` the one-sided `v_xx(L) = h3`. Time stepping is Crank-Nicolson for
//! the linear problem and the implicit midpoint rule (Newton inner loop) for
//! the nonlinear one, with the nonlinearity written as `(u²/2)_x`.

use serde::{Deserialize, Serialize};

use crate::banded::{BandedLu, BandedMatrix};
use crate::boundary_data::BoundaryTriple;
use crate::error::{invalid, KdvError, Result};
use crate::grid::{simpson, DiffOperator, Field, Grid1D, TimeGrid, Trajectory};

const BAND: usize = 3;
const NEWTON_MAX_ITER: usize = 30;

/// Discrete `A = -D3 - D1` together with the boundary-condition rows.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: Grid1D,
    d1: DiffOperator,
    d2: DiffOperator,
    matrix: BandedMatrix,
}

impl OperatorMatrix {
    pub fn new(grid: Grid1D) -> Result<Self> {
        let n = grid.len();
        let dx = grid.dx();
        let d1 = DiffOperator::new(n, dx, 1)?;
        let d2 = DiffOperator::new(n, dx, 2)?;
        let d3 = DiffOperator::new(n, dx, 3)?;
        let mut matrix = BandedMatrix::zeros(n, BAND, BAND);
        for op in [&d1, &d3] {
            // constraint rows are written afterwards
            for i in 1..n - 2 {
                let (start, w) = op.row(i);
                for (k, v) in w.iter().enumerate() {
                    matrix.add(i, start + k, -v);
                }
            }
        }
        write_boundary_rows(&d1, &d2, &mut matrix);
        Ok(Self {
            grid,
            d1,
            d2,
            matrix,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Banded matrix whose interior rows are `A` and whose rows `0`, `n-2`,
    /// `n-1` encode `v(0)`, `v_x(L)`, `v_xx(L)`.
    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    /// Whether row `i` carries a boundary condition rather than the PDE.
    pub fn is_constraint_row(&self, i: usize) -> bool {
        let n = self.grid.len();
        i == 0 || i + 2 >= n
    }

    /// `(A v)_i` on PDE rows, zero on constraint rows.
    pub fn apply_interior(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.mul_vec(v);
        let n = out.len();
        out[0] = 0.0;
        out[n - 2] = 0.0;
        out[n - 1] = 0.0;
        out
    }

    pub fn first_derivative(&self) -> &DiffOperator {
        &self.d1
    }

    /// Crank-Nicolson left-hand side `I/dt - A/2` with constraint rows.
    fn implicit_matrix(&self, dt: f64) -> BandedMatrix {
        let n = self.grid.len();
        let mut m = BandedMatrix::zeros(n, BAND, BAND);
        for i in 0..n {
            for j in i.saturating_sub(BAND)..=(i + BAND).min(n - 1) {
                let a = self.matrix.get(i, j);
                if a != 0.0 {
                    m.set(i, j, -0.5 * a);
                }
            }
            m.add(i, i, 1.0 / dt);
        }
        write_boundary_rows(&self.d1, &self.d2, &mut m);
        m
    }

    fn constraint_rhs(&self, rhs: &mut [f64], h: [f64; 3]) {
        let n = rhs.len();
        rhs[0] = h[0];
        rhs[n - 2] = h[1];
        rhs[n - 1] = h[2];
    }
}

/// Overwrites the three constraint rows of `m`.
fn write_boundary_rows(d1: &DiffOperator, d2: &DiffOperator, m: &mut BandedMatrix) {
    let n = m.len();
    m.clear_row(0);
    m.set(0, 0, 1.0);
    for (row, op) in [(n - 2, d1), (n - 1, d2)] {
        m.clear_row(row);
        let (start, w) = op.row(n - 1);
        for (k, v) in w.iter().enumerate() {
            m.set(row, start + k, *v);
        }
    }
}

fn check_grids(
    grid: &Grid1D,
    tgrid: &TimeGrid,
    forcing: Option<&Trajectory>,
    h: &BoundaryTriple,
) -> Result<()> {
    if h.time_grid() != tgrid {
        return invalid("boundary data and solver use different time grids");
    }
    if let Some(f) = forcing {
        if f.grid() != grid || f.time_grid() != tgrid {
            return invalid("forcing and solver use different grids");
        }
    }
    Ok(())
}

/// Crank-Nicolson solution of `v_t + v_x + v_xxx = f`, `v(x,0) = φ`,
/// `v(0,t) = h1`, `v_x(L,t) = h2`, `v_xx(L,t) = h3`.
pub fn solve_linear(
    phi: &Field,
    forcing: Option<&Trajectory>,
    h: &BoundaryTriple,
    tgrid: &TimeGrid,
) -> Result<Trajectory> {
    let grid = *phi.grid();
    check_grids(&grid, tgrid, forcing, h)?;
    let op = OperatorMatrix::new(grid)?;
    let dt = tgrid.dt();
    let lu = op.implicit_matrix(dt).factor()?;
    let mut frames = Vec::with_capacity(tgrid.len());
    frames.push(phi.values().to_vec());
    for k in 0..tgrid.steps() {
        let v = &frames[k];
        let av = op.apply_interior(v);
        let mut rhs: Vec<f64> = v.iter().zip(&av).map(|(a, b)| a / dt + 0.5 * b).collect();
        if let Some(f) = forcing {
            let (f0, f1) = (f.frame(k), f.frame(k + 1));
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += 0.5 * (f0[i] + f1[i]);
            }
        }
        op.constraint_rhs(&mut rhs, h.at(k + 1));
        lu.solve_in_place(&mut rhs);
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(KdvError::SolverFailure(format!(
                "non-finite values at step {}",
                k + 1
            )));
        }
        frames.push(rhs);
    }
    Trajectory::from_frames(grid, *tgrid, frames)
}

/// `W₀(t)φ`: homogeneous linear evolution read at `t`, which must be a node
/// of `tgrid`.
pub fn semigroup_apply(phi: &Field, t: f64, tgrid: &TimeGrid) -> Result<Field> {
    let k = tgrid
        .index_of(t)
        .ok_or_else(|| KdvError::InvalidArgument(format!("t = {t} is not a time-grid node")))?;
    if k == 0 {
        return Ok(phi.clone());
    }
    let short = TimeGrid::new(t, k.max(crate::grid::MIN_TIME_STEPS))?;
    let traj = solve_linear(phi, None, &BoundaryTriple::zeros(short), &short)?;
    Ok(traj.field(short.steps()))
}

/// Implicit-midpoint solution of the nonlinear problem with Newton's method
/// at each step.
pub fn solve_nonlinear_direct(
    phi: &Field,
    h: &BoundaryTriple,
    tgrid: &TimeGrid,
) -> Result<Trajectory> {
    let grid = *phi.grid();
    check_grids(&grid, tgrid, None, h)?;
    let op = OperatorMatrix::new(grid)?;
    let n = grid.len();
    let dt = tgrid.dt();
    let base = op.implicit_matrix(dt);
    let d1 = op.first_derivative().clone();
    let mut frames = Vec::with_capacity(tgrid.len());
    frames.push(phi.values().to_vec());
    for k in 0..tgrid.steps() {
        let u = frames[k].clone();
        let au = op.apply_interior(&u);
        let target = h.at(k + 1);
        let mut w = u.clone();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let mid: Vec<f64> = w.iter().zip(&u).map(|(a, b)| 0.5 * (a + b)).collect();
            let half_sq: Vec<f64> = mid.iter().map(|x| 0.5 * x * x).collect();
            let flux = d1.apply(&half_sq);
            let aw = op.apply_interior(&w);
            let mut residual: Vec<f64> = (0..n)
                .map(|i| (w[i] - u[i]) / dt - 0.5 * (aw[i] + au[i]) + flux[i])
                .collect();
            residual[0] = w[0] - target[0];
            residual[n - 2] = d1.apply_at(&w, n - 1) - target[1];
            residual[n - 1] = op.d2.apply_at(&w, n - 1) - target[2];
            let mut jac = base.clone();
            for i in 1..n - 2 {
                let (start, wts) = d1.row(i);
                for (c, v) in wts.iter().enumerate() {
                    jac.add(i, start + c, 0.5 * v * mid[start + c]);
                }
            }
            let lu: BandedLu = jac
                .factor()
                .map_err(|_| KdvError::BlowupSuspected { step: k + 1 })?;
            lu.solve_in_place(&mut residual);
            let step_norm = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !step_norm.is_finite() || step_norm > 1e8 {
                return Err(KdvError::BlowupSuspected { step: k + 1 });
            }
            for (wi, d) in w.iter_mut().zip(&residual) {
                *wi -= d;
            }
            let scale = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if step_norm <= 1e-12 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(KdvError::BlowupSuspected { step: k + 1 });
        }
        frames.push(w);
    }
    Trajectory::from_frames(grid, *tgrid, frames)
}

/// Which integral identity [`energy_report`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyIdentity {
    /// `d/dt ∫v² + [v²]₀ᴸ + [2v v_xx - v_x²]₀ᴸ = 2∫fv`; with homogeneous
    /// boundary data this is `d/dt ∫v² + v²(L) + v_x²(0) = 2∫fv`.
    Linear,
    /// The linear flux plus `(2/3)[u³]₀ᴸ` for `u_t + u_x + u_xxx + u u_x = f`.
    Nonlinear,
    /// Multiplier `2xv`: `d/dt ∫xv² + [xv²]₀ᴸ - ∫v² + 3∫v_x²
    /// + [2x v v_xx - 2v v_x - x v_x²]₀ᴸ = 2∫xfv`.
    Weighted,
}

/// Per-step residuals of an energy identity, evaluated at step midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub identity: EnergyIdentity,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Observed order against the next coarser level, when known.
    pub order: Option<f64>,
}

impl EnergyReport {
    /// Records the observed order relative to a report on a grid twice as
    /// coarse in space and time.
    pub fn with_order_from(mut self, coarser: &EnergyReport) -> Self {
        self.order = Some((coarser.max_residual / self.max_residual).log2());
        self
    }
}

/// Residuals of `identity` along `traj`, with optional forcing `f`.
pub fn energy_report(
    traj: &Trajectory,
    forcing: Option<&Trajectory>,
    identity: EnergyIdentity,
) -> Result<EnergyReport> {
    let grid = *traj.grid();
    let tgrid = *traj.time_grid();
    if traj.traces().len() != tgrid.len() {
        return invalid("trajectory has no boundary traces");
    }
    if let Some(f) = forcing {
        if f.grid() != &grid || f.time_grid() != &tgrid {
            return invalid("forcing and trajectory use different grids");
        }
    }
    let dx = grid.dx();
    let xs = grid.nodes();
    let length = grid.length();
    let d1 = DiffOperator::new(grid.len(), dx, 1)?;
    let tr = traj.traces();
    let weighted = identity == EnergyIdentity::Weighted;

    // energy, flux and source at every time node
    let mut energy = Vec::with_capacity(tgrid.len());
    let mut rest = Vec::with_capacity(tgrid.len());
    for (k, v) in traj.frames().iter().enumerate() {
        let (u0, ul) = (tr.u_left[k], tr.u_right[k]);
        let (ux0, uxl) = (tr.ux_left[k], tr.ux_right[k]);
        let (uxx0, uxxl) = (tr.uxx_left[k], tr.uxx_right[k]);
        let source: Vec<f64> = match forcing {
            Some(f) => f
                .frame(k)
                .iter()
                .zip(v)
                .zip(&xs)
                .map(|((fi, vi), x)| 2.0 * fi * vi * if weighted { *x } else { 1.0 })
                .collect(),
            None => vec![0.0; v.len()],
        };
        let source = simpson(&source, dx);
        let (e, flux) = if weighted {
            let xv2: Vec<f64> = v.iter().zip(&xs).map(|(a, x)| x * a * a).collect();
            let v2: Vec<f64> = v.iter().map(|a| a * a).collect();
            let vx2: Vec<f64> = d1.apply(v).iter().map(|a| a * a).collect();
            let bracket_l = 2.0 * length * ul * uxxl - 2.0 * ul * uxl - length * uxl * uxl;
            let bracket_0 = -2.0 * u0 * ux0;
            let flux = length * ul * ul - simpson(&v2, dx) + 3.0 * simpson(&vx2, dx)
                + bracket_l
                - bracket_0;
            (simpson(&xv2, dx), flux)
        } else {
            let v2: Vec<f64> = v.iter().map(|a| a * a).collect();
            let mut flux = ul * ul - u0 * u0 + (2.0 * ul * uxxl - uxl * uxl)
                - (2.0 * u0 * uxx0 - ux0 * ux0);
            if identity == EnergyIdentity::Nonlinear {
                flux += 2.0 / 3.0 * (ul.powi(3) - u0.powi(3));
            }
            (simpson(&v2, dx), flux)
        };
        energy.push(e);
        rest.push(flux - source);
    }
    let dt = tgrid.dt();
    let residuals: Vec<f64> = (0..tgrid.steps())
        .map(|k| (energy[k + 1] - energy[k]) / dt + 0.5 * (rest[k] + rest[k + 1]))
        .collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(EnergyReport {
        identity,
        residuals,
        max_residual,
        order: None,
    })
}

/// `∫₀ᵀ (‖v‖² + ‖v_x‖²) dt`, the local smoothing quantity.
pub fn h1_time_integral(traj: &Trajectory) -> Result<f64> {
    let grid = traj.grid();
    let d1 = DiffOperator::new(grid.len(), grid.dx(), 1)?;
    let per: Vec<f64> = traj
        .frames()
        .iter()
        .map(|v| {
            let vx = d1.apply(v);
            let dens: Vec<f64> = v.iter().zip(&vx).map(|(a, b)| a * a + b * b).collect();
            simpson(&dens, grid.dx())
        })
        .collect();
    Ok(simpson(&per, traj.time_grid().dt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_norm, make_grid};

    #[test]
    fn operator_rows_encode_boundary_conditions() {
        let g = make_grid(1.0, 33).unwrap();
        let op = OperatorMatrix::new(g).unwrap();
        let m = op.matrix();
        let n = g.len();
        assert_eq!(m.get(0, 0), 1.0);
        assert!((1..n).all(|j| m.get(0, j) == 0.0));
        // x² has v_x(L) = 2 and v_xx(L) = 2 exactly
        let v: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let mv = m.mul_vec(&v);
        assert!((mv[n - 2] - 2.0).abs() < 1e-9);
        assert!((mv[n - 1] - 2.0).abs() < 1e-9);
        assert!(op.is_constraint_row(0) && op.is_constraint_row(n - 1) && !op.is_constraint_row(5));
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = make_grid(1.0, 33).unwrap();
        let tg = TimeGrid::new(0.5, 20).unwrap();
        let h = BoundaryTriple::zeros(tg);
        let traj = solve_linear(&Field::zeros(g), None, &h, &tg).unwrap();
        assert_eq!(traj.max_abs(), 0.0);
        let traj = solve_nonlinear_direct(&Field::zeros(g), &h, &tg).unwrap();
        assert_eq!(traj.max_abs(), 0.0);
        let r = energy_report(&traj, None, EnergyIdentity::Nonlinear).unwrap();
        assert_eq!(r.residuals.len(), 20);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn semigroup_identity_at_zero() {
        let g = make_grid(1.0, 33).unwrap();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let phi = Field::from_fn(g, |x| (std::f64::consts::PI * x).sin().powi(2));
        assert_eq!(semigroup_apply(&phi, 0.0, &tg).unwrap(), phi);
        assert!(semigroup_apply(&phi, 0.33, &tg).is_err());
    }

    #[test]
    fn homogeneous_energy_decays() {
        let g = make_grid(1.0, 129).unwrap();
        let tg = TimeGrid::new(1.0, 256).unwrap();
        let phi = Field::from_fn(g, |x| (std::f64::consts::PI * x).sin().powi(2));
        let traj = solve_linear(&phi, None, &BoundaryTriple::zeros(tg), &tg).unwrap();
        let mut prev = l2_norm(&phi);
        for k in 1..tg.len() {
            let cur = l2_norm(&traj.field(k));
            assert!(cur <= prev * (1.0 + 1e-4), "step {k}: {cur} > {prev}");
            prev = cur;
        }
    }

    #[test]
    fn mismatched_time_grids_are_rejected() {
        let g = make_grid(1.0, 33).unwrap();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let other = TimeGrid::new(1.0, 12).unwrap();
        let err = solve_linear(&Field::zeros(g), None, &BoundaryTriple::zeros(other), &tg);
        assert_eq!(err.unwrap_err().name(), "invalid-argument");
    }
}
