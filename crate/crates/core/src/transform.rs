//! The gauge `u = e^{2t-x} v` taking the KdV boundary problem to a
//! KdV-Burgers problem, with residual and trace checks on sampled solutions.
//!
//! Substituting the gauge gives
//! `v_t + 4v_x - 3v_xx + v_xxx + e^{2t-x}(v v_x - v²) = 0`
//! with `v(0,t) = e^{-2t} h₁`, `(v_x - v)(L,t) = e^{L-2t} h₂` and
//! `(v_xx - v)(L,t) = e^{L-2t}(2h₂ + h₃)`.

use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::error::{invalid, Result};
use crate::grid::{DiffOperator, Trajectory};

/// `v = e^{x-2t} u`
pub fn to_kdvb(u: &Trajectory) -> Result<Trajectory> {
    u.map_frames(|x, t, u| u * (x - 2.0 * t).exp())
}

/// `u = e^{2t-x} v`
pub fn from_kdvb(v: &Trajectory) -> Result<Trajectory> {
    v.map_frames(|x, t, v| v * (2.0 * t - x).exp())
}

/// A KdV trajectory together with its gauge image.
#[derive(Debug, Clone)]
pub struct GaugePair {
    pub u: Trajectory,
    pub v: Trajectory,
}

impl GaugePair {
    pub fn from_kdv(u: Trajectory) -> Result<Self> {
        let v = to_kdvb(&u)?;
        Ok(Self { u, v })
    }

    pub fn from_kdvb(v: Trajectory) -> Result<Self> {
        let u = from_kdvb(&v)?;
        Ok(Self { u, v })
    }

    /// `max |u - e^{2t-x} v| / max(1, max |u|)` over all nodes.
    pub fn mismatch(&self) -> f64 {
        let xs = self.u.grid().nodes();
        let tg = self.u.time_grid();
        let mut worst = 0.0f64;
        for (k, (fu, fv)) in self.u.frames().iter().zip(self.v.frames()).enumerate() {
            let t = tg.time(k);
            for ((u, v), x) in fu.iter().zip(fv).zip(&xs) {
                worst = worst.max((u - (2.0 * t - x).exp() * v).abs());
            }
        }
        worst / self.u.max_abs().max(1.0)
    }
}

/// Pointwise residual of the KdV-Burgers equation, one row per time step.
///
/// Row `k` is evaluated at `t_{k+1/2}` in box form: `(v^{k+1} - v^k)/dt`
/// plus the spatial terms of the averaged frame. Entries are given at the
/// nodes `1..n-2`, where the equation is imposed; the node at `x = 0` and
/// the last two nodes carry boundary conditions instead. Near the ends the
/// stencils are one-sided.
pub fn kdvb_residual_field(v: &Trajectory) -> Result<Vec<Vec<f64>>> {
    let grid = v.grid();
    let tg = v.time_grid();
    let n = grid.len();
    let d1 = DiffOperator::new(n, grid.dx(), 1)?;
    let d2 = DiffOperator::new(n, grid.dx(), 2)?;
    let d3 = DiffOperator::new(n, grid.dx(), 3)?;
    let frames = v.frames();
    let dt = tg.dt();
    let xs = grid.nodes();
    let out = frames
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let mid: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let (v1, v2, v3) = (d1.apply(&mid), d2.apply(&mid), d3.apply(&mid));
            let t = tg.time(k) + 0.5 * dt;
            (1..n - 2)
                .map(|i| {
                    let gauge = (2.0 * t - xs[i]).exp();
                    (pair[1][i] - pair[0][i]) / dt + 4.0 * v1[i] - 3.0 * v2[i] + v3[i]
                        + gauge * (mid[i] * v1[i] - mid[i] * mid[i])
                })
                .collect()
        })
        .collect();
    Ok(out)
}

/// Discrete `L²` norm of the residual rows of [`kdvb_residual_field`], one
/// entry per time step.
pub fn kdvb_residual(v: &Trajectory) -> Result<Vec<f64>> {
    let dx = v.grid().dx();
    Ok(kdvb_residual_field(v)?
        .iter()
        .map(|r| (r.iter().map(|x| x * x).sum::<f64>() * dx).sqrt())
        .collect())
}

/// `(e^{-2t} h₁, e^{L-2t} h₂, e^{L-2t}(2h₂ + h₃))`
pub fn kdvb_boundary_map(h: &BoundaryTriple, length: f64) -> Result<BoundaryTriple> {
    if !(length > 0.0) {
        return invalid(format!("length must be positive, got {length}"));
    }
    let tg = *h.time_grid();
    let left = |k: usize| (-2.0 * tg.time(k)).exp();
    let right = |k: usize| (length - 2.0 * tg.time(k)).exp();
    let m = tg.len();
    let g1 = (0..m).map(|k| left(k) * h.h1()[k]).collect();
    let g2 = (0..m).map(|k| right(k) * h.h2()[k]).collect();
    let g3 = (0..m)
        .map(|k| right(k) * (2.0 * h.h2()[k] + h.h3()[k]))
        .collect();
    BoundaryTriple::new(tg, g1, g2, g3)
}

/// Relative `L²(0, T)` defect of each transformed boundary condition, read
/// off the traces of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDefects {
    pub left_value: f64,
    pub right_slope: f64,
    pub right_curvature: f64,
}

impl TraceDefects {
    pub fn max(&self) -> f64 {
        self.left_value.max(self.right_slope).max(self.right_curvature)
    }
}

pub fn kdvb_trace_defects(v: &Trajectory, h: &BoundaryTriple) -> Result<TraceDefects> {
    let g = kdvb_boundary_map(h, v.grid().length())?;
    let tr = v.traces();
    if tr.len() != g.time_grid().len() {
        return invalid("trajectory and boundary data use different time grids");
    }
    let slope: Vec<f64> = tr.ux_right.iter().zip(&tr.u_right).map(|(a, b)| a - b).collect();
    let curv: Vec<f64> = tr.uxx_right.iter().zip(&tr.u_right).map(|(a, b)| a - b).collect();
    let rel = |got: &[f64], want: &[f64]| {
        let diff: f64 = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = want.iter().map(|b| b * b).sum();
        if norm == 0.0 {
            diff.sqrt()
        } else {
            (diff / norm).sqrt()
        }
    };
    Ok(TraceDefects {
        left_value: rel(&tr.u_left, g.h1()),
        right_slope: rel(&slope, g.h2()),
        right_curvature: rel(&curv, g.h3()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, TimeGrid};

    fn frames_of(f: impl Fn(f64, f64) -> f64) -> Trajectory {
        let g = make_grid(1.0, 33).unwrap();
        let tg = TimeGrid::new(0.5, 16).unwrap();
        Trajectory::zeros(g, tg).map_frames(|x, t, _| f(x, t)).unwrap()
    }

    #[test]
    fn exponential_maps_to_one() {
        let v = to_kdvb(&frames_of(|x, t| (2.0 * t - x).exp())).unwrap();
        for f in v.frames() {
            assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn residual_of_constants() {
        let zero = kdvb_residual(&frames_of(|_, _| 0.0)).unwrap();
        assert!(zero.iter().all(|r| *r == 0.0));
        let one = frames_of(|_, _| 1.0);
        let field = kdvb_residual_field(&one).unwrap();
        let xs = one.grid().nodes();
        for (k, row) in field.iter().enumerate() {
            let t = one.time_grid().time(k) + 0.5 * one.time_grid().dt();
            for (r, x) in row.iter().zip(&xs[1..]) {
                assert!((r + (2.0 * t - x).exp()).abs() < 1e-9 * (2.0 * t - x).exp());
            }
        }
    }

    #[test]
    fn boundary_map_multipliers() {
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let h = BoundaryTriple::from_fns(tg, |_| 1.0, |_| 1.0, |_| 1.0);
        let g = kdvb_boundary_map(&h, 1.0).unwrap();
        let e = 1f64.exp();
        assert_eq!(g.h1()[0], 1.0);
        assert!((g.h2()[0] - e).abs() < 1e-15);
        assert!((g.h3()[0] - 3.0 * e).abs() < 1e-15);
        assert!(kdvb_boundary_map(&BoundaryTriple::zeros(tg), 1.0).unwrap().is_zero());
        assert!(kdvb_boundary_map(&h, 0.0).is_err());
    }
}
