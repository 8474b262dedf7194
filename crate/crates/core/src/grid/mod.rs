//! Uniform space and time lattices, sampled fields, and trajectories.
//!
//! Everything here is immutable after construction. Solvers build a
//! [`Trajectory`] from frames; boundary trace channels are stored explicitly
//! because the spectral solver produces them independently of the frames.

mod io;
mod quadrature;
mod stencil;

pub use io::{field_to_csv, trajectory_from_json, trajectory_to_csv, trajectory_to_json};
pub use quadrature::{l2_inner, l2_norm, simpson, simpson_samples};
pub use stencil::{differentiate, differentiate_samples, fornberg_weights, DiffOperator};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Smallest admissible number of spatial nodes.
pub const MIN_SPACE_NODES: usize = 8;
/// Smallest admissible number of time steps.
pub const MIN_TIME_STEPS: usize = 4;

/// Uniform lattice `x_i = i * dx`, `i = 0..n`, covering `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return invalid(format!("interval length must be positive, got {length}"));
        }
        if n < MIN_SPACE_NODES {
            return invalid(format!(
                "grid needs at least {MIN_SPACE_NODES} nodes, got {n}"
            ));
        }
        Ok(Self {
            length,
            n,
            dx: length / (n - 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Same interval with `2(n-1)+1` nodes.
    pub fn refined(&self) -> Self {
        Self::new(self.length, 2 * (self.n - 1) + 1).expect("refinement of a valid grid")
    }
}

/// Shorthand for [`Grid1D::new`].
pub fn make_grid(length: f64, n: usize) -> Result<Grid1D> {
    Grid1D::new(length, n)
}

/// Uniform time lattice `t_k = k * dt`, `k = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return invalid(format!("time horizon must be positive, got {horizon}"));
        }
        if steps < MIN_TIME_STEPS {
            return invalid(format!(
                "time grid needs at least {MIN_TIME_STEPS} steps, got {steps}"
            ));
        }
        Ok(Self {
            horizon,
            steps,
            dt: horizon / steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of time nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Index of the node closest to `t`, if `t` lies on the lattice.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        ((self.time(k) - t).abs() <= 1e-9 * self.dt.max(1.0)).then_some(k)
    }

    pub fn refined(&self) -> Self {
        Self::new(self.horizon, 2 * self.steps).expect("refinement of a valid time grid")
    }
}

/// Real samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("field value at node {i} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return invalid("cannot combine fields on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sampled boundary traces of a trajectory, one sample per time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTraces {
    /// u(0, t)
    pub u_left: Vec<f64>,
    /// u(L, t)
    pub u_right: Vec<f64>,
    /// u_x(0, t)
    pub ux_left: Vec<f64>,
    /// u_x(L, t)
    pub ux_right: Vec<f64>,
    /// u_xx(0, t)
    pub uxx_left: Vec<f64>,
    /// u_xx(L, t)
    pub uxx_right: Vec<f64>,
}

impl BoundaryTraces {
    pub fn zeros(len: usize) -> Self {
        Self {
            u_left: vec![0.0; len],
            u_right: vec![0.0; len],
            ux_left: vec![0.0; len],
            ux_right: vec![0.0; len],
            uxx_left: vec![0.0; len],
            uxx_right: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.u_left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_left.is_empty()
    }

    pub(crate) fn channels(&self) -> [&Vec<f64>; 6] {
        [
            &self.u_left,
            &self.u_right,
            &self.ux_left,
            &self.ux_right,
            &self.uxx_left,
            &self.uxx_right,
        ]
    }

    /// Traces read off a single frame with one-sided second-order stencils.
    pub fn push_from_frame(&mut self, values: &[f64], dx: f64) {
        let n = values.len();
        let d1l = fornberg_weights(0.0, &[0.0, 1.0, 2.0], 1);
        let d2l = fornberg_weights(0.0, &[0.0, 1.0, 2.0, 3.0], 2);
        let first = |w: &[f64], vals: &mut dyn Iterator<Item = f64>| -> f64 {
            w.iter().zip(vals).map(|(a, b)| a * b).sum()
        };
        self.u_left.push(values[0]);
        self.u_right.push(values[n - 1]);
        self.ux_left
            .push(first(&d1l, &mut values[..3].iter().copied()) / dx);
        self.ux_right
            .push(-first(&d1l, &mut values[n - 3..].iter().rev().copied()) / dx);
        self.uxx_left
            .push(first(&d2l, &mut values[..4].iter().copied()) / (dx * dx));
        self.uxx_right
            .push(first(&d2l, &mut values[n - 4..].iter().rev().copied()) / (dx * dx));
    }
}

/// Time-indexed sequence of frames on a common grid, with boundary traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: Grid1D,
    time_grid: TimeGrid,
    frames: Vec<Vec<f64>>,
    traces: BoundaryTraces,
}

impl Trajectory {
    /// Builds a trajectory whose traces are read off the frames by one-sided
    /// finite differences.
    pub fn from_frames(grid: Grid1D, time_grid: TimeGrid, frames: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_frames(&grid, &time_grid, &frames)?;
        let mut traces = BoundaryTraces {
            u_left: Vec::with_capacity(frames.len()),
            u_right: Vec::with_capacity(frames.len()),
            ux_left: Vec::with_capacity(frames.len()),
            ux_right: Vec::with_capacity(frames.len()),
            uxx_left: Vec::with_capacity(frames.len()),
            uxx_right: Vec::with_capacity(frames.len()),
        };
        for f in &frames {
            traces.push_from_frame(f, grid.dx());
        }
        Ok(Self {
            grid,
            time_grid,
            frames,
            traces,
        })
    }

    /// Builds a trajectory with externally computed traces.
    pub fn with_traces(
        grid: Grid1D,
        time_grid: TimeGrid,
        frames: Vec<Vec<f64>>,
        traces: BoundaryTraces,
    ) -> Result<Self> {
        Self::check_frames(&grid, &time_grid, &frames)?;
        if traces.channels().iter().any(|c| c.len() != time_grid.len()) {
            return invalid(format!(
                "trace channels must have {} samples",
                time_grid.len()
            ));
        }
        if traces.channels().iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return invalid("trace channel contains non-finite samples");
        }
        Ok(Self {
            grid,
            time_grid,
            frames,
            traces,
        })
    }

    pub fn zeros(grid: Grid1D, time_grid: TimeGrid) -> Self {
        Self {
            grid,
            time_grid,
            frames: vec![vec![0.0; grid.len()]; time_grid.len()],
            traces: BoundaryTraces::zeros(time_grid.len()),
        }
    }

    fn check_frames(grid: &Grid1D, time_grid: &TimeGrid, frames: &[Vec<f64>]) -> Result<()> {
        if frames.len() != time_grid.len() {
            return invalid(format!(
                "expected {} frames, got {}",
                time_grid.len(),
                frames.len()
            ));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.len() != grid.len() {
                return invalid(format!("frame {k} has {} values", f.len()));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return invalid(format!("frame {k} contains non-finite values"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    pub fn field(&self, k: usize) -> Field {
        Field {
            grid: self.grid,
            values: self.frames[k].clone(),
        }
    }

    pub fn traces(&self) -> &BoundaryTraces {
        &self.traces
    }

    /// Pointwise map `u(x_i, t_k) -> g(x_i, t_k, u)`; traces are recomputed
    /// from the mapped frames.
    pub fn map_frames(&self, g: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let xs = self.grid.nodes();
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let t = self.time_grid.time(k);
                f.iter().zip(&xs).map(|(&u, &x)| g(x, t, u)).collect()
            })
            .collect();
        Self::from_frames(self.grid, self.time_grid, frames)
    }

    /// `a * self + b * other` frame by frame (traces combined linearly too).
    pub fn combine(&self, a: f64, other: &Trajectory, b: f64) -> Result<Self> {
        if self.grid != other.grid || self.time_grid != other.time_grid {
            return invalid("cannot combine trajectories on different grids");
        }
        let lin = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
        };
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(x, y)| lin(x, y))
            .collect();
        let (s, o) = (&self.traces, &other.traces);
        let traces = BoundaryTraces {
            u_left: lin(&s.u_left, &o.u_left),
            u_right: lin(&s.u_right, &o.u_right),
            ux_left: lin(&s.ux_left, &o.ux_left),
            ux_right: lin(&s.ux_right, &o.ux_right),
            uxx_left: lin(&s.uxx_left, &o.uxx_left),
            uxx_right: lin(&s.uxx_right, &o.uxx_right),
        };
        Ok(Self {
            grid: self.grid,
            time_grid: self.time_grid,
            frames,
            traces,
        })
    }

    /// The first `steps` time steps (`steps + 1` frames).
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        if steps > self.time_grid.steps() {
            return invalid(format!(
                "prefix of {steps} steps exceeds the {} available",
                self.time_grid.steps()
            ));
        }
        let time_grid = TimeGrid::new(self.time_grid.time(steps), steps)?;
        let cut = |c: &[f64]| c[..=steps].to_vec();
        let t = &self.traces;
        Ok(Self {
            grid: self.grid,
            time_grid,
            frames: self.frames[..=steps].to_vec(),
            traces: BoundaryTraces {
                u_left: cut(&t.u_left),
                u_right: cut(&t.u_right),
                ux_left: cut(&t.ux_left),
                ux_right: cut(&t.ux_right),
                uxx_left: cut(&t.uxx_left),
                uxx_right: cut(&t.uxx_right),
            },
        })
    }

    /// `sup_t ||u(t)||_{L^2}`.
    pub fn sup_l2(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| simpson(&sq(f), self.grid.dx()).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    /// `(int_0^T ||u(t)||^2_{L^2} dt)^{1/2}`.
    pub fn l2_space_time(&self) -> f64 {
        let per_frame: Vec<f64> = self
            .frames
            .iter()
            .map(|f| simpson(&sq(f), self.grid.dx()))
            .collect();
        simpson(&per_frame, self.time_grid.dt()).max(0.0).sqrt()
    }

    /// Relative `L^2(0,T; L^2)` distance `||self - other|| / ||other||`.
    pub fn relative_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        let diff = self.combine(1.0, other, -1.0)?;
        let denom = other.l2_space_time();
        if denom == 0.0 {
            return Ok(diff.l2_space_time());
        }
        Ok(diff.l2_space_time() / denom)
    }

    pub fn max_abs(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn sq(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}
