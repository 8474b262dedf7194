use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{fornberg_weights, TimeGrid};
use crate::sobolev::SobolevIndex;

/// Boundary data `(h1, h2, h3)` sampled on a common time grid: `h1` drives
/// `u(0,t)`, `h2` drives `u_x(L,t)` and `h3` drives `u_xx(L,t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTriple {
    time_grid: TimeGrid,
    h1: Vec<f64>,
    h2: Vec<f64>,
    h3: Vec<f64>,
    index: SobolevIndex,
}

impl BoundaryTriple {
    pub fn new(time_grid: TimeGrid, h1: Vec<f64>, h2: Vec<f64>, h3: Vec<f64>) -> Result<Self> {
        for (name, c) in [("h1", &h1), ("h2", &h2), ("h3", &h3)] {
            if c.len() != time_grid.len() {
                return invalid(format!(
                    "{name} has {} samples, time grid has {}",
                    c.len(),
                    time_grid.len()
                ));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return invalid(format!("{name} contains non-finite samples"));
            }
        }
        Ok(Self {
            time_grid,
            h1,
            h2,
            h3,
            index: SobolevIndex::default(),
        })
    }

    pub fn zeros(time_grid: TimeGrid) -> Self {
        let z = vec![0.0; time_grid.len()];
        Self {
            time_grid,
            h1: z.clone(),
            h2: z.clone(),
            h3: z,
            index: SobolevIndex::default(),
        }
    }

    pub fn from_fns(
        time_grid: TimeGrid,
        h1: impl Fn(f64) -> f64,
        h2: impl Fn(f64) -> f64,
        h3: impl Fn(f64) -> f64,
    ) -> Self {
        let ts = time_grid.times();
        Self {
            time_grid,
            h1: ts.iter().map(|&t| h1(t)).collect(),
            h2: ts.iter().map(|&t| h2(t)).collect(),
            h3: ts.iter().map(|&t| h3(t)).collect(),
            index: SobolevIndex::default(),
        }
    }

    /// Tags the data with the regularity class it is meant to represent.
    pub fn with_index(mut self, index: SobolevIndex) -> Self {
        self.index = index;
        self
    }

    pub fn index(&self) -> SobolevIndex {
        self.index
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn h1(&self) -> &[f64] {
        &self.h1
    }

    pub fn h2(&self) -> &[f64] {
        &self.h2
    }

    pub fn h3(&self) -> &[f64] {
        &self.h3
    }

    pub fn channels(&self) -> [&[f64]; 3] {
        [&self.h1, &self.h2, &self.h3]
    }

    /// `(h1, h2, h3)` at time node `k`.
    pub fn at(&self, k: usize) -> [f64; 3] {
        [self.h1[k], self.h2[k], self.h3[k]]
    }

    pub fn scaled(&self, a: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| a * x).collect();
        Self {
            time_grid: self.time_grid,
            h1: s(&self.h1),
            h2: s(&self.h2),
            h3: s(&self.h3),
            index: self.index,
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.time_grid != other.time_grid {
            return invalid("cannot combine boundary data on different time grids");
        }
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Ok(Self {
            time_grid: self.time_grid,
            h1: lin(&self.h1, &other.h1),
            h2: lin(&self.h2, &other.h2),
            h3: lin(&self.h3, &other.h3),
            index: self.index,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.channels().iter().all(|c| c.iter().all(|v| *v == 0.0))
    }

    /// `d^k h_c / dt^k` at `t = 0` from a one-sided stencil of
    /// `max(4, k + 2)` points.
    pub fn derivative_at_zero(&self, channel: usize, k: usize) -> Result<f64> {
        let c = self
            .channels()
            .get(channel)
            .copied()
            .ok_or_else(|| crate::KdvError::InvalidArgument(format!("no channel {channel}")))?;
        if k == 0 {
            return Ok(c[0]);
        }
        let width = (k + 2).max(4);
        if width > c.len() {
            return invalid(format!(
                "derivative of order {k} needs {width} time samples, got {}",
                c.len()
            ));
        }
        let xs: Vec<f64> = (0..width).map(|i| i as f64).collect();
        let w = fornberg_weights(0.0, &xs, k);
        let dt = self.time_grid.dt();
        Ok(w.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / dt.powi(k as i32))
    }
}
