//! Numerical laboratory for the Korteweg-de Vries equation
//! `u_t + u_x + u_xxx + u u_x = 0` on a finite interval `(0, L)` with
//! boundary conditions `u(0,t) = h1`, `u_x(L,t) = h2`, `u_xx(L,t) = h3`.

pub mod banded;
pub mod boundary_data;
pub mod boundary_integral;
pub mod bourgain;
pub mod characteristic;
pub mod compat;
pub mod datasets;
pub mod error;
pub mod fit;
pub mod grid;
pub mod picard;
pub mod reference_solver;
pub mod sobolev;
pub mod transform;

pub use boundary_data::BoundaryTriple;
pub use error::{KdvError, Result};
pub use grid::{make_grid, BoundaryTraces, Field, Grid1D, TimeGrid, Trajectory};
