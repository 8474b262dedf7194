//! Named data shapes and seeded random data for experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::error::{invalid, Result};
use crate::grid::{Field, Grid1D, TimeGrid};
use crate::sobolev::data_norm;

/// Initial profiles on `[0, L]`, written in `y = x/L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialShape {
    Zero,
    /// `sin²(πy)(1-y)²`: satisfies the zero-data boundary conditions.
    Bump,
    /// `sin(πy)`
    SineHump,
    /// `exp(-40 (y - 1/2)²)`
    Gaussian,
    /// `(4y(1-y))⁶`: flat to fifth order at both ends.
    Hump,
    /// `x` itself (not rescaled to the unit interval).
    Line,
}

impl InitialShape {
    pub fn eval(self, x: f64, length: f64) -> f64 {
        let y = x / length;
        match self {
            InitialShape::Zero => 0.0,
            InitialShape::Bump => (PI * y).sin().powi(2) * (1.0 - y).powi(2),
            InitialShape::SineHump => (PI * y).sin(),
            InitialShape::Gaussian => (-40.0 * (y - 0.5).powi(2)).exp(),
            InitialShape::Hump => (4.0 * y * (1.0 - y)).powi(6),
            InitialShape::Line => x,
        }
    }

    pub fn sample(self, grid: Grid1D) -> Field {
        Field::from_fn(grid, |x| self.eval(x, grid.length()))
    }
}

/// Boundary signals on `[0, T]`, written in `τ = t/T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalShape {
    Zero,
    /// `sin²(πτ)`
    SinSquared,
    /// `τ²`
    Ramp,
    /// `sin(2πτ)`
    Wave,
    /// `exp(-1/(5τ))`: every derivative vanishes at `τ = 0`.
    FlatStart,
    /// `1`
    Constant,
}

impl SignalShape {
    pub fn eval(self, t: f64, horizon: f64) -> f64 {
        let tau = t / horizon;
        match self {
            SignalShape::Zero => 0.0,
            SignalShape::SinSquared => (PI * tau).sin().powi(2),
            SignalShape::Ramp => tau * tau,
            SignalShape::Wave => (2.0 * PI * tau).sin(),
            SignalShape::FlatStart if tau <= 0.0 => 0.0,
            SignalShape::FlatStart => (-0.2 / tau).exp(),
            SignalShape::Constant => 1.0,
        }
    }
}

/// Samples `amplitude * (φ, h1, h2, h3)` for the given shapes.
pub fn shaped_data(
    grid: Grid1D,
    tgrid: TimeGrid,
    initial: InitialShape,
    signals: [SignalShape; 3],
    amplitude: f64,
) -> (Field, BoundaryTriple) {
    let phi = initial.sample(grid).scaled(amplitude);
    let horizon = tgrid.horizon();
    let h = BoundaryTriple::from_fns(
        tgrid,
        |t| amplitude * signals[0].eval(t, horizon),
        |t| amplitude * signals[1].eval(t, horizon),
        |t| amplitude * signals[2].eval(t, horizon),
    );
    (phi, h)
}

/// Random smooth data, compatible to first order, scaled so that the `s = 0`
/// data norm equals `target_norm`.
///
/// `φ` is a random sine series times `y³(1-y)⁴`, so `φ` and its first three
/// derivatives vanish at both ends; each `h_m` is a random multiple of
/// `t² e^{-t}`-type signals, vanishing to second order at `t = 0`.
pub fn random_compatible_data(
    seed: u64,
    grid: Grid1D,
    tgrid: TimeGrid,
    target_norm: f64,
) -> Result<(Field, BoundaryTriple)> {
    if !(target_norm > 0.0) {
        return invalid(format!("target norm must be positive, got {target_norm}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weights: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let rates: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..3.0));
    let length = grid.length();
    let phi = Field::from_fn(grid, |x| {
        let y = x / length;
        let series: f64 = modes
            .iter()
            .enumerate()
            .map(|(j, a)| a * ((j + 1) as f64 * PI * y).sin())
            .sum();
        40.0 * series * y.powi(3) * (1.0 - y).powi(4)
    });
    let signal = |m: usize| move |t: f64| weights[m] * t * t * (-rates[m] * t).exp();
    let h = BoundaryTriple::from_fns(tgrid, signal(0), signal(1), signal(2));
    let norm = data_norm(&phi, &h, 0.0)?;
    if norm == 0.0 {
        return Ok((phi, h));
    }
    let scale = target_norm / norm;
    Ok((phi.scaled(scale), h.scaled(scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn random_data_hit_the_target_norm() {
        let g = make_grid(1.0, 65).unwrap();
        let tg = TimeGrid::new(1.0, 64).unwrap();
        for seed in 0..5 {
            let (phi, h) = random_compatible_data(seed, g, tg, 0.1).unwrap();
            assert!((data_norm(&phi, &h, 0.0).unwrap() - 0.1).abs() < 1e-12);
            assert_eq!(h.h1()[0], 0.0);
            assert!(phi.values()[0].abs() < 1e-15);
        }
        let (a, _) = random_compatible_data(3, g, tg, 0.1).unwrap();
        let (b, _) = random_compatible_data(3, g, tg, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shapes_scale_linearly() {
        let g = make_grid(2.0, 33).unwrap();
        let tg = TimeGrid::new(1.0, 16).unwrap();
        let shapes = [SignalShape::SinSquared, SignalShape::Zero, SignalShape::Ramp];
        let (phi, h) = shaped_data(g, tg, InitialShape::Bump, shapes, 3.0);
        assert!((phi.values()[8] - 3.0 * InitialShape::Bump.eval(0.5, 2.0)).abs() < 1e-15);
        assert_eq!(h.h3()[16], 3.0);
        assert!(h.h2().iter().all(|v| *v == 0.0));
    }
}
