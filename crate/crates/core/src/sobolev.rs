//! Fractional Sobolev norms of sampled signals on an interval.
//!
//! A signal on `[0, L]` is extended by even reflection to `[-L, 2L]`,
//! multiplied by a C² taper that is 1 on `[0, L]` and vanishes at `-L` and
//! `2L`, zero-padded to a period of `4L`, and measured with the Fourier
//! multiplier `(1 + ξ²)^{s/2}`. The result is rescaled so that `s = 0`
//! reproduces [`l2_norm`](crate::grid::l2_norm) exactly; the rescaling factor
//! does not depend on `s`, so monotonicity and homogeneity are preserved.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::error::{invalid, KdvError, Result};
use crate::grid::{simpson, Field, Trajectory};

/// Minimum number of samples accepted by [`hs_norm`].
pub const MIN_SAMPLES: usize = 16;

/// Regularity index restricted to `[-1, 6]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const MIN: f64 = -1.0;
    pub const MAX: f64 = 6.0;

    pub fn new(s: f64) -> Result<Self> {
        if !(Self::MIN..=Self::MAX).contains(&s) {
            return Err(KdvError::UnsupportedIndex(s));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Indices `((s+1)/3, s/3, (s-1)/3)` of the three boundary channels.
    pub fn boundary_exponents(self) -> [f64; 3] {
        [(self.0 + 1.0) / 3.0, self.0 / 3.0, (self.0 - 1.0) / 3.0]
    }
}

impl Default for SobolevIndex {
    fn default() -> Self {
        Self(0.0)
    }
}

fn taper(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Power spectrum `(ξ_k, |F_k|²)` of the tapered even extension, scaled so
/// that the sum of `|F_k|²` equals the periodic L² norm squared.
fn extension_spectrum(values: &[f64], length: f64) -> Vec<(f64, f64)> {
    let m = values.len() - 1;
    let h = length / m as f64;
    let period = 4 * m;
    let mut buf = vec![Complex64::new(0.0, 0.0); period];
    // buffer index j <-> x = (j - m) h, covering [-L, 3L)
    for (j, slot) in buf.iter_mut().enumerate().take(3 * m + 1) {
        let i = j as isize - m as isize;
        let (src, w) = if i < 0 {
            ((-i) as usize, taper((i + m as isize) as f64 / m as f64))
        } else if i as usize <= m {
            (i as usize, 1.0)
        } else {
            (2 * m - i as usize, taper((2 * m as isize - i) as f64 / m as f64))
        };
        *slot = Complex64::new(w * values[src], 0.0);
    }
    FftPlanner::new().plan_fft_forward(period).process(&mut buf);
    let span = period as f64 * h;
    let scale = h / period as f64;
    buf.iter()
        .enumerate()
        .map(|(k, c)| {
            let kk = if k <= period / 2 {
                k as f64
            } else {
                k as f64 - period as f64
            };
            (2.0 * std::f64::consts::PI * kk / span, scale * c.norm_sqr())
        })
        .collect()
}

fn weighted(spectrum: &[(f64, f64)], s: f64) -> f64 {
    spectrum
        .iter()
        .map(|(xi, p)| (1.0 + xi * xi).powf(s) * p)
        .sum::<f64>()
        .sqrt()
}

/// `H^s(0, L)` surrogate norm of uniform samples covering `[0, length]`.
pub fn hs_norm(values: &[f64], length: f64, s: f64) -> Result<f64> {
    let idx = SobolevIndex::new(s)?;
    if values.len() < MIN_SAMPLES {
        return invalid(format!(
            "Sobolev norm needs at least {MIN_SAMPLES} samples, got {}",
            values.len()
        ));
    }
    if !(length.is_finite() && length > 0.0) {
        return invalid(format!("interval length must be positive, got {length}"));
    }
    let h = length / (values.len() - 1) as f64;
    let l2 = simpson(&crate::grid::sq(values), h).max(0.0).sqrt();
    if l2 == 0.0 {
        return Ok(0.0);
    }
    let spectrum = extension_spectrum(values, length);
    let base = weighted(&spectrum, 0.0);
    Ok(weighted(&spectrum, idx.value()) * l2 / base)
}

pub fn hs_norm_field(f: &Field, s: f64) -> Result<f64> {
    hs_norm(f.values(), f.grid().length(), s)
}

/// `||φ||_{H^s} + ||h1||_{H^{(s+1)/3}} + ||h2||_{H^{s/3}} + ||h3||_{H^{(s-1)/3}}`.
pub fn data_norm(phi: &Field, h: &BoundaryTriple, s: f64) -> Result<f64> {
    let idx = SobolevIndex::new(s)?;
    let horizon = h.time_grid().horizon();
    let mut total = hs_norm_field(phi, s)?;
    for (channel, e) in h.channels().iter().zip(idx.boundary_exponents()) {
        total += hs_norm(channel, horizon, e)?;
    }
    Ok(total)
}

/// `sup_t ||u(t)||_{H^s} + (int_0^T ||u(t)||²_{H^{s+1}} dt)^{1/2}`, the
/// computable face of the solution norm.
pub fn z_norm(traj: &Trajectory, s: f64) -> Result<f64> {
    let (sup, smooth) = z_norm_parts(traj, s)?;
    Ok(sup + smooth)
}

/// The two pieces of [`z_norm`]: the `C([0,T]; H^s)` part and the
/// `L²(0,T; H^{s+1})` part.
pub fn z_norm_parts(traj: &Trajectory, s: f64) -> Result<(f64, f64)> {
    SobolevIndex::new(s + 1.0)?;
    let length = traj.grid().length();
    let mut sup = 0.0f64;
    let mut sq = Vec::with_capacity(traj.frames().len());
    for frame in traj.frames() {
        sup = sup.max(hs_norm(frame, length, s)?);
        sq.push(hs_norm(frame, length, s + 1.0)?.powi(2));
    }
    let smooth = simpson(&sq, traj.time_grid().dt()).max(0.0).sqrt();
    Ok((sup, smooth))
}
