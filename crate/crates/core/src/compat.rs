//! The recursion `φ_k` and the `s`-compatibility verdict between initial and
//! boundary data.
//!
//! `φ_k` at a node only depends on the Taylor jet of `φ` there, so the
//! recursion is carried out on truncated Taylor series. Jets come from one
//! global least-squares Chebyshev fit of the samples; derivatives and
//! products are then exact series operations. Repeated finite differences
//! would lose about `dx^{-3}` of accuracy per step of the recursion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryTriple;
use crate::error::{KdvError, Result};
use crate::grid::Field;
use crate::sobolev::SobolevIndex;

/// Relative tolerance of the compatibility equalities.
pub const COMPAT_TOL: f64 = 1e-6;

/// Truncated Taylor series `Σ c_p (x - x₀)^p`.
#[derive(Debug, Clone, PartialEq)]
struct Jet(Vec<f64>);

impl Jet {
    fn derivative(&self) -> Jet {
        Jet(self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, c)| p as f64 * c)
            .collect())
    }

    fn product(&self, other: &Jet) -> Jet {
        let len = self.0.len().min(other.0.len());
        Jet((0..len)
            .map(|p| (0..=p).map(|q| self.0[q] * other.0[p - q]).sum())
            .collect())
    }

    fn add_assign(&mut self, other: &Jet) {
        self.0.truncate(other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    /// `p`-th derivative at the expansion point.
    fn derivative_value(&self, p: usize) -> f64 {
        let fact: f64 = (1..=p).map(|q| q as f64).product();
        self.0[p] * fact
    }
}

/// Least-squares Chebyshev expansion of samples on `[0, L]`.
struct ChebyshevFit {
    coef: Vec<f64>,
    length: f64,
}

impl ChebyshevFit {
    /// Smallest degree (at most `2√n`, where least squares on uniform nodes
    /// stays well conditioned) whose residual reaches roundoff level. Excess
    /// degree would only feed noise into the high derivatives.
    fn new(f: &Field) -> Result<Self> {
        let n = f.grid().len();
        let cap = ((2.0 * (n as f64).sqrt()) as usize).min(n - 1);
        let length = f.grid().length();
        let ys: Vec<f64> = f
            .grid()
            .nodes()
            .iter()
            .map(|x| (2.0 * x / length - 1.0).clamp(-1.0, 1.0))
            .collect();
        let rhs = DVector::from_column_slice(f.values());
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for degree in 2..=cap {
            let basis = DMatrix::from_fn(n, degree + 1, |r, p| (p as f64 * ys[r].acos()).cos());
            let coef = basis
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-13)
                .map_err(|e| KdvError::Internal(format!("Chebyshev fit failed: {e}")))?;
            let resid = (&basis * &coef - &rhs).amax() / scale;
            let coef: Vec<f64> = coef.iter().copied().collect();
            if resid <= 1e-12 {
                return Ok(Self { coef, length });
            }
            if best.as_ref().is_none_or(|(r, _)| resid < *r) {
                best = Some((resid, coef));
            }
        }
        let (resid, coef) = best.ok_or_else(|| {
            KdvError::InvalidArgument(format!("{n} samples are too few for a jet fit"))
        })?;
        log::debug!("Chebyshev fit of degree {} leaves residual {resid:e}", coef.len() - 1);
        Ok(Self { coef, length })
    }

    /// Coefficients of the derivative series (in the `[-1, 1]` variable).
    fn differentiate(c: &[f64]) -> Vec<f64> {
        let n = c.len();
        if n < 2 {
            return vec![0.0];
        }
        let mut d = vec![0.0; n - 1];
        for k in (0..n - 1).rev() {
            let next = if k + 2 < n - 1 { d[k + 2] } else { 0.0 };
            d[k] = next + 2.0 * (k + 1) as f64 * c[k + 1];
        }
        d[0] *= 0.5;
        d
    }

    fn clenshaw(c: &[f64], y: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = ck + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + y * b1 - b2
    }

    /// Taylor jet of order `order` at `x`.
    fn jet_at(&self, x: f64, order: usize) -> Jet {
        let y = 2.0 * x / self.length - 1.0;
        let chain = 2.0 / self.length;
        let mut c = self.coef.clone();
        let mut out = Vec::with_capacity(order + 1);
        let mut scale = 1.0;
        for p in 0..=order {
            if p > 0 {
                scale *= chain / p as f64;
                c = Self::differentiate(&c);
            }
            out.push(Self::clenshaw(&c, y) * scale);
        }
        Jet(out)
    }
}

/// Jets of `φ_0, …, φ_{k_max}` at one point, each keeping at least three
/// coefficients.
fn recursion_jets(phi: Jet, k_max: usize) -> Vec<Jet> {
    let mut seq = vec![phi];
    for k in 1..=k_max {
        let prev = &seq[k - 1];
        let mut sum = prev.derivative().derivative().derivative();
        sum.add_assign(&prev.derivative());
        let mut quad = seq[0].product(&seq[k - 1]);
        for j in 1..k {
            quad.add_assign(&seq[j].product(&seq[k - 1 - j]));
        }
        sum.add_assign(&quad.derivative());
        seq.push(Jet(sum.0.iter().map(|c| -c).collect()));
    }
    seq
}

fn jet_order(k_max: usize) -> usize {
    3 * k_max + 2
}

fn warn_if_unresolved(n: usize, k: usize) {
    if (3 * k) as f64 >= (n as f64).log2() {
        log::warn!(
            "accuracy warning: phi_{k} needs {} derivatives but the grid has only {n} nodes",
            3 * k
        );
    }
}

/// `φ_k` on the grid of `phi`: `φ_0 = φ` and
/// `φ_k = -(φ_{k-1}''' + φ_{k-1}' + Σ_{j<k} (φ_j φ_{k-1-j})')`.
pub fn phi_k(phi: &Field, k: usize) -> Result<Field> {
    let n = phi.grid().len();
    warn_if_unresolved(n, k);
    let order = jet_order(k);
    let fit = ChebyshevFit::new(phi)?;
    let values = phi
        .grid()
        .nodes()
        .iter()
        .map(|&x| recursion_jets(fit.jet_at(x, order), k)[k].0[0])
        .collect();
    Field::new(*phi.grid(), values)
}

/// Which clause of the compatibility definition applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `φ_k(0) = h₁^{(k)}(0)` for `k ≤ ⌊s/3⌋ - 1`.
    Comp1,
    /// adds `φ_k'(L) = h₂^{(k)}(0)`, for `k ≤ ⌊s/3⌋`.
    Comp2,
    /// adds `φ_k''(L) = h₃^{(k)}(0)`, for `k ≤ ⌊s/3⌋ + 1`.
    Comp3,
}

impl Regime {
    /// Regime and highest `k` checked (`None` when vacuous). At the shared
    /// endpoint `s - 3⌊s/3⌋ = 3/2` the stronger third clause is used.
    pub fn for_index(s: f64) -> (Regime, Option<usize>) {
        let q = (s / 3.0).floor();
        let r = s - 3.0 * q;
        let q = q as i64;
        let (regime, top) = if r <= 0.5 {
            (Regime::Comp1, q - 1)
        } else if r < 1.5 {
            (Regime::Comp2, q)
        } else {
            (Regime::Comp3, q + 1)
        };
        (regime, usize::try_from(top).ok())
    }

    fn conditions(self) -> &'static [Condition] {
        match self {
            Regime::Comp1 => &[Condition::LeftValue],
            Regime::Comp2 => &[Condition::LeftValue, Condition::RightSlope],
            Regime::Comp3 => &[
                Condition::LeftValue,
                Condition::RightSlope,
                Condition::RightCurvature,
            ],
        }
    }
}

/// One equality between `φ_k` and a boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `φ_k(0) = h₁^{(k)}(0)`
    LeftValue,
    /// `φ_k'(L) = h₂^{(k)}(0)`
    RightSlope,
    /// `φ_k''(L) = h₃^{(k)}(0)`
    RightCurvature,
}

impl Condition {
    fn channel(self) -> usize {
        match self {
            Condition::LeftValue => 0,
            Condition::RightSlope => 1,
            Condition::RightCurvature => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckedCondition {
    pub k: usize,
    pub regime: Regime,
    pub condition: Condition,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatVerdict {
    pub s: f64,
    pub compatible: bool,
    pub regime: Regime,
    pub checked: Vec<CheckedCondition>,
    /// `s` is one of the half-integers `(2j-1)/2` left out of the theory.
    pub excluded_index: bool,
}

impl CompatVerdict {
    /// First violated condition, if any.
    pub fn witness(&self) -> Option<&CheckedCondition> {
        self.checked.iter().find(|c| !c.holds)
    }
}

/// Whether `s` is one of `1/2, 3/2, 5/2, …`.
pub fn is_excluded_index(s: f64) -> bool {
    let twice = 2.0 * s;
    s > 0.0 && (twice - twice.round()).abs() < 1e-12 && (twice.round() as i64) % 2 == 1
}

/// Checks compatibility using one-sided difference derivatives of the
/// sampled boundary data at `t = 0`.
pub fn check_compat(phi: &Field, h: &BoundaryTriple, s: SobolevIndex) -> Result<CompatVerdict> {
    check_compat_with(phi, |channel, k| h.derivative_at_zero(channel, k), s)
}

/// Like [`check_compat`] with caller-supplied `h_channel^{(k)}(0)`
/// (`channel` 0, 1, 2 for `h₁, h₂, h₃`).
pub fn check_compat_with(
    phi: &Field,
    h_derivative: impl Fn(usize, usize) -> Result<f64>,
    s: SobolevIndex,
) -> Result<CompatVerdict> {
    let s = s.value();
    if s < 0.0 {
        return Err(KdvError::NotApplicable(format!(
            "no compatibility conditions are imposed for s = {s} < 0"
        )));
    }
    let (regime, top) = Regime::for_index(s);
    let excluded_index = is_excluded_index(s);
    let mut checked = Vec::new();
    if let Some(k_max) = top {
        let n = phi.grid().len();
        warn_if_unresolved(n, k_max);
        let order = jet_order(k_max);
        let fit = ChebyshevFit::new(phi)?;
        let left = recursion_jets(fit.jet_at(0.0, order), k_max);
        let right = recursion_jets(fit.jet_at(phi.grid().length(), order), k_max);
        for k in 0..=k_max {
            for &condition in regime.conditions() {
                let lhs = match condition {
                    Condition::LeftValue => left[k].derivative_value(0),
                    Condition::RightSlope => right[k].derivative_value(1),
                    Condition::RightCurvature => right[k].derivative_value(2),
                };
                let rhs = h_derivative(condition.channel(), k)?;
                let tolerance = COMPAT_TOL * (1.0 + lhs.abs());
                checked.push(CheckedCondition {
                    k,
                    regime,
                    condition,
                    lhs,
                    rhs,
                    tolerance,
                    holds: (lhs - rhs).abs() <= tolerance,
                });
            }
        }
    }
    Ok(CompatVerdict {
        s,
        compatible: checked.iter().all(|c| c.holds),
        regime,
        checked,
        excluded_index,
    })
}
