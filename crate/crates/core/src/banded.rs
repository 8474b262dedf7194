//! Banded matrices and their LU factorization with partial pivoting.

use crate::error::{KdvError, Result};

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals,
/// stored row by row with room for the fill-in produced by row pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.lower as isize;
        (off >= 0 && (off as usize) < self.width).then(|| i * self.width + off as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let off = j as isize - i as isize;
        assert!(
            -(self.lower as isize) <= off && off <= self.upper as isize,
            "entry ({i},{j}) outside band"
        );
        let k = self.slot(i, j).expect("checked above");
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Clears row `i`.
    pub fn clear_row(&mut self, i: usize) {
        let start = i * self.width;
        self.data[start..start + self.width].fill(0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization of the row-equilibrated matrix.
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let reach = self.lower + self.upper;
        let mut pivots = Vec::with_capacity(n);
        let mut row_scale = Vec::with_capacity(n);
        for i in 0..n {
            let row = &mut self.data[i * self.width..(i + 1) * self.width];
            let big = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if big == 0.0 {
                return Err(KdvError::SolverFailure(format!("row {i} is zero")));
            }
            row.iter_mut().for_each(|v| *v /= big);
            row_scale.push(1.0 / big);
        }
        for k in 0..n {
            let last = (k + self.lower).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-14) {
                return Err(KdvError::SolverFailure(format!(
                    "zero pivot in banded LU at row {k}"
                )));
            }
            pivots.push(p);
            let right = (k + reach).min(n - 1);
            if p != k {
                for j in k..=right {
                    let a = self.slot(k, j).expect("pivot row in band");
                    let b = self.slot(p, j).expect("candidate row in band");
                    self.data.swap(a, b);
                }
            }
            let diag = self.get(k, k);
            for i in k + 1..=last {
                let sk = self.slot(i, k).expect("sub-diagonal in band");
                let l = self.data[sk] / diag;
                self.data[sk] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=right {
                    let src = self.data[self.slot(k, j).expect("band")];
                    let dst = self.slot(i, j).expect("fill within band");
                    self.data[dst] -= l * src;
                }
            }
        }
        Ok(BandedLu {
            a: self,
            pivots,
            row_scale,
        })
    }
}

/// LU factors of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    pivots: Vec<usize>,
    row_scale: Vec<f64>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for (v, r) in b.iter_mut().zip(&self.row_scale) {
            *v *= r;
        }
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.lower).min(n - 1) {
                    b[i] -= a.get(i, k) * bk;
                }
            }
        }
        let reach = a.lower + a.upper;
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= a.get(i, j) * b[j];
            }
            b[i] = s / a.get(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
